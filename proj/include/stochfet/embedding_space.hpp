#pragma once

#include <span>
#include <string>
#include <vector>

#include "stochfet/mdn.hpp"
#include "stochfet/rng.hpp"

namespace stochfet {

// Eigen decomposition of a symmetric matrix: values descending, row k of
// `vectors` is the orthonormal eigenvector for values[k].
struct EigenDecomposition {
  std::vector<double> values;
  std::vector<double> vectors;  // row-major, n x n
};

// Cyclic Jacobi rotations, off-diagonal tolerance 1e-12 relative to the
// diagonal scale. shape_error on a size mismatch, domain_error when the
// input is not symmetric, convergence_error if the sweep cap is hit.
EigenDecomposition symmetric_eigen(const std::vector<double>& matrix, int n);

// Gaussian fitted over learned embedding rows. The covariance is stored
// after a PSD clamp: eigenvalues in [-1e-10, 0) are set to zero and the
// matrix rebuilt, so factorization for sampling can never fail.
struct EmbeddingGaussian {
  int dim = 0;
  std::vector<double> mean;
  std::vector<double> covariance;  // row-major dim x dim
};

// Sample mean and 1/(n-1) covariance of the table rows. Needs at least two
// rows (shape_error).
EmbeddingGaussian fit_gaussian(const EmbeddingTable& table);

// e = mean + sum_k sqrt(lambda_k) z_k u_k over the covariance eigenbasis,
// z standard normal. Always consumes dim normal draws, so a zero covariance
// returns the mean while keeping the rng stream position deterministic.
std::vector<double> sample_embedding(const EmbeddingGaussian& g, Rng& rng);

struct PcaModel {
  int input_dim = 0;
  std::vector<double> mean;
  std::vector<double> components;  // row-major, n_components x input_dim
  std::vector<double> variances;   // descending, clamped at zero

  int component_count() const { return static_cast<int>(variances.size()); }
};

// PCA of the sample covariance of the table rows. Components are ordered by
// descending explained variance; each row is signed so its largest-magnitude
// entry is positive. config_error unless 1 <= n_components <= dim.
PcaModel pca_fit(const EmbeddingTable& table, int n_components);

// (v - mean) projected onto the component rows. shape_error unless v has
// the original dimension.
std::vector<double> pca_project(const PcaModel& model,
                                std::span<const double> v);

struct SyntheticDevice {
  std::string label;
  std::vector<double> embedding;
};

// Mixed synthetic-device set: the mean, mean +/- 2 sqrt(lambda_i) along each
// principal axis of the covariance (labels plus2sd_axis_i / minus2sd_axis_i,
// axes 1-based by descending variance), then n_random Gaussian samples
// (labels random_j, 1-based). Size is 1 + 2 dim + n_random.
std::vector<SyntheticDevice> structured_embeddings(const EmbeddingGaussian& g,
                                                   int n_random, Rng& rng);

}  // namespace stochfet
