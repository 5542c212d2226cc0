#include "stochfet/embedding_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stochfet/errors.hpp"

namespace stochfet {

namespace {

// Negative eigenvalues no larger than this in magnitude are rounding debris
// from an exactly PSD sample covariance and get clamped to zero.
constexpr double kPsdSlack = 1e-10;

void check_square(const std::vector<double>& matrix, int n,
                  const char* where) {
  if (n < 1) {
    throw shape_error(std::string(where) + ": dimension must be >= 1");
  }
  if (matrix.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    throw shape_error(std::string(where) + ": expected " + std::to_string(n) +
                      "x" + std::to_string(n) + " matrix, got " +
                      std::to_string(matrix.size()) + " entries");
  }
}

// Mean and 1/(n-1) covariance of the table rows, without the PSD clamp.
void sample_moments(const EmbeddingTable& table, std::vector<double>& mean,
                    std::vector<double>& cov, const char* where) {
  if (table.device_count < 2) {
    throw shape_error(std::string(where) + ": need at least 2 embedding rows, got " +
                      std::to_string(table.device_count));
  }
  if (table.dim < 1) {
    throw shape_error(std::string(where) + ": embedding dimension must be >= 1");
  }
  const int n = table.device_count;
  const int dim = table.dim;
  mean.assign(static_cast<std::size_t>(dim), 0.0);
  for (int r = 0; r < n; ++r) {
    const auto row = table.row(r);
    for (int j = 0; j < dim; ++j) {
      mean[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)];
    }
  }
  for (double& m : mean) {
    m /= static_cast<double>(n);
  }
  cov.assign(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim),
             0.0);
  std::vector<double> centered(static_cast<std::size_t>(dim));
  for (int r = 0; r < n; ++r) {
    const auto row = table.row(r);
    for (int j = 0; j < dim; ++j) {
      centered[static_cast<std::size_t>(j)] =
          row[static_cast<std::size_t>(j)] - mean[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) {
        cov[static_cast<std::size_t>(i) * static_cast<std::size_t>(dim) +
            static_cast<std::size_t>(j)] +=
            centered[static_cast<std::size_t>(i)] *
            centered[static_cast<std::size_t>(j)];
      }
    }
  }
  for (double& c : cov) {
    c /= static_cast<double>(n - 1);
  }
}

// Flip each eigenvector row so its largest-magnitude entry is positive;
// ties resolve to the first such entry.
void apply_sign_convention(std::vector<double>& rows, int count, int dim) {
  for (int k = 0; k < count; ++k) {
    double* row = rows.data() + static_cast<std::size_t>(k) *
                                    static_cast<std::size_t>(dim);
    int arg = 0;
    for (int j = 1; j < dim; ++j) {
      if (std::fabs(row[j]) > std::fabs(row[arg])) {
        arg = j;
      }
    }
    if (row[arg] < 0.0) {
      for (int j = 0; j < dim; ++j) {
        row[j] = -row[j];
      }
    }
  }
}

void check_gaussian(const EmbeddingGaussian& g, const char* where) {
  if (g.dim < 1) {
    throw shape_error(std::string(where) + ": dimension must be >= 1");
  }
  if (g.mean.size() != static_cast<std::size_t>(g.dim)) {
    throw shape_error(std::string(where) + ": mean length mismatch");
  }
  check_square(g.covariance, g.dim, where);
}

EigenDecomposition clamped_eigen(const std::vector<double>& cov, int dim,
                                 const char* where) {
  EigenDecomposition eig = symmetric_eigen(cov, dim);
  for (double& value : eig.values) {
    if (value < -kPsdSlack) {
      throw domain_error(std::string(where) + ": covariance eigenvalue " +
                         std::to_string(value) + " is negative beyond slack");
    }
    if (value < 0.0) {
      value = 0.0;
    }
  }
  return eig;
}

}  // namespace

EigenDecomposition symmetric_eigen(const std::vector<double>& matrix, int n) {
  check_square(matrix, n, "symmetric_eigen");
  const std::size_t un = static_cast<std::size_t>(n);
  double scale = 1.0;
  for (int i = 0; i < n; ++i) {
    scale = std::max(scale, std::fabs(matrix[static_cast<std::size_t>(i) * un +
                                             static_cast<std::size_t>(i)]));
    for (int j = i + 1; j < n; ++j) {
      const double a = matrix[static_cast<std::size_t>(i) * un +
                              static_cast<std::size_t>(j)];
      const double b = matrix[static_cast<std::size_t>(j) * un +
                              static_cast<std::size_t>(i)];
      if (std::fabs(a - b) > 1e-9 * std::max(1.0, std::max(std::fabs(a), std::fabs(b)))) {
        throw domain_error("symmetric_eigen: matrix is not symmetric at (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }

  std::vector<double> a = matrix;
  // Work on the exactly symmetrized copy so rotations stay consistent.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double m = 0.5 * (a[static_cast<std::size_t>(i) * un +
                                static_cast<std::size_t>(j)] +
                              a[static_cast<std::size_t>(j) * un +
                                static_cast<std::size_t>(i)]);
      a[static_cast<std::size_t>(i) * un + static_cast<std::size_t>(j)] = m;
      a[static_cast<std::size_t>(j) * un + static_cast<std::size_t>(i)] = m;
    }
  }
  std::vector<double> v(un * un, 0.0);
  for (int i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i) * un + static_cast<std::size_t>(i)] = 1.0;
  }

  const double tol = 1e-12 * scale;
  const int max_sweeps = 100;
  auto at = [&](std::vector<double>& m, int r, int c) -> double& {
    return m[static_cast<std::size_t>(r) * un + static_cast<std::size_t>(c)];
  };

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        off = std::max(off, std::fabs(at(a, p, q)));
      }
    }
    if (off <= tol) {
      EigenDecomposition out;
      std::vector<int> idx(static_cast<std::size_t>(n));
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) {
        return at(a, x, x) > at(a, y, y);
      });
      out.values.resize(un);
      out.vectors.resize(un * un);
      for (int k = 0; k < n; ++k) {
        out.values[static_cast<std::size_t>(k)] = at(a, idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(k)]);
        for (int j = 0; j < n; ++j) {
          // Eigenvectors accumulate as columns of v.
          out.vectors[static_cast<std::size_t>(k) * un +
                      static_cast<std::size_t>(j)] =
              at(v, j, idx[static_cast<std::size_t>(k)]);
        }
      }
      return out;
    }

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(a, p, q);
        if (std::fabs(apq) <= tol * 1e-3) {
          continue;
        }
        const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(a, k, p);
          const double akq = at(a, k, q);
          at(a, k, p) = c * akp - s * akq;
          at(a, k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(a, p, k);
          const double aqk = at(a, q, k);
          at(a, p, k) = c * apk - s * aqk;
          at(a, q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = at(v, k, p);
          const double vkq = at(v, k, q);
          at(v, k, p) = c * vkp - s * vkq;
          at(v, k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  throw convergence_error("symmetric_eigen: no convergence in 100 sweeps");
}

EmbeddingGaussian fit_gaussian(const EmbeddingTable& table) {
  EmbeddingGaussian g;
  g.dim = table.dim;
  std::vector<double> cov;
  sample_moments(table, g.mean, cov, "fit_gaussian");

  const EigenDecomposition eig = clamped_eigen(cov, g.dim, "fit_gaussian");
  const std::size_t dim = static_cast<std::size_t>(g.dim);
  g.covariance.assign(dim * dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    const double* u = eig.vectors.data() + k * dim;
    const double lambda = eig.values[k];
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        g.covariance[i * dim + j] += lambda * u[i] * u[j];
      }
    }
  }
  return g;
}

std::vector<double> sample_embedding(const EmbeddingGaussian& g, Rng& rng) {
  check_gaussian(g, "sample_embedding");
  const EigenDecomposition eig =
      clamped_eigen(g.covariance, g.dim, "sample_embedding");
  const std::size_t dim = static_cast<std::size_t>(g.dim);
  std::vector<double> e = g.mean;
  for (std::size_t k = 0; k < dim; ++k) {
    const double step = std::sqrt(eig.values[k]) * rng.normal();
    const double* u = eig.vectors.data() + k * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      e[i] += step * u[i];
    }
  }
  return e;
}

PcaModel pca_fit(const EmbeddingTable& table, int n_components) {
  if (n_components < 1 || n_components > table.dim) {
    throw config_error("pca_fit: n_components must lie in [1, " +
                       std::to_string(table.dim) + "], got " +
                       std::to_string(n_components));
  }
  PcaModel model;
  model.input_dim = table.dim;
  std::vector<double> cov;
  sample_moments(table, model.mean, cov, "pca_fit");

  EigenDecomposition eig = clamped_eigen(cov, table.dim, "pca_fit");
  const std::size_t dim = static_cast<std::size_t>(table.dim);
  const std::size_t count = static_cast<std::size_t>(n_components);
  model.components.assign(eig.vectors.begin(),
                          eig.vectors.begin() +
                              static_cast<std::ptrdiff_t>(count * dim));
  model.variances.assign(eig.values.begin(),
                         eig.values.begin() +
                             static_cast<std::ptrdiff_t>(count));
  apply_sign_convention(model.components, n_components, table.dim);
  return model;
}

std::vector<double> pca_project(const PcaModel& model,
                                std::span<const double> v) {
  if (v.size() != static_cast<std::size_t>(model.input_dim)) {
    throw shape_error("pca_project: expected vector of length " +
                      std::to_string(model.input_dim) + ", got " +
                      std::to_string(v.size()));
  }
  const std::size_t dim = static_cast<std::size_t>(model.input_dim);
  const std::size_t count = static_cast<std::size_t>(model.component_count());
  std::vector<double> out(count, 0.0);
  for (std::size_t k = 0; k < count; ++k) {
    const double* row = model.components.data() + k * dim;
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      acc += row[j] * (v[j] - model.mean[j]);
    }
    out[k] = acc;
  }
  return out;
}

std::vector<SyntheticDevice> structured_embeddings(const EmbeddingGaussian& g,
                                                   int n_random, Rng& rng) {
  if (n_random < 0) {
    throw domain_error("structured_embeddings: n_random must be >= 0");
  }
  check_gaussian(g, "structured_embeddings");
  EigenDecomposition eig =
      clamped_eigen(g.covariance, g.dim, "structured_embeddings");
  apply_sign_convention(eig.vectors, g.dim, g.dim);

  const std::size_t dim = static_cast<std::size_t>(g.dim);
  std::vector<SyntheticDevice> out;
  out.reserve(1 + 2 * dim + static_cast<std::size_t>(n_random));
  out.push_back({"mean", g.mean});
  for (std::size_t k = 0; k < dim; ++k) {
    const double step = 2.0 * std::sqrt(eig.values[k]);
    const double* u = eig.vectors.data() + k * dim;
    SyntheticDevice plus{"plus2sd_axis_" + std::to_string(k + 1), g.mean};
    SyntheticDevice minus{"minus2sd_axis_" + std::to_string(k + 1), g.mean};
    for (std::size_t i = 0; i < dim; ++i) {
      plus.embedding[i] += step * u[i];
      minus.embedding[i] -= step * u[i];
    }
    out.push_back(std::move(plus));
    out.push_back(std::move(minus));
  }
  for (int j = 0; j < n_random; ++j) {
    out.push_back({"random_" + std::to_string(j + 1), sample_embedding(g, rng)});
  }
  return out;
}

}  // namespace stochfet
