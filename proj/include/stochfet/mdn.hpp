#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stochfet/math_kernel.hpp"
#include "stochfet/rng.hpp"

namespace stochfet {

// Architecture of the mixture density network. The input is the scaled gate
// voltage, optionally concatenated with a per-device embedding; the output
// head carries 3K raw values (component logits, means, pre-softplus widths).
struct NetworkConfig {
  int mixture_components = 3;
  std::vector<int> hidden_sizes = {64, 64};
  int embedding_dim = 4;
  bool use_embeddings = true;
  double sigma_floor = 1e-6;

  int input_dim() const {
    return 1 + (use_embeddings ? embedding_dim : 0);
  }
  int output_dim() const { return 3 * mixture_components; }

  // config_error unless K >= 1, hidden sizes >= 1, sigma_floor > 0 and the
  // embedding dimension is >= 1 whenever embeddings are enabled.
  void validate() const;
};

// One affine layer, weights row-major (out x in).
struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

struct NetworkParams {
  std::vector<Layer> layers;  // hidden layers followed by the linear head
};

// Learned per-device embedding rows, row-major (device_count x dim).
struct EmbeddingTable {
  int device_count = 0;
  int dim = 0;
  std::vector<double> values;

  std::span<const double> row(int device) const;  // lookup_error on bad id
  std::span<double> row(int device);
};

// Output distribution at one voltage: a K-component Gaussian mixture.
// sigma_floor records the floor baked into the sigmas so loss gradients can
// chain back through softplus without access to the NetworkConfig.
struct MixtureParams {
  SimplexVector alphas;
  std::vector<double> mus;
  std::vector<double> sigmas;
  double sigma_floor = 0.0;

  int components() const { return static_cast<int>(alphas.size()); }

  // shape_error on mismatched lengths or K = 0; domain_error unless alphas
  // lie on the simplex (1e-9 tolerance) and sigmas >= sigma_floor > 0.
  void validate() const;
};

// Mixture density at x (untruncated).
double mixture_pdf(const MixtureParams& mix, double x);

// Fan-in-scaled uniform weights, zero biases.
NetworkParams init_params(const NetworkConfig& config, Rng& rng);

// Embedding rows drawn N(0, 0.1^2).
EmbeddingTable init_embeddings(const NetworkConfig& config, int device_count,
                               Rng& rng);

// Per-layer intermediate state kept by the cached forward pass so backward()
// can run without recomputing. Reused across samples to avoid reallocation.
struct ForwardCache {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;  // affine outputs per layer
  std::vector<std::vector<double>> act;  // activations per layer
};

// Gradient accumulator with the same shapes as NetworkParams plus the
// embedding row and the scalar voltage input.
struct Gradients {
  std::vector<Layer> layers;
  std::vector<double> embedding;
  double d_v = 0.0;

  void zero();
};

Gradients make_gradients(const NetworkConfig& config,
                         const NetworkParams& params);

// Forward pass for a network without embeddings.
MixtureParams forward(const NetworkConfig& config, const NetworkParams& params,
                      double v_scaled);

// Forward pass with an embedding row. The row length must equal
// config.embedding_dim (shape_error), and must be empty when embeddings are
// disabled.
MixtureParams forward_with_embedding(const NetworkConfig& config,
                                     const NetworkParams& params,
                                     std::span<const double> embedding,
                                     double v_scaled);

// Forward pass that records the per-layer state needed by backward().
MixtureParams forward_cached(const NetworkConfig& config,
                             const NetworkParams& params,
                             std::span<const double> embedding,
                             double v_scaled, ForwardCache& cache);

// Backpropagate a gradient with respect to the 3K raw head outputs
// (logits | mus | pre-softplus sigmas) through the cached pass, accumulating
// into out. Caller zeroes out at batch boundaries.
void backward(const NetworkConfig& config, const NetworkParams& params,
              const ForwardCache& cache, std::span<const double> head_grad,
              Gradients& out);

}  // namespace stochfet
