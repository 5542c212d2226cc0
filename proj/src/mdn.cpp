#include "stochfet/mdn.hpp"

#include <cmath>
#include <sstream>

#include "stochfet/errors.hpp"

namespace stochfet {

void NetworkConfig::validate() const {
  if (mixture_components < 1)
    throw config_error("NetworkConfig: mixture_components must be >= 1");
  if (hidden_sizes.empty())
    throw config_error("NetworkConfig: at least one hidden layer required");
  for (int h : hidden_sizes) {
    if (h < 1) throw config_error("NetworkConfig: hidden sizes must be >= 1");
  }
  if (use_embeddings && embedding_dim < 1)
    throw config_error(
        "NetworkConfig: embedding_dim must be >= 1 when embeddings are on");
  if (!(sigma_floor > 0.0))
    throw config_error("NetworkConfig: sigma_floor must be positive");
}

std::span<const double> EmbeddingTable::row(int device) const {
  if (device < 0 || device >= device_count) {
    std::ostringstream msg;
    msg << "EmbeddingTable: device id " << device << " out of range [0, "
        << device_count << ")";
    throw lookup_error(msg.str());
  }
  return {values.data() + static_cast<std::size_t>(device) * dim,
          static_cast<std::size_t>(dim)};
}

std::span<double> EmbeddingTable::row(int device) {
  if (device < 0 || device >= device_count) {
    std::ostringstream msg;
    msg << "EmbeddingTable: device id " << device << " out of range [0, "
        << device_count << ")";
    throw lookup_error(msg.str());
  }
  return {values.data() + static_cast<std::size_t>(device) * dim,
          static_cast<std::size_t>(dim)};
}

void MixtureParams::validate() const {
  std::size_t k = alphas.size();
  if (k == 0) throw shape_error("MixtureParams: no components");
  if (mus.size() != k || sigmas.size() != k)
    throw shape_error("MixtureParams: component count mismatch");
  double sum = 0.0;
  for (double a : alphas) {
    if (!(a >= 0.0)) throw domain_error("MixtureParams: negative weight");
    sum += a;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw domain_error("MixtureParams: weights do not sum to 1");
  if (!(sigma_floor > 0.0))
    throw domain_error("MixtureParams: sigma_floor must be positive");
  for (double s : sigmas) {
    if (!(s >= sigma_floor))
      throw domain_error("MixtureParams: sigma below floor");
  }
}

double mixture_pdf(const MixtureParams& mix, double x) {
  double p = 0.0;
  for (int k = 0; k < mix.components(); ++k) {
    double z = (x - mix.mus[k]) / mix.sigmas[k];
    p += mix.alphas[k] * std_normal_pdf(z) / mix.sigmas[k];
  }
  return p;
}

NetworkParams init_params(const NetworkConfig& config, Rng& rng) {
  config.validate();
  NetworkParams params;
  int in = config.input_dim();
  std::vector<int> outs = config.hidden_sizes;
  outs.push_back(config.output_dim());
  for (int out : outs) {
    Layer layer;
    layer.in = in;
    layer.out = out;
    layer.w.resize(static_cast<std::size_t>(in) * out);
    layer.b.assign(out, 0.0);
    double limit = std::sqrt(1.0 / in);
    for (double& w : layer.w) w = limit * (2.0 * rng.uniform() - 1.0);
    params.layers.push_back(std::move(layer));
    in = out;
  }
  return params;
}

EmbeddingTable init_embeddings(const NetworkConfig& config, int device_count,
                               Rng& rng) {
  config.validate();
  if (device_count < 1)
    throw config_error("init_embeddings: device_count must be >= 1");
  EmbeddingTable table;
  table.device_count = device_count;
  table.dim = config.embedding_dim;
  table.values.resize(static_cast<std::size_t>(device_count) * table.dim);
  for (double& v : table.values) v = 0.1 * rng.normal();
  return table;
}

void Gradients::zero() {
  for (Layer& layer : layers) {
    std::fill(layer.w.begin(), layer.w.end(), 0.0);
    std::fill(layer.b.begin(), layer.b.end(), 0.0);
  }
  std::fill(embedding.begin(), embedding.end(), 0.0);
  d_v = 0.0;
}

Gradients make_gradients(const NetworkConfig& config,
                         const NetworkParams& params) {
  Gradients g;
  for (const Layer& layer : params.layers) {
    Layer zero;
    zero.in = layer.in;
    zero.out = layer.out;
    zero.w.assign(layer.w.size(), 0.0);
    zero.b.assign(layer.b.size(), 0.0);
    g.layers.push_back(std::move(zero));
  }
  g.embedding.assign(config.use_embeddings ? config.embedding_dim : 0, 0.0);
  return g;
}

namespace {

void check_shapes(const NetworkConfig& config, const NetworkParams& params,
                  std::span<const double> embedding) {
  if (config.use_embeddings) {
    if (static_cast<int>(embedding.size()) != config.embedding_dim)
      throw shape_error("forward: embedding length does not match config");
  } else if (!embedding.empty()) {
    throw shape_error("forward: embedding passed to a no-embedding network");
  }
  if (params.layers.size() != config.hidden_sizes.size() + 1)
    throw shape_error("forward: layer count does not match config");
  if (params.layers.front().in != config.input_dim())
    throw shape_error("forward: input width does not match config");
  if (params.layers.back().out != config.output_dim())
    throw shape_error("forward: head width does not match config");
}

void affine(const Layer& layer, const std::vector<double>& x,
            std::vector<double>& out) {
  out.resize(layer.out);
  const double* w = layer.w.data();
  for (int o = 0; o < layer.out; ++o) {
    double acc = layer.b[o];
    const double* row = w + static_cast<std::size_t>(o) * layer.in;
    for (int i = 0; i < layer.in; ++i) acc += row[i] * x[i];
    out[o] = acc;
  }
}

MixtureParams head_to_mixture(const NetworkConfig& config,
                              const std::vector<double>& head) {
  int k = config.mixture_components;
  MixtureParams mix;
  mix.alphas = softmax({head.begin(), head.begin() + k});
  mix.mus.assign(head.begin() + k, head.begin() + 2 * k);
  mix.sigmas.resize(k);
  for (int i = 0; i < k; ++i)
    mix.sigmas[i] = softplus(head[2 * k + i]) + config.sigma_floor;
  mix.sigma_floor = config.sigma_floor;
  return mix;
}

}  // namespace

MixtureParams forward_cached(const NetworkConfig& config,
                             const NetworkParams& params,
                             std::span<const double> embedding,
                             double v_scaled, ForwardCache& cache) {
  check_shapes(config, params, embedding);
  std::size_t n_layers = params.layers.size();
  cache.input.resize(config.input_dim());
  cache.input[0] = v_scaled;
  for (std::size_t i = 0; i < embedding.size(); ++i)
    cache.input[i + 1] = embedding[i];
  cache.pre.resize(n_layers);
  cache.act.resize(n_layers);

  const std::vector<double>* x = &cache.input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    affine(params.layers[l], *x, cache.pre[l]);
    if (l + 1 < n_layers) {
      cache.act[l].resize(cache.pre[l].size());
      for (std::size_t i = 0; i < cache.pre[l].size(); ++i)
        cache.act[l][i] = mish(cache.pre[l][i]);
      x = &cache.act[l];
    } else {
      cache.act[l] = cache.pre[l];  // linear head
    }
  }
  return head_to_mixture(config, cache.act.back());
}

MixtureParams forward_with_embedding(const NetworkConfig& config,
                                     const NetworkParams& params,
                                     std::span<const double> embedding,
                                     double v_scaled) {
  ForwardCache cache;
  return forward_cached(config, params, embedding, v_scaled, cache);
}

MixtureParams forward(const NetworkConfig& config, const NetworkParams& params,
                      double v_scaled) {
  return forward_with_embedding(config, params, {}, v_scaled);
}

void backward(const NetworkConfig& config, const NetworkParams& params,
              const ForwardCache& cache, std::span<const double> head_grad,
              Gradients& out) {
  std::size_t n_layers = params.layers.size();
  if (head_grad.size() != static_cast<std::size_t>(config.output_dim()))
    throw shape_error("backward: head gradient width mismatch");
  if (out.layers.size() != n_layers)
    throw shape_error("backward: gradient accumulator shape mismatch");

  std::vector<double> delta(head_grad.begin(), head_grad.end());
  std::vector<double> next;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Layer& layer = params.layers[l];
    Layer& grad = out.layers[l];
    const std::vector<double>& below =
        l == 0 ? cache.input : cache.act[l - 1];
    for (int o = 0; o < layer.out; ++o) {
      double d = delta[o];
      grad.b[o] += d;
      double* grow = grad.w.data() + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) grow[i] += d * below[i];
    }
    // Propagate to the layer below: W^T delta, then the activation chain.
    next.assign(layer.in, 0.0);
    const double* w = layer.w.data();
    for (int o = 0; o < layer.out; ++o) {
      double d = delta[o];
      const double* row = w + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) next[i] += row[i] * d;
    }
    if (l > 0) {
      for (int i = 0; i < layer.in; ++i)
        next[i] *= mish_prime(cache.pre[l - 1][i]);
    }
    delta.swap(next);
  }

  out.d_v += delta[0];
  for (std::size_t i = 0; i < out.embedding.size(); ++i)
    out.embedding[i] += delta[i + 1];
}

}  // namespace stochfet
