#include "stochfet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "stochfet/errors.hpp"
#include "stochfet/rng.hpp"
#include "stochfet/truncated_mixture.hpp"

namespace stochfet {

void Dataset::validate() const {
  if (points.empty()) {
    throw shape_error("dataset: no points");
  }
  if (device_count < 1) {
    throw shape_error("dataset: device_count must be >= 1, got " +
                      std::to_string(device_count));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const DataPoint& p = points[i];
    if (p.device_id < 0 || p.device_id >= device_count) {
      throw domain_error("dataset: point " + std::to_string(i) +
                         " has device id " + std::to_string(p.device_id) +
                         " outside [0, " + std::to_string(device_count) + ")");
    }
    if (!std::isfinite(p.v_gate) || !std::isfinite(p.i_drain)) {
      throw domain_error("dataset: point " + std::to_string(i) +
                         " has a non-finite value");
    }
    if (p.i_drain < 0.0) {
      throw domain_error("dataset: point " + std::to_string(i) +
                         " has negative current " + std::to_string(p.i_drain));
    }
  }
}

Scaling fit_scaling(const Dataset& data) {
  data.validate();
  const double n = static_cast<double>(data.points.size());
  double v_sum = 0.0;
  double i_max = 0.0;
  for (const DataPoint& p : data.points) {
    v_sum += p.v_gate;
    i_max = std::max(i_max, p.i_drain);
  }
  Scaling s;
  s.v_mean = v_sum / n;
  double ss = 0.0;
  for (const DataPoint& p : data.points) {
    const double d = p.v_gate - s.v_mean;
    ss += d * d;
  }
  const double v_std = std::sqrt(ss / n);
  // A single-voltage dataset still scales cleanly with unit spread.
  s.v_std = v_std > 0.0 ? v_std : 1.0;
  if (!(i_max > 0.0)) {
    throw config_error("fit_scaling: all currents are zero");
  }
  s.i_scale = i_max;
  return s;
}

void TrainConfig::validate() const {
  if (epochs < 0) {
    throw config_error("train config: epochs must be >= 0");
  }
  if (batch_size < 1) {
    throw config_error("train config: batch_size must be >= 1");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw config_error("train config: learning_rate must be positive");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw config_error("train config: betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) {
    throw config_error("train config: adam_eps must be positive");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction <= 0.9)) {
    throw config_error("train config: holdout_fraction must lie in [0, 0.9]");
  }
}

namespace {

double head_loss(const MixtureParams& mix, double y, LossKind kind) {
  return kind == LossKind::kCrps ? crps_mixture(mix, y) : gnll_loss(mix, y);
}

HeadGradient head_loss_gradient(const MixtureParams& mix, double y,
                                LossKind kind) {
  return kind == LossKind::kCrps ? crps_gradient(mix, y)
                                 : gnll_gradient(mix, y);
}

// First-moment/second-moment pair for one Adam-managed parameter block.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

void adam_step(std::span<double> theta, std::span<const double> grad,
               AdamState& state, std::size_t offset, long t,
               const TrainConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    double& m = state.m[offset + i];
    double& v = state.v[offset + i];
    const double g = grad[i];
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
  }
}

std::span<const double> embedding_or_empty(const TrainedModel& model,
                                           int device_id) {
  if (!model.network.use_embeddings) {
    return {};
  }
  return model.embeddings.row(device_id);
}

// Per-device stratified split: every device with at least two samples keeps
// at least one point on each side. Deterministic given the dataset order and
// the rng state.
void split_holdout(const Dataset& data, double fraction, Rng& rng,
                   std::vector<std::size_t>& train_idx,
                   std::vector<std::size_t>& holdout_idx) {
  train_idx.clear();
  holdout_idx.clear();
  std::vector<std::vector<std::size_t>> by_device(
      static_cast<std::size_t>(data.device_count));
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    by_device[static_cast<std::size_t>(data.points[i].device_id)].push_back(i);
  }
  for (std::vector<std::size_t>& group : by_device) {
    if (group.empty()) {
      continue;
    }
    for (std::size_t i = group.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(group[i], group[j]);
    }
    std::size_t n_hold = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(group.size()) + 0.5));
    if (fraction > 0.0 && group.size() >= 2 && n_hold == 0) {
      n_hold = 1;
    }
    if (n_hold >= group.size()) {
      n_hold = group.size() - 1;
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      (i < n_hold ? holdout_idx : train_idx).push_back(group[i]);
    }
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(holdout_idx.begin(), holdout_idx.end());
}

double mean_loss_over(const NetworkConfig& net, const NetworkParams& params,
                      const EmbeddingTable& emb, const Scaling& scaling,
                      const Dataset& data,
                      const std::vector<std::size_t>& idx, LossKind kind) {
  if (idx.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double total = 0.0;
  for (std::size_t i : idx) {
    const DataPoint& p = data.points[i];
    std::span<const double> row =
        net.use_embeddings ? emb.row(p.device_id) : std::span<const double>{};
    const MixtureParams mix =
        forward_with_embedding(net, params, row, scaling.scale_v(p.v_gate));
    total += head_loss(mix, scaling.scale_i(p.i_drain), kind);
  }
  return total / static_cast<double>(idx.size());
}

}  // namespace

TrainedModel train(const NetworkConfig& network, const TrainConfig& config,
                   const Dataset& data) {
  network.validate();
  config.validate();
  data.validate();

  TrainedModel model;
  model.network = network;
  model.scaling = fit_scaling(data);

  Rng rng(config.seed);
  model.params = init_params(network, rng);
  if (network.use_embeddings) {
    model.embeddings = init_embeddings(network, data.device_count, rng);
  }

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> holdout_idx;
  split_holdout(data, config.holdout_fraction, rng, train_idx, holdout_idx);

  if (config.epochs == 0) {
    return model;
  }

  // Dense Adam over the concatenated layer parameters.
  std::size_t weight_count = 0;
  for (const Layer& layer : model.params.layers) {
    weight_count += layer.w.size() + layer.b.size();
  }
  AdamState weight_state;
  weight_state.m.assign(weight_count, 0.0);
  weight_state.v.assign(weight_count, 0.0);
  long weight_t = 0;

  // Lazy per-row Adam for the embedding table: rows keep their own moments
  // and step counts and are only ever touched by their own device's samples.
  AdamState emb_state;
  std::vector<long> emb_t;
  const int dim = network.embedding_dim;
  if (network.use_embeddings) {
    emb_state.m.assign(model.embeddings.values.size(), 0.0);
    emb_state.v.assign(model.embeddings.values.size(), 0.0);
    emb_t.assign(static_cast<std::size_t>(data.device_count), 0);
  }

  Gradients grads = make_gradients(network, model.params);
  std::vector<double> emb_accum(
      network.use_embeddings ? model.embeddings.values.size() : 0, 0.0);
  std::vector<int> touched;
  std::vector<char> is_touched(
      network.use_embeddings ? static_cast<std::size_t>(data.device_count) : 0,
      0);

  ForwardCache cache;
  std::vector<double> head_flat;
  std::vector<std::size_t> order = train_idx;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    const std::size_t n_batches =
        (order.size() + static_cast<std::size_t>(config.batch_size) - 1) /
        static_cast<std::size_t>(config.batch_size);
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * static_cast<std::size_t>(config.batch_size);
      const std::size_t end =
          std::min(begin + static_cast<std::size_t>(config.batch_size),
                   order.size());
      const double inv_n = 1.0 / static_cast<double>(end - begin);

      grads.zero();
      touched.clear();
      double batch_loss = 0.0;

      // Divergence surfaces either as a non-finite loss or as a validation
      // failure inside the forward pass once NaN reaches the head; both get
      // the epoch/batch diagnostic.
      try {
        for (std::size_t s = begin; s < end; ++s) {
          const DataPoint& p = data.points[order[s]];
          std::span<const double> row = network.use_embeddings
                                            ? model.embeddings.row(p.device_id)
                                            : std::span<const double>{};
          const MixtureParams mix = forward_cached(
              network, model.params, row, model.scaling.scale_v(p.v_gate),
              cache);
          const double y = model.scaling.scale_i(p.i_drain);
          batch_loss += head_loss(mix, y, config.loss);
          flatten_head_gradient(head_loss_gradient(mix, y, config.loss),
                                head_flat);
          if (network.use_embeddings) {
            std::fill(grads.embedding.begin(), grads.embedding.end(), 0.0);
          }
          backward(network, model.params, cache, head_flat, grads);
          if (network.use_embeddings) {
            double* acc =
                emb_accum.data() + static_cast<std::size_t>(p.device_id) *
                                       static_cast<std::size_t>(dim);
            for (int d = 0; d < dim; ++d) {
              acc[d] += grads.embedding[static_cast<std::size_t>(d)];
            }
            if (!is_touched[static_cast<std::size_t>(p.device_id)]) {
              is_touched[static_cast<std::size_t>(p.device_id)] = 1;
              touched.push_back(p.device_id);
            }
          }
        }
      } catch (const domain_error& e) {
        throw convergence_error("train: non-finite loss at epoch " +
                                std::to_string(epoch) + ", batch " +
                                std::to_string(b) + " (" + e.what() + ")");
      }

      if (!std::isfinite(batch_loss)) {
        throw convergence_error("train: non-finite loss at epoch " +
                                std::to_string(epoch) + ", batch " +
                                std::to_string(b));
      }
      epoch_loss += batch_loss;

      ++weight_t;
      std::size_t offset = 0;
      for (std::size_t l = 0; l < model.params.layers.size(); ++l) {
        Layer& layer = model.params.layers[l];
        Layer& g = grads.layers[l];
        for (double& value : g.w) {
          value *= inv_n;
        }
        for (double& value : g.b) {
          value *= inv_n;
        }
        adam_step(layer.w, g.w, weight_state, offset, weight_t, config);
        offset += layer.w.size();
        adam_step(layer.b, g.b, weight_state, offset, weight_t, config);
        offset += layer.b.size();
      }

      // Sorted so the update order never depends on batch sample order.
      std::sort(touched.begin(), touched.end());
      for (int device : touched) {
        const std::size_t base =
            static_cast<std::size_t>(device) * static_cast<std::size_t>(dim);
        std::span<double> g(emb_accum.data() + base,
                            static_cast<std::size_t>(dim));
        for (double& value : g) {
          value *= inv_n;
        }
        ++emb_t[static_cast<std::size_t>(device)];
        adam_step(model.embeddings.row(device), g, emb_state, base,
                  emb_t[static_cast<std::size_t>(device)], config);
        std::fill(g.begin(), g.end(), 0.0);
        is_touched[static_cast<std::size_t>(device)] = 0;
      }
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(order.size());
    entry.holdout_loss =
        mean_loss_over(network, model.params, model.embeddings, model.scaling,
                       data, holdout_idx, config.loss);
    model.log.push_back(entry);
  }

  return model;
}

MixtureParams predict_mixture(const TrainedModel& model, int device_id,
                              double v_gate) {
  return forward_with_embedding(model.network, model.params,
                                embedding_or_empty(model, device_id),
                                model.scaling.scale_v(v_gate));
}

double predict_mean_current(const TrainedModel& model, int device_id,
                            double v_gate) {
  const MixtureParams mix = predict_mixture(model, device_id, v_gate);
  return model.scaling.unscale_i(truncated_mean(truncate(mix)));
}

double evaluate_loss(const TrainedModel& model, const Dataset& data,
                     LossKind loss) {
  data.validate();
  std::vector<std::size_t> idx(data.points.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return mean_loss_over(model.network, model.params, model.embeddings,
                        model.scaling, data, idx, loss);
}

double evaluate_crps(const TrainedModel& model, const Dataset& data) {
  return evaluate_loss(model, data, LossKind::kCrps);
}

double r_squared(const TrainedModel& model, const Dataset& data) {
  data.validate();
  const double n = static_cast<double>(data.points.size());
  double y_sum = 0.0;
  for (const DataPoint& p : data.points) {
    y_sum += p.i_drain;
  }
  const double y_mean = y_sum / n;
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (const DataPoint& p : data.points) {
    const double pred = predict_mean_current(model, p.device_id, p.v_gate);
    ss_tot += (p.i_drain - y_mean) * (p.i_drain - y_mean);
    ss_res += (p.i_drain - pred) * (p.i_drain - pred);
  }
  if (!(ss_tot > 0.0)) {
    throw metric_error("r_squared: targets have zero variance");
  }
  return 1.0 - ss_res / ss_tot;
}

double gradient_check(const TrainedModel& model, const DataPoint& point,
                      LossKind loss, double step) {
  if (!(step > 0.0)) {
    throw domain_error("gradient_check: step must be positive");
  }
  const NetworkConfig& net = model.network;
  const double v = model.scaling.scale_v(point.v_gate);
  const double y = model.scaling.scale_i(point.i_drain);

  // Analytic gradient of the single-sample loss.
  NetworkParams params = model.params;
  EmbeddingTable embeddings = model.embeddings;
  ForwardCache cache;
  Gradients grads = make_gradients(net, params);
  std::vector<double> head_flat;
  {
    std::span<const double> row =
        net.use_embeddings ? embeddings.row(point.device_id)
                           : std::span<const double>{};
    const MixtureParams mix = forward_cached(net, params, row, v, cache);
    flatten_head_gradient(head_loss_gradient(mix, y, loss), head_flat);
    backward(net, params, cache, head_flat, grads);
  }

  std::vector<double*> theta;
  std::vector<double> analytic;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    for (std::size_t i = 0; i < params.layers[l].w.size(); ++i) {
      theta.push_back(&params.layers[l].w[i]);
      analytic.push_back(grads.layers[l].w[i]);
    }
    for (std::size_t i = 0; i < params.layers[l].b.size(); ++i) {
      theta.push_back(&params.layers[l].b[i]);
      analytic.push_back(grads.layers[l].b[i]);
    }
  }
  if (net.use_embeddings) {
    std::span<double> row = embeddings.row(point.device_id);
    for (int d = 0; d < net.embedding_dim; ++d) {
      theta.push_back(&row[static_cast<std::size_t>(d)]);
      analytic.push_back(grads.embedding[static_cast<std::size_t>(d)]);
    }
  }

  const auto eval = [&]() {
    std::span<const double> row =
        net.use_embeddings ? embeddings.row(point.device_id)
                           : std::span<const double>{};
    return head_loss(forward_with_embedding(net, params, row, v), y, loss);
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double saved = *theta[i];
    *theta[i] = saved + step;
    const double hi = eval();
    *theta[i] = saved - step;
    const double lo = eval();
    *theta[i] = saved;
    const double fd = (hi - lo) / (2.0 * step);
    const double scale = std::max(std::fabs(analytic[i]), std::fabs(fd));
    if (scale > 1e-8) {
      worst = std::max(worst, std::fabs(analytic[i] - fd) / scale);
    }
  }
  return worst;
}

}  // namespace stochfet
