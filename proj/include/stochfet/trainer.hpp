#pragma once

#include <cstdint>
#include <vector>

#include "stochfet/crps.hpp"
#include "stochfet/mdn.hpp"

namespace stochfet {

// One measurement: device id (dense, 0-based), gate voltage in volts,
// drain current in amperes.
struct DataPoint {
  int device_id = 0;
  double v_gate = 0.0;
  double i_drain = 0.0;
};

// Affine input/output scaling. Voltages are standardized; currents are
// divided by a positive scale only, never shifted, so zero stays the
// truncation point in scaled space.
struct Scaling {
  double v_mean = 0.0;
  double v_std = 1.0;
  double i_scale = 1.0;

  double scale_v(double v) const { return (v - v_mean) / v_std; }
  double scale_i(double i) const { return i / i_scale; }
  double unscale_i(double i) const { return i * i_scale; }
};

struct Dataset {
  std::vector<DataPoint> points;
  int device_count = 0;

  // shape/domain errors: empty data, ids outside [0, device_count),
  // negative or non-finite values.
  void validate() const;
};

// v_mean/v_std from the data (degenerate voltage spread falls back to
// v_std = 1); i_scale = max current, config_error when that is not > 0.
Scaling fit_scaling(const Dataset& data);

enum class LossKind { kCrps, kGnll };

struct TrainConfig {
  LossKind loss = LossKind::kCrps;
  int epochs = 40;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double holdout_loss = 0.0;
};

struct TrainedModel {
  NetworkConfig network;
  NetworkParams params;
  EmbeddingTable embeddings;  // zero rows when embeddings are disabled
  Scaling scaling;
  std::vector<EpochLog> log;
};

// Minibatch Adam on scaled data with per-device embeddings. Deterministic:
// the same seed and dataset produce bit-identical models. Embedding rows
// receive lazy per-row Adam updates, so a batch without samples from device
// d leaves row d bit-unchanged. epochs = 0 returns the initialized model.
// A non-finite batch loss aborts with a convergence_error naming the epoch
// and batch. The holdout split is stratified per device; every device with
// at least two samples appears in both splits.
TrainedModel train(const NetworkConfig& network, const TrainConfig& config,
                   const Dataset& data);

// Predicted mixture in scaled current units at a raw gate voltage.
MixtureParams predict_mixture(const TrainedModel& model, int device_id,
                              double v_gate);

// Point prediction in amperes: mean of the truncated predicted mixture.
double predict_mean_current(const TrainedModel& model, int device_id,
                            double v_gate);

// Mean loss over a dataset in scaled units.
double evaluate_loss(const TrainedModel& model, const Dataset& data,
                     LossKind loss);
double evaluate_crps(const TrainedModel& model, const Dataset& data);

// R^2 of the truncated-mean point prediction in raw current units.
// metric_error when the targets have zero variance.
double r_squared(const TrainedModel& model, const Dataset& data);

// Max relative error between the analytic end-to-end loss gradient and a
// central finite difference with the given step, taken over all weights,
// biases and the sample's embedding row wherever the larger of the two
// gradients exceeds 1e-8 in magnitude.
double gradient_check(const TrainedModel& model, const DataPoint& point,
                      LossKind loss, double step);

}  // namespace stochfet
