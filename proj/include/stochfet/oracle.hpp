#pragma once

#include <cstdint>
#include <vector>

#include "stochfet/rng.hpp"
#include "stochfet/trainer.hpp"

namespace stochfet {

// Generator for the synthetic measurement corpus standing in for proprietary
// device data. Each device gets a latent pair (threshold shift, log gain);
// currents at each voltage come from a two-component truncated mixture whose
// means follow smooth logistic turn-on curves. The second component sits on
// a lower current branch: it carries a small weight everywhere and ramps up
// at high gate voltage, so low-V distributions stay sharp and skewed while
// high-V ones broaden and turn bimodal.
struct OracleConfig {
  int device_count = 63;
  double vth_spread = 0.06;        // volts, std of the threshold shift
  double gain_spread = 0.15;       // std of the log on-current multiplier
  double noise_scale = 1.0;        // scales every mixture width
  double bimodality_weight = 0.35; // high-V weight of the lower branch
  std::vector<double> voltages = default_voltage_grid();
  int cycles = 20;
  std::uint64_t seed = 1;

  static std::vector<double> default_voltage_grid();  // 61 points, 0..1.8 V

  // config_error on non-positive counts, negative spreads, weight outside
  // [0, 1) or a non-increasing voltage grid.
  void validate() const;
};

struct DeviceLatent {
  double delta_vth = 0.0;
  double delta_gain = 0.0;
};

// True generating mixture at one voltage, in raw amperes. Widths are zero
// when noise_scale is zero.
struct OracleMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> sigmas;
};

OracleMixture oracle_mixture(const OracleConfig& cfg,
                             const DeviceLatent& latent, double v_gate);

struct OracleData {
  Dataset dataset;
  std::vector<DeviceLatent> latents;
};

// Deterministic given cfg.seed. Points are ordered device-major, then by
// voltage, then by cycle. Zero-width components collapse to their mean, so
// noise_scale = 0 with bimodality_weight = 0 reproduces each device's mean
// curve exactly.
OracleData generate_synthetic_dataset(const OracleConfig& cfg);

}  // namespace stochfet
