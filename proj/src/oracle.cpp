#include "stochfet/oracle.hpp"

#include <cmath>
#include <string>

#include "stochfet/errors.hpp"
#include "stochfet/math_kernel.hpp"

namespace stochfet {

namespace {

// Shared turn-on curve shape. The absolute width term keeps an off-state
// noise floor so the spread never collapses to zero at low gate voltage.
constexpr double kVth0 = 0.90;        // volts
constexpr double kTurnOnWidth = 0.15; // volts
constexpr double kOnCurrent = 1e-4;   // amperes
constexpr double kBranchRatio = 0.7;  // lower branch mean relative to upper
constexpr double kBranchFloor = 0.2;  // low-V fraction of the branch weight
constexpr double kBranchRampV = 1.3;  // volts, centre of the weight ramp
constexpr double kBranchRampWidth = 0.12; // volts
constexpr double kRelWidthUpper = 0.035;
constexpr double kRelWidthLower = 0.05;
constexpr double kAbsWidth = 0.0015;  // fraction of the device on-current

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Draws from a normal conditioned on x >= 0 by rejection. Oracle means are
// never negative, so acceptance probability stays above one half.
double truncated_draw(double mean, double sigma, Rng& rng) {
  if (sigma == 0.0) return mean;
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double x = mean + sigma * rng.normal();
    if (x >= 0.0) return x;
  }
  throw convergence_error("truncated_draw: rejection sampling stalled");
}

}  // namespace

std::vector<double> OracleConfig::default_voltage_grid() {
  std::vector<double> grid(61);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = 1.8 * static_cast<double>(i) / 60.0;
  }
  return grid;
}

void OracleConfig::validate() const {
  if (device_count < 1) {
    throw config_error("OracleConfig: device_count must be positive");
  }
  if (cycles < 1) {
    throw config_error("OracleConfig: cycles must be positive");
  }
  if (!(vth_spread >= 0.0) || !std::isfinite(vth_spread)) {
    throw config_error("OracleConfig: vth_spread must be non-negative");
  }
  if (!(gain_spread >= 0.0) || !std::isfinite(gain_spread)) {
    throw config_error("OracleConfig: gain_spread must be non-negative");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw config_error("OracleConfig: noise_scale must be non-negative");
  }
  if (!(bimodality_weight >= 0.0) || !(bimodality_weight < 1.0)) {
    throw config_error("OracleConfig: bimodality_weight must lie in [0, 1)");
  }
  if (voltages.empty()) {
    throw config_error("OracleConfig: voltage grid is empty");
  }
  for (std::size_t i = 0; i < voltages.size(); ++i) {
    if (!std::isfinite(voltages[i])) {
      throw config_error("OracleConfig: voltage " + std::to_string(i) +
                         " is not finite");
    }
    if (i > 0 && !(voltages[i] > voltages[i - 1])) {
      throw config_error("OracleConfig: voltages must be strictly increasing");
    }
  }
}

OracleMixture oracle_mixture(const OracleConfig& cfg,
                             const DeviceLatent& latent, double v_gate) {
  const double gain = std::exp(latent.delta_gain);
  const double vth = kVth0 + latent.delta_vth;
  const double mu_upper =
      kOnCurrent * gain * logistic((v_gate - vth) / kTurnOnWidth);
  const double mu_lower = kBranchRatio * mu_upper;
  const double ramp =
      logistic((v_gate - kBranchRampV) / kBranchRampWidth);
  const double w_lower =
      cfg.bimodality_weight * (kBranchFloor + (1.0 - kBranchFloor) * ramp);
  const double abs_width = kAbsWidth * kOnCurrent * gain;

  OracleMixture mix;
  mix.weights = {1.0 - w_lower, w_lower};
  mix.means = {mu_upper, mu_lower};
  mix.sigmas = {cfg.noise_scale * (kRelWidthUpper * mu_upper + abs_width),
                cfg.noise_scale * (kRelWidthLower * mu_lower + abs_width)};
  return mix;
}

OracleData generate_synthetic_dataset(const OracleConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  OracleData out;
  out.latents.resize(static_cast<std::size_t>(cfg.device_count));
  for (auto& latent : out.latents) {
    latent.delta_vth = cfg.vth_spread * rng.normal();
    latent.delta_gain = cfg.gain_spread * rng.normal();
  }

  out.dataset.device_count = cfg.device_count;
  out.dataset.points.reserve(static_cast<std::size_t>(cfg.device_count) *
                             cfg.voltages.size() *
                             static_cast<std::size_t>(cfg.cycles));
  for (int device = 0; device < cfg.device_count; ++device) {
    const auto& latent = out.latents[static_cast<std::size_t>(device)];
    for (const double v : cfg.voltages) {
      const OracleMixture mix = oracle_mixture(cfg, latent, v);
      for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
        const std::size_t k = rng.uniform() < mix.weights[0] ? 0 : 1;
        const double current = truncated_draw(mix.means[k], mix.sigmas[k], rng);
        out.dataset.points.push_back({device, v, current});
      }
    }
  }
  out.dataset.validate();
  return out;
}

}  // namespace stochfet
