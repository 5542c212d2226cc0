#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "stochfet/rng.hpp"
#include "stochfet/trainer.hpp"

namespace stochfet {

struct WaveSample {
  double time = 0.0;    // seconds
  double v_gate = 0.0;  // volts
};

struct Waveform {
  std::vector<WaveSample> samples;

  // shape_error with fewer than 2 samples; domain_error on non-finite
  // values or non-increasing times.
  void validate() const;
};

struct TracePoint {
  double time = 0.0;
  double v_gate = 0.0;
  double i_drain = 0.0;  // amperes
  double q_used = 0.0;
};

struct SweepTrace {
  std::vector<TracePoint> points;
};

// Sample indices where a fresh quantile is drawn: index 0 always, then every
// index where the forward-difference sign of v_gate flips strictly. Zero
// differences inherit the previous sign, so plateaus never trigger events.
std::vector<std::size_t> detect_q_events(const Waveform& w);

// Quantile-coherent sweep: at every q-event draw u ~ U(0,1) and clip it to
// the default quantile band, then hold that q until the next event. Currents
// come from the truncated predicted mixture at each raw gate voltage,
// rescaled to amperes. Deterministic given the rng seed. forced_q is a
// diagnostic hook: when set, no draws happen and the given quantile is used
// verbatim at every sample. A degenerate mixture component is rethrown with
// the offending sample index.
SweepTrace simulate_sweep(const TrainedModel& model,
                          std::span<const double> embedding, const Waveform& w,
                          Rng& rng, std::optional<double> forced_q = {});

// Fixed-quantile current trace over raw gate voltages, in amperes.
std::vector<double> quantile_trace(const TrainedModel& model,
                                   std::span<const double> embedding,
                                   std::span<const double> voltages, double q);

// Mean truncated density over a set of embeddings, evaluated on a grid of
// raw currents (density per ampere). shape_error on an empty embedding list
// or grid.
std::vector<double> predicted_pdf_average(
    const TrainedModel& model, const std::vector<std::vector<double>>& embeddings,
    double v_gate, std::span<const double> x_grid);

}  // namespace stochfet
