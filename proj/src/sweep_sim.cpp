#include "stochfet/sweep_sim.hpp"

#include <cmath>
#include <string>

#include "stochfet/errors.hpp"
#include "stochfet/truncated_mixture.hpp"

namespace stochfet {

void Waveform::validate() const {
  if (samples.size() < 2) {
    throw shape_error("waveform: need at least 2 samples, got " +
                      std::to_string(samples.size()));
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i].time) || !std::isfinite(samples[i].v_gate)) {
      throw domain_error("waveform: non-finite value at sample " +
                         std::to_string(i));
    }
    if (i > 0 && !(samples[i].time > samples[i - 1].time)) {
      throw domain_error("waveform: time must be strictly increasing at sample " +
                         std::to_string(i));
    }
  }
}

std::vector<std::size_t> detect_q_events(const Waveform& w) {
  w.validate();
  std::vector<std::size_t> events = {0};
  int prev_sign = 0;
  for (std::size_t i = 0; i + 1 < w.samples.size(); ++i) {
    const double d = w.samples[i + 1].v_gate - w.samples[i].v_gate;
    int sign = (d > 0.0) - (d < 0.0);
    if (sign == 0) {
      sign = prev_sign;
    }
    if (prev_sign != 0 && sign != 0 && sign != prev_sign) {
      events.push_back(i);
    }
    prev_sign = sign;
  }
  return events;
}

namespace {

// Single evaluation shared by every sweep-style consumer so fixed-q traces
// and event-driven sweeps agree bit for bit.
double current_at(const TrainedModel& model, std::span<const double> embedding,
                  double v_raw, double q) {
  const MixtureParams mix =
      forward_with_embedding(model.network, model.params, embedding,
                             model.scaling.scale_v(v_raw));
  return model.scaling.unscale_i(inverse_cdf(truncate(mix), q));
}

}  // namespace

SweepTrace simulate_sweep(const TrainedModel& model,
                          std::span<const double> embedding, const Waveform& w,
                          Rng& rng, std::optional<double> forced_q) {
  const std::vector<std::size_t> events = detect_q_events(w);

  SweepTrace trace;
  trace.points.reserve(w.samples.size());
  std::size_t next_event = 0;
  double q = forced_q.value_or(0.5);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    if (!forced_q && next_event < events.size() && events[next_event] == i) {
      q = clip_quantile(rng.uniform());
      ++next_event;
    }
    try {
      const double current = current_at(model, embedding, w.samples[i].v_gate, q);
      trace.points.push_back(
          {w.samples[i].time, w.samples[i].v_gate, current, q});
    } catch (const degenerate_component_error& e) {
      throw degenerate_component_error(
          "simulate_sweep: sample " + std::to_string(i) + ": " + e.what(),
          e.component());
    }
  }
  return trace;
}

std::vector<double> quantile_trace(const TrainedModel& model,
                                   std::span<const double> embedding,
                                   std::span<const double> voltages,
                                   double q) {
  std::vector<double> currents;
  currents.reserve(voltages.size());
  for (double v : voltages) {
    currents.push_back(current_at(model, embedding, v, q));
  }
  return currents;
}

std::vector<double> predicted_pdf_average(
    const TrainedModel& model,
    const std::vector<std::vector<double>>& embeddings, double v_gate,
    std::span<const double> x_grid) {
  if (embeddings.empty()) {
    throw shape_error("predicted_pdf_average: no embeddings");
  }
  if (x_grid.empty()) {
    throw shape_error("predicted_pdf_average: empty grid");
  }
  const double i_scale = model.scaling.i_scale;
  std::vector<double> avg(x_grid.size(), 0.0);
  for (const std::vector<double>& emb : embeddings) {
    const MixtureParams mix =
        forward_with_embedding(model.network, model.params, emb,
                               model.scaling.scale_v(v_gate));
    const TruncatedMixture tm = truncate(mix);
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      // Density per ampere: substitute x/i_scale into the scaled-unit pdf.
      avg[i] += trunc_pdf(tm, x_grid[i] / i_scale) / i_scale;
    }
  }
  for (double& d : avg) {
    d /= static_cast<double>(embeddings.size());
  }
  return avg;
}

}  // namespace stochfet
