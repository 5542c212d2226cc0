#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stochfet {

// Seeded random source. The engine is std::mt19937_64; the variate
// transforms live here rather than in std::*_distribution because the
// standard leaves distribution output sequences implementation-defined,
// and the reproducibility contracts (bit-identical training runs, frozen
// synthetic datasets) need the whole sample path pinned by the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1): top 53 bits of the engine output.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe to pass to log().
  double uniform_pos() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. One variate per call; the sine half of
  // the pair is discarded so the state never carries a cached value.
  double normal() {
    double u1 = uniform_pos();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n); n must be positive. Rejection-free modulo is
  // fine here: n is always tiny against 2^64 so the bias is immaterial, but
  // the sequence must stay identical across platforms, which this is.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace stochfet
