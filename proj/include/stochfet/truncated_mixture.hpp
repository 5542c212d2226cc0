#pragma once

#include <vector>

#include "stochfet/mdn.hpp"

namespace stochfet {

// Gaussian mixture truncated at zero, each component renormalized by its
// own mass above the truncation point.
struct TruncatedMixture {
  MixtureParams base;
  std::vector<double> z;  // per-component mass above zero
};

// Computes the per-component normalizers Z_k = 1 - Phi((0 - mu_k)/sigma_k).
// Any component with Z_k < 1e-12 has numerically no mass above zero and
// raises degenerate_component_error carrying the component index.
TruncatedMixture truncate(const MixtureParams& mix);

// Density of the truncated mixture; zero for x < 0.
double trunc_pdf(const TruncatedMixture& tm, double x);

// CDF of the truncated mixture; zero for x <= 0, monotone to 1. Computed
// through survivor functions so the result keeps absolute accuracy even
// when a component's normalizer is near the 1e-12 floor.
double trunc_cdf(const TruncatedMixture& tm, double x);

// Quantile via Brent inversion of trunc_cdf. q must lie in (0, 1)
// (domain_error). The initial bracket is [0, max(mu) + 10 max(sigma)],
// widened by doubling at most 4 times; the result satisfies
// |trunc_cdf(x) - q| <= 1e-10 or a convergence_error is raised.
double inverse_cdf(const TruncatedMixture& tm, double q);

// Mean of the truncated mixture:
//   sum_k a_k (mu_k + sigma_k phi(beta_k) / Z_k),  beta_k = -mu_k/sigma_k.
double truncated_mean(const TruncatedMixture& tm);

// Clamp a quantile into [lo, hi]. q outside [0, 1] (or NaN) and malformed
// bounds raise domain_error.
double clip_quantile(double q, double lo = 0.05, double hi = 0.95);

}  // namespace stochfet
