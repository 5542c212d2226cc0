#pragma once

#include <vector>

#include "stochfet/mdn.hpp"

namespace stochfet {

// Loss gradient with respect to the raw network head: mixture-weight logits
// (already chained through softmax; entries sum to zero within rounding),
// component means, and pre-softplus sigma values (chained through
// softplus + sigma_floor).
struct HeadGradient {
  std::vector<double> d_alpha_logits;
  std::vector<double> d_mus;
  std::vector<double> d_sigma_raws;
};

// E|X - y| for X ~ N(mu, sigma^2):
//   sigma * (z (2 Phi(z) - 1) + 2 phi(z)),  z = (y - mu) / sigma.
// Requires sigma > 0 (domain_error). Approaches |mu - y| as sigma -> 0+.
double gaussian_abs_moment(double mu, double sigma, double y);

// Closed-form CRPS of a Gaussian mixture against observation y:
//   sum_k a_k E|X_k - y| - 1/2 sum_{k,l} a_k a_l E|X_k - X_l|
// with the cross term through the difference Gaussian
// N(mu_k - mu_l, sigma_k^2 + sigma_l^2). O(K^2).
double crps_mixture(const MixtureParams& mix, double y);

// Analytic CRPS gradient with respect to the raw head outputs.
HeadGradient crps_gradient(const MixtureParams& mix, double y);

// Gaussian mixture negative log likelihood via log-sum-exp.
double gnll_loss(const MixtureParams& mix, double y);

// Analytic GNLL gradient with respect to the raw head outputs.
HeadGradient gnll_gradient(const MixtureParams& mix, double y);

// Flatten a HeadGradient into the 3K raw-head layout used by backward().
void flatten_head_gradient(const HeadGradient& grad, std::vector<double>& out);

}  // namespace stochfet
