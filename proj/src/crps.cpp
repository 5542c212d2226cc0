#include "stochfet/crps.hpp"

#include <cmath>
#include <limits>

#include "stochfet/errors.hpp"
#include "stochfet/math_kernel.hpp"

namespace stochfet {

double gaussian_abs_moment(double mu, double sigma, double y) {
  if (!(sigma > 0.0))
    throw domain_error("gaussian_abs_moment: sigma must be positive");
  double z = (y - mu) / sigma;
  return sigma * (z * (2.0 * std_normal_cdf(z) - 1.0) +
                  2.0 * std_normal_pdf(z));
}

namespace {

// d E|X - y| / d mu at fixed sigma, y.
double abs_moment_dmu(double mu, double sigma, double y) {
  double z = (y - mu) / sigma;
  return -(2.0 * std_normal_cdf(z) - 1.0);
}

// d E|X - y| / d sigma.
double abs_moment_dsigma(double mu, double sigma, double y) {
  double z = (y - mu) / sigma;
  return 2.0 * std_normal_pdf(z);
}

// d sigma / d raw for sigma = softplus(raw) + floor. Equal to
// sigmoid(raw) = 1 - exp(-(sigma - floor)) without needing raw itself.
double sigma_raw_chain(double sigma, double floor) {
  return 1.0 - std::exp(-(sigma - floor));
}

void chain_to_head(const MixtureParams& mix,
                   const std::vector<double>& d_alpha,
                   std::vector<double>& d_mus,
                   std::vector<double>& d_sigmas, HeadGradient& out) {
  int k = mix.components();
  // Softmax chain: d/d logit_i = a_i (d_alpha_i - sum_k a_k d_alpha_k).
  double dot = 0.0;
  for (int i = 0; i < k; ++i) dot += mix.alphas[i] * d_alpha[i];
  out.d_alpha_logits.resize(k);
  for (int i = 0; i < k; ++i)
    out.d_alpha_logits[i] = mix.alphas[i] * (d_alpha[i] - dot);
  out.d_mus = std::move(d_mus);
  out.d_sigma_raws.resize(k);
  for (int i = 0; i < k; ++i)
    out.d_sigma_raws[i] =
        d_sigmas[i] * sigma_raw_chain(mix.sigmas[i], mix.sigma_floor);
}

}  // namespace

double crps_mixture(const MixtureParams& mix, double y) {
  mix.validate();
  int k = mix.components();
  double first = 0.0;
  for (int i = 0; i < k; ++i)
    first += mix.alphas[i] * gaussian_abs_moment(mix.mus[i], mix.sigmas[i], y);

  double cross = 0.0;
  for (int i = 0; i < k; ++i) {
    // Diagonal: E|X_i - X_i'| over an independent copy.
    double sii = mix.sigmas[i] * consts::kSqrt2;
    cross += mix.alphas[i] * mix.alphas[i] * gaussian_abs_moment(0.0, sii, 0.0);
    for (int j = i + 1; j < k; ++j) {
      double s = std::hypot(mix.sigmas[i], mix.sigmas[j]);
      double b = gaussian_abs_moment(mix.mus[i] - mix.mus[j], s, 0.0);
      cross += 2.0 * mix.alphas[i] * mix.alphas[j] * b;
    }
  }
  return first - 0.5 * cross;
}

HeadGradient crps_gradient(const MixtureParams& mix, double y) {
  mix.validate();
  int k = mix.components();
  std::vector<double> d_alpha(k, 0.0), d_mu(k, 0.0), d_sigma(k, 0.0);

  for (int i = 0; i < k; ++i) {
    double a = mix.alphas[i];
    d_alpha[i] += gaussian_abs_moment(mix.mus[i], mix.sigmas[i], y);
    d_mu[i] += a * abs_moment_dmu(mix.mus[i], mix.sigmas[i], y);
    d_sigma[i] += a * abs_moment_dsigma(mix.mus[i], mix.sigmas[i], y);
  }

  // Cross term -1/2 sum_{i,j} a_i a_j B_ij over all ordered pairs; each
  // pair contributes to both slots, which also covers the diagonal where
  // sigma_i enters twice.
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double m = mix.mus[i] - mix.mus[j];
      double s = std::hypot(mix.sigmas[i], mix.sigmas[j]);
      double b = gaussian_abs_moment(m, s, 0.0);
      double w = -0.5 * mix.alphas[i] * mix.alphas[j];
      d_alpha[i] += -0.5 * mix.alphas[j] * b;
      d_alpha[j] += -0.5 * mix.alphas[i] * b;
      // dB/dm = 2 Phi(m/s) - 1; dB/ds = 2 phi(m/s).
      double dm = 2.0 * std_normal_cdf(m / s) - 1.0;
      double ds = 2.0 * std_normal_pdf(m / s);
      d_mu[i] += w * dm;
      d_mu[j] -= w * dm;
      d_sigma[i] += w * ds * (mix.sigmas[i] / s);
      d_sigma[j] += w * ds * (mix.sigmas[j] / s);
    }
  }

  HeadGradient out;
  chain_to_head(mix, d_alpha, d_mu, d_sigma, out);
  return out;
}

double gnll_loss(const MixtureParams& mix, double y) {
  mix.validate();
  int k = mix.components();
  const double half_log_2pi = 0.91893853320467274178032973640561764;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> t(k);
  for (int i = 0; i < k; ++i) {
    double z = (y - mix.mus[i]) / mix.sigmas[i];
    t[i] = (mix.alphas[i] > 0.0
                ? std::log(mix.alphas[i])
                : -std::numeric_limits<double>::infinity()) -
           std::log(mix.sigmas[i]) - half_log_2pi - 0.5 * z * z;
    if (t[i] > best) best = t[i];
  }
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += std::exp(t[i] - best);
  return -(best + std::log(sum));
}

HeadGradient gnll_gradient(const MixtureParams& mix, double y) {
  mix.validate();
  int k = mix.components();
  const double half_log_2pi = 0.91893853320467274178032973640561764;
  std::vector<double> t(k);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    double z = (y - mix.mus[i]) / mix.sigmas[i];
    t[i] = (mix.alphas[i] > 0.0
                ? std::log(mix.alphas[i])
                : -std::numeric_limits<double>::infinity()) -
           std::log(mix.sigmas[i]) - half_log_2pi - 0.5 * z * z;
    if (t[i] > best) best = t[i];
  }
  // Posterior responsibilities.
  std::vector<double> r(k);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    r[i] = std::exp(t[i] - best);
    sum += r[i];
  }
  for (int i = 0; i < k; ++i) r[i] /= sum;

  HeadGradient out;
  out.d_alpha_logits.resize(k);
  out.d_mus.resize(k);
  out.d_sigma_raws.resize(k);
  for (int i = 0; i < k; ++i) {
    double z = (y - mix.mus[i]) / mix.sigmas[i];
    out.d_alpha_logits[i] = mix.alphas[i] - r[i];
    out.d_mus[i] = -r[i] * z / mix.sigmas[i];
    double d_sigma = -r[i] * (z * z - 1.0) / mix.sigmas[i];
    out.d_sigma_raws[i] =
        d_sigma * sigma_raw_chain(mix.sigmas[i], mix.sigma_floor);
  }
  return out;
}

void flatten_head_gradient(const HeadGradient& grad,
                           std::vector<double>& out) {
  out.clear();
  out.reserve(grad.d_alpha_logits.size() * 3);
  out.insert(out.end(), grad.d_alpha_logits.begin(),
             grad.d_alpha_logits.end());
  out.insert(out.end(), grad.d_mus.begin(), grad.d_mus.end());
  out.insert(out.end(), grad.d_sigma_raws.begin(), grad.d_sigma_raws.end());
}

}  // namespace stochfet
