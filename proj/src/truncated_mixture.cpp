#include "stochfet/truncated_mixture.hpp"

#include <cmath>
#include <sstream>

#include "stochfet/errors.hpp"
#include "stochfet/math_kernel.hpp"

namespace stochfet {

TruncatedMixture truncate(const MixtureParams& mix) {
  mix.validate();
  TruncatedMixture tm;
  tm.base = mix;
  tm.z.resize(mix.components());
  for (int k = 0; k < mix.components(); ++k) {
    double beta = -mix.mus[k] / mix.sigmas[k];
    double z = std_normal_sf(beta);
    if (z < 1e-12) {
      std::ostringstream msg;
      msg << "truncate: component " << k << " has mass " << z
          << " above zero (mu = " << mix.mus[k]
          << ", sigma = " << mix.sigmas[k] << "); below the 1e-12 floor";
      throw degenerate_component_error(msg.str(), k);
    }
    tm.z[k] = z;
  }
  return tm;
}

double trunc_pdf(const TruncatedMixture& tm, double x) {
  if (x < 0.0) return 0.0;
  double p = 0.0;
  for (int k = 0; k < tm.base.components(); ++k) {
    double s = tm.base.sigmas[k];
    double a = (x - tm.base.mus[k]) / s;
    p += tm.base.alphas[k] * std_normal_pdf(a) / (s * tm.z[k]);
  }
  return p;
}

double trunc_cdf(const TruncatedMixture& tm, double x) {
  if (x <= 0.0) return 0.0;
  double f = 0.0;
  for (int k = 0; k < tm.base.components(); ++k) {
    double a = (x - tm.base.mus[k]) / tm.base.sigmas[k];
    // Component CDF as 1 - SF(a)/Z_k: at x = 0 the ratio is exactly 1 by
    // construction, and survivor values keep the small-Z case accurate.
    double fk = 1.0 - std_normal_sf(a) / tm.z[k];
    if (fk < 0.0) fk = 0.0;
    if (fk > 1.0) fk = 1.0;
    f += tm.base.alphas[k] * fk;
  }
  return f;
}

double inverse_cdf(const TruncatedMixture& tm, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw domain_error("inverse_cdf: q must lie strictly inside (0, 1)");

  double mu_max = tm.base.mus[0];
  double sigma_max = tm.base.sigmas[0];
  for (int k = 1; k < tm.base.components(); ++k) {
    mu_max = std::fmax(mu_max, tm.base.mus[k]);
    sigma_max = std::fmax(sigma_max, tm.base.sigmas[k]);
  }
  // Any component admitted by truncate() has mu > -7.1 sigma, so this
  // upper end is always strictly positive.
  double hi = mu_max + 10.0 * sigma_max;
  int widenings = 0;
  while (trunc_cdf(tm, hi) < q) {
    if (++widenings > 4) {
      std::ostringstream msg;
      msg << "inverse_cdf: bracket [0, " << hi
          << "] still below q = " << q << " after 4 widenings";
      throw convergence_error(msg.str());
    }
    hi *= 2.0;
  }

  auto f = [&](double x) { return trunc_cdf(tm, x) - q; };
  double x = brent_root(f, 0.0, hi, 1e-15);
  double err = std::fabs(trunc_cdf(tm, x) - q);
  if (err > 1e-10) {
    std::ostringstream msg;
    msg << "inverse_cdf: |F(x) - q| = " << err
        << " exceeds 1e-10 at x = " << x;
    throw convergence_error(msg.str());
  }
  return x;
}

double truncated_mean(const TruncatedMixture& tm) {
  double mean = 0.0;
  for (int k = 0; k < tm.base.components(); ++k) {
    double mu = tm.base.mus[k];
    double s = tm.base.sigmas[k];
    double beta = -mu / s;
    mean += tm.base.alphas[k] * (mu + s * std_normal_pdf(beta) / tm.z[k]);
  }
  return mean;
}

double clip_quantile(double q, double lo, double hi) {
  if (!(q >= 0.0 && q <= 1.0))
    throw domain_error("clip_quantile: q must lie in [0, 1]");
  if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi))
    throw domain_error("clip_quantile: bounds must satisfy 0 <= lo <= hi <= 1");
  return q < lo ? lo : (q > hi ? hi : q);
}

}  // namespace stochfet
