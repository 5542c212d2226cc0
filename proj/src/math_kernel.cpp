#include "stochfet/math_kernel.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "stochfet/errors.hpp"

namespace stochfet {

namespace {

// erf via the all-positive series 2x e^{-x^2}/sqrt(pi) * sum (2x^2)^n / (1*3*...*(2n+1)).
// No alternating cancellation, so the relative error stays at a few ulp for
// |x| up to the series/fraction crossover.
double erf_series(double ax) {
  double x2 = ax * ax;
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 3.0);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return 2.0 * consts::kInvSqrtPi * ax * std::exp(-x2) * sum;
}

// Legendre continued fraction for erfc, evaluated with the modified Lentz
// scheme: sqrt(pi) e^{x^2} erfc(x) = 1/(x + (1/2)/(x + (2/2)/(x + ...))).
// Converges quickly for x >= 2, which is the only region it serves.
double erfc_fraction(double ax) {
  const double tiny = 1e-300;
  double f = ax;
  double c = f;
  double d = 0.0;
  for (int n = 1; n <= 300; ++n) {
    double a = 0.5 * n;
    d = ax + a * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = ax + a / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = c * d;
    f *= delta;
    if (std::fabs(delta - 1.0) < 1e-17) break;
  }
  return consts::kInvSqrtPi * std::exp(-ax * ax) / f;
}

}  // namespace

double erf(double x) {
  double ax = std::fabs(x);
  double r;
  if (ax < 2.0) {
    r = erf_series(ax);
  } else {
    // erfc here is at most erfc(2) ~ 4.7e-3, so the subtraction costs
    // nothing: the absolute error stays at ulp(1).
    r = 1.0 - erfc_fraction(ax);
  }
  return x < 0.0 ? -r : r;
}

double erfc(double x) {
  double ax = std::fabs(x);
  double r = ax < 2.0 ? 1.0 - erf_series(ax) : erfc_fraction(ax);
  return x < 0.0 ? 2.0 - r : r;
}

double std_normal_pdf(double x) {
  return consts::kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double std_normal_cdf(double x) {
  if (x < 0.0) return 0.5 * erfc(-x * consts::kInvSqrt2);
  return 0.5 * (1.0 + erf(x * consts::kInvSqrt2));
}

double std_normal_sf(double x) {
  return 0.5 * erfc(x * consts::kInvSqrt2);
}

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double mish(double x) { return x * std::tanh(softplus(x)); }

double mish_prime(double x) {
  double t = std::tanh(softplus(x));
  return t + x * (1.0 - t * t) * sigmoid(x);
}

SimplexVector softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw shape_error("softmax: empty logit vector");
  double m = logits[0];
  for (double v : logits) {
    if (v > m) m = v;
  }
  SimplexVector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double brent_root(const std::function<double(double)>& f, double lo,
                  double hi, double tol, int max_iter) {
  if (!(tol > 0.0)) throw domain_error("brent_root: tol must be positive");
  double a = lo, b = hi;
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0.0) == (fb > 0.0)) {
    std::ostringstream msg;
    msg << "brent_root: endpoints do not bracket a root: f(" << a
        << ") = " << fa << ", f(" << b << ") = " << fb;
    throw bracket_error(msg.str());
  }

  double c = a, fc = fa;
  double d = b - a, e = d;
  const double eps = std::numeric_limits<double>::epsilon();

  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0) == (fc > 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * tol;
    double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) return b;

    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      // Try secant / inverse quadratic interpolation.
      double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        double qq = fa / fc;
        double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
      double min2 = std::fabs(e * q);
      if (2.0 * p < (min1 < min2 ? min1 : min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    if (std::fabs(d) > tol1) {
      b += d;
    } else {
      b += xm >= 0.0 ? tol1 : -tol1;
    }
    fb = f(b);
  }
  std::ostringstream msg;
  msg << "brent_root: no convergence within " << max_iter << " iterations";
  throw convergence_error(msg.str());
}

}  // namespace stochfet
