#pragma once

// Special functions needed by the link functions and the test statistics:
// standard normal, Student t, regularized incomplete beta and gamma, chi-square
// tail. Target accuracy is about 1e-12 absolute on probabilities.

#include <cmath>
#include <limits>
#include <numbers>

#include "mlm/error.hpp"

namespace mlm::special {

inline constexpr double kPi = std::numbers::pi;

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - Phi(x), accurate for large positive x.
inline double normal_ccdf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace detail {

// Wichura (1988), algorithm AS 241, PPND16. Valid for 0 < p <= 0.5.
inline double ppnd16_lower(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
              6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
            1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
          1.3314166789178437745e+2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
              3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
            5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
          4.2313330701600911252e+1) * r + 1.0);
    return q * num / den;
  }
  double r = std::sqrt(-std::log(p));
  double val = 0.0;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return -val;
}

}  // namespace detail

/// Inverse of the standard normal cdf. Throws DomainError outside (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  // 1 - p is exact for p >= 0.5, so the upper half is handled by symmetry.
  if (p > 0.5) return -normal_quantile(1.0 - p);
  double x = detail::ppnd16_lower(p);
  // One Halley step against erfc.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  if (std::isfinite(u)) x -= u / (1.0 + 0.5 * x * u);
  return x;
}

/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

/// Regularized incomplete beta I_x(a, b). The caller passes y = 1 - x
/// separately so that values of x close to 1 keep full precision.
inline double incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

inline double incomplete_beta(double a, double b, double x) {
  return incomplete_beta(a, b, x, 1.0 - x);
}

namespace detail {

// P(T <= -|t|) for T ~ t(nu).
inline double student_t_lower_tail(double t, double nu) {
  const double r = std::sqrt(nu) / std::abs(t);  // +inf at t = 0
  if (!std::isfinite(r)) return 0.5;
  const double r2 = r * r;
  const double x = r2 / (1.0 + r2);  // nu / (nu + t^2)
  const double y = 1.0 / (1.0 + r2);  // t^2 / (nu + t^2)
  return 0.5 * incomplete_beta(0.5 * nu, 0.5, x, y);
}

}  // namespace detail

inline double student_t_cdf(double t, double nu) {
  const double tail = detail::student_t_lower_tail(t, nu);
  return t <= 0.0 ? tail : 1.0 - tail;
}

inline double student_t_ccdf(double t, double nu) { return student_t_cdf(-t, nu); }

inline double student_t_log_pdf(double t, double nu) {
  const double s = std::abs(t) / std::sqrt(nu);
  const double log_kernel = s > 1e150 ? 2.0 * std::log(s) : std::log1p(s * s);
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * kPi) -
         0.5 * (nu + 1.0) * log_kernel;
}

inline double student_t_pdf(double t, double nu) { return std::exp(student_t_log_pdf(t, nu)); }

/// Inverse cdf of the t distribution: safeguarded Newton on the log tail.
inline double student_t_quantile(double p, double nu) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("student_t_quantile: p must lie in (0, 1)");
  if (!(nu > 0.0)) throw DomainError("student_t_quantile: nu must be positive");
  if (p == 0.5) return 0.0;
  if (p > 0.5) return -student_t_quantile(1.0 - p, nu);

  const double log_target = std::log(p);
  double hi = 0.0;
  double lo = std::min(normal_quantile(p), -1.0);
  while (detail::student_t_lower_tail(lo, nu) > p) {
    hi = lo;
    lo *= 2.0;
    if (!std::isfinite(lo)) return -std::numeric_limits<double>::max();
  }
  double t = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double tail = detail::student_t_lower_tail(t, nu);
    if (tail > p) {
      hi = t;
    } else {
      lo = t;
    }
    const double f = std::log(tail) - log_target;
    const double slope = std::exp(student_t_log_pdf(t, nu) - std::log(tail));
    double next = t - f / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t))) return next;
    t = next;
  }
  return t;
}

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x);

namespace detail {

inline double gamma_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_continued_fraction(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

inline double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("gamma_p: a must be positive");
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_series(a, x);
  return 1.0 - detail::gamma_continued_fraction(a, x);
}

inline double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw DomainError("gamma_q: a must be positive");
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_series(a, x);
  return detail::gamma_continued_fraction(a, x);
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
inline double chi2_sf(double x, double df) {
  if (!(df > 0.0)) throw DomainError("chi2_sf: df must be positive");
  return gamma_q(0.5 * df, 0.5 * x);
}

inline double chi2_cdf(double x, double df) {
  if (!(df > 0.0)) throw DomainError("chi2_cdf: df must be positive");
  return gamma_p(0.5 * df, 0.5 * x);
}

}  // namespace mlm::special
