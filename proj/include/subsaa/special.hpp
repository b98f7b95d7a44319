#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace subsaa {

inline double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014326779399461;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) {
  static const double inv_sqrt2 = 0.7071067811865475244008444;
  return 0.5 * std::erfc(-x * inv_sqrt2);
}

struct AsymptoticTail {
  double value = 0.0;
  // The truncated series brackets the exact tail: an even number of
  // correction terms overshoots, an odd number undershoots.
  bool is_upper_bound = true;
};

// Tail expansion Phi(-x) ~ phi(x) * sum_{i=0..n_terms} (-1)^i (2i-1)!! x^-(2i+1).
inline AsymptoticTail normal_cdf_asymptotic(double x, int n_terms) {
  if (!(x > 0.0))
    throw std::domain_error("normal_cdf_asymptotic: x must be positive");
  if (n_terms < 0)
    throw std::domain_error("normal_cdf_asymptotic: term count must be >= 0");
  double term = 1.0 / x;
  double sum = term;
  for (int i = 1; i <= n_terms; ++i) {
    term *= -(2.0 * i - 1.0) / (x * x);
    sum += term;
  }
  return {normal_pdf(x) * sum, n_terms % 2 == 0};
}

namespace detail {

// Regularized lower incomplete gamma P(s, x), series branch.
inline double gamma_p_series(double s, double x) {
  double term = 1.0 / s;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= x / (s + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

// Regularized upper incomplete gamma Q(s, x), Lentz continued fraction.
inline double gamma_q_cf(double s, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - s;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int k = 1; k < 500; ++k) {
    const double an = -k * (k - s);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

inline double gamma_p(double s, double x) {
  if (x < 0.0 || s <= 0.0)
    throw std::domain_error("gamma_p: requires x >= 0 and s > 0");
  if (x == 0.0) return 0.0;
  if (x < s + 1.0) return gamma_p_series(s, x);
  return 1.0 - gamma_q_cf(s, x);
}

// Continued fraction for the regularized incomplete beta function.
inline double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < 1000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h;
}

// Regularized incomplete beta I_x(a, b).
inline double beta_inc(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0)
    throw std::domain_error("beta_inc: shape parameters must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                        a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(log_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

} // namespace detail

inline double chi_square_cdf(double x, double df) {
  if (!(df > 0.0))
    throw std::domain_error("chi_square_cdf: df must be positive");
  if (x < 0.0) return 0.0;
  return detail::gamma_p(0.5 * df, 0.5 * x);
}

inline double f_cdf(double x, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0))
    throw std::domain_error("f_cdf: degrees of freedom must be positive");
  if (x <= 0.0) return 0.0;
  return detail::beta_inc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2));
}

// CDF of the noncentral F distribution with numerator noncentrality lambda,
// evaluated as a Poisson(lambda/2) mixture of incomplete beta terms. The
// mixture is walked outward from the Poisson mode so that large lambda does
// not underflow, and stops once the unaccounted mass is below 1e-12.
inline double noncentral_f_cdf(double x, double d1, double d2, double lambda) {
  if (!(d1 > 0.0) || !(d2 > 0.0))
    throw std::domain_error("noncentral_f_cdf: degrees of freedom must be positive");
  if (lambda < 0.0)
    throw std::domain_error("noncentral_f_cdf: lambda must be >= 0");
  if (x <= 0.0) return 0.0;
  const double y = d1 * x / (d1 * x + d2);
  const double half = 0.5 * lambda;
  if (half == 0.0) return detail::beta_inc(0.5 * d1, 0.5 * d2, y);

  const auto log_weight = [&](long j) {
    return -half + j * std::log(half) - std::lgamma(static_cast<double>(j) + 1.0);
  };
  const auto term = [&](long j) {
    return detail::beta_inc(0.5 * d1 + static_cast<double>(j), 0.5 * d2, y);
  };

  const long mode = static_cast<long>(half);
  double mass = std::exp(log_weight(mode));
  double sum = mass * term(mode);
  long lo = mode, hi = mode;
  double w_lo = mass, w_hi = mass;
  for (long step = 0; step < 4000000 && mass < 1.0 - 1e-12; ++step) {
    bool advanced = false;
    if (hi - mode < 4000000) {
      ++hi;
      w_hi *= half / static_cast<double>(hi);
      if (w_hi > 0.0) {
        mass += w_hi;
        sum += w_hi * term(hi);
        advanced = true;
      }
    }
    if (lo > 0) {
      w_lo *= static_cast<double>(lo) / half;
      --lo;
      if (w_lo > 0.0) {
        mass += w_lo;
        sum += w_lo * term(lo);
        advanced = true;
      }
    }
    if (!advanced) break;
  }
  return std::min(sum, 1.0);
}

} // namespace subsaa
