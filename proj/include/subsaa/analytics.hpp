#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "rng.hpp"
#include "special.hpp"

namespace subsaa {

// P(some component of the full-sample solution is off by the full box width),
// i.e. 1 - (1 - 2 Phi(-gamma sqrt(nu)))^n, evaluated in log space so the
// deep-tail regime keeps relative accuracy.
inline double single_sample_error_prob(std::size_t n, double gamma, double nu) {
  if (n < 1 || !(gamma > 0.0) || !(nu >= 1.0))
    throw std::domain_error("single_sample_error_prob: need n >= 1, gamma > 0, nu >= 1");
  const double q = 2.0 * normal_cdf(-gamma * std::sqrt(nu));
  return -std::expm1(static_cast<double>(n) * std::log1p(-q));
}

// Same event for the K-batch mean: 1 - (1 - (2 Phi(-gamma sqrt(nu/K)))^K)^n.
inline double batch_error_prob(std::size_t n, double gamma, double nu, std::size_t K) {
  if (n < 1 || !(gamma > 0.0) || !(nu >= 1.0))
    throw std::domain_error("batch_error_prob: need n >= 1, gamma > 0, nu >= 1");
  if (K < 1 || static_cast<double>(K) > nu)
    throw std::domain_error("batch_error_prob: need 1 <= K <= nu");
  if (K == 1) return single_sample_error_prob(n, gamma, nu);
  const double q = 2.0 * normal_cdf(-gamma * std::sqrt(nu / static_cast<double>(K)));
  const double qk = std::exp(static_cast<double>(K) * std::log(q));
  return -std::expm1(static_cast<double>(n) * std::log1p(-qk));
}

// Strict inequality (2 Phi(-gamma sqrt(nu/K)))^K < 2 Phi(-gamma sqrt(nu)).
// K = 1 gives equality, hence false.
inline bool dominance_check(double nu, std::size_t K, double gamma) {
  if (!(nu >= 1.0) || K < 1 || !(gamma > 0.0))
    throw std::domain_error("dominance_check: need nu >= 1, K >= 1, gamma > 0");
  const double lhs =
      static_cast<double>(K) *
      std::log(2.0 * normal_cdf(-gamma * std::sqrt(nu / static_cast<double>(K))));
  const double rhs = std::log(2.0 * normal_cdf(-gamma * std::sqrt(nu)));
  return lhs < rhs;
}

// P(relative error >= 1) for the ball instance: the squared error is
// distributed as chi2(n) / chi2'(1, lambda=nu), so the event is
// {noncentral F(1, n, nu) <= n} under the standard parameterization.
inline double ball_error_prob(std::size_t n, double nu) {
  if (n < 1 || !(nu >= 0.0))
    throw std::domain_error("ball_error_prob: need n >= 1, nu >= 0");
  const double dn = static_cast<double>(n);
  return noncentral_f_cdf(dn, 1.0, dn, nu);
}

struct GapPoint {
  double nu = 0.0;
  double gap = 0.0;
};

// Error probability under the limiting distribution minus the finite-sample
// one, P(chi2(n) <= 1) - P(F(1, n, lambda=nu) <= n). The curve rises toward
// zero as the noncentral term drains below the (tiny) chi-square constant.
inline std::vector<GapPoint> asymptotic_gap_curve(std::size_t n,
                                                  const std::vector<double>& nu_list) {
  if (n < 1) throw std::domain_error("asymptotic_gap_curve: need n >= 1");
  const double asym = chi_square_cdf(1.0, static_cast<double>(n));
  std::vector<GapPoint> out;
  out.reserve(nu_list.size());
  for (double nu : nu_list) {
    if (!(nu >= 0.0))
      throw std::domain_error("asymptotic_gap_curve: nu values must be >= 0");
    out.push_back({nu, asym - ball_error_prob(n, nu)});
  }
  return out;
}

struct AsymptoticSpec {
  Matrix hessian;        // expected Hessian at the optimum, symmetric PD
  Matrix gradient_cov;   // covariance of the sampled gradient, PSD
  Matrix active_rows;    // one row per active constraint (may have zero rows)
  Vector mean_gradient;  // expected gradient at the optimum
};

struct AsymptoticDraw {
  Vector u;
  Vector pi;
  double kkt_residual = 0.0;
};

// Equality-constrained KKT solve for min 0.5 u'Hu + c'u s.t. rows.u = 0,
// with an active-set loop: rows whose multiplier comes out negative are
// released, and released rows that the relaxed solution then violates are
// pulled back in. Useful directly in tests where c is pinned.
inline AsymptoticDraw solve_asymptotic_kkt(const AsymptoticSpec& spec, const Vector& c) {
  const std::size_t n = spec.hessian.rows;
  if (spec.hessian.cols != n || c.size() != n)
    throw std::invalid_argument("solve_asymptotic_kkt: dimension mismatch");

  // The gradient row only constrains u when no explicit active rows exist;
  // with active rows present it lies in their span.
  Matrix rows = spec.active_rows;
  const bool use_gradient_row =
      rows.rows == 0 && norm_inf(spec.mean_gradient) > 0.0;
  if (use_gradient_row) {
    rows = Matrix(1, n);
    for (std::size_t j = 0; j < n; ++j) rows(0, j) = spec.mean_gradient[j];
  }
  const std::size_t m = rows.rows;

  std::vector<bool> active(m, true);
  AsymptoticDraw draw;
  for (std::size_t round = 0; round <= 2 * m + 1; ++round) {
    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < m; ++i)
      if (active[i]) act.push_back(i);
    const std::size_t ma = act.size();

    Matrix kkt(n + ma, n + ma);
    Vector rhs(n + ma, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) kkt(i, j) = spec.hessian(i, j);
      rhs[i] = -c[i];
    }
    for (std::size_t a = 0; a < ma; ++a)
      for (std::size_t j = 0; j < n; ++j) {
        kkt(j, n + a) = rows(act[a], j);
        kkt(n + a, j) = rows(act[a], j);
      }
    const auto sol = lu_solve(kkt, rhs);
    if (!sol)
      throw std::domain_error("solve_asymptotic_kkt: singular KKT system (degenerate)");

    draw.u.assign(sol->begin(), sol->begin() + n);
    draw.pi.assign(m, 0.0);
    for (std::size_t a = 0; a < ma; ++a) draw.pi[act[a]] = (*sol)[n + a];

    // Multipliers of explicit constraint rows must be nonnegative; the
    // pinned gradient row is a genuine equality and its sign is free.
    std::size_t worst = m;
    double most_negative = -1e-10;
    if (!use_gradient_row)
      for (std::size_t a = 0; a < ma; ++a)
        if (draw.pi[act[a]] < most_negative) {
          most_negative = draw.pi[act[a]];
          worst = act[a];
        }
    if (worst < m) {
      active[worst] = false;
      continue;
    }

    bool violated = false;
    for (std::size_t i = 0; i < m && !violated; ++i)
      if (!active[i]) {
        double ru = 0.0;
        for (std::size_t j = 0; j < n; ++j) ru += rows(i, j) * draw.u[j];
        if (ru > 1e-10) {
          active[i] = true;
          violated = true;
        }
      }
    if (violated) continue;

    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double g = c[i];
      for (std::size_t j = 0; j < n; ++j) g += spec.hessian(i, j) * draw.u[j];
      for (std::size_t k = 0; k < m; ++k) g += rows(k, i) * draw.pi[k];
      res = std::max(res, std::abs(g));
    }
    for (std::size_t a = 0; a < ma; ++a) {
      double ru = 0.0;
      for (std::size_t j = 0; j < n; ++j) ru += rows(act[a], j) * draw.u[j];
      res = std::max(res, std::abs(ru));
    }
    draw.kkt_residual = res;
    return draw;
  }
  throw std::domain_error("solve_asymptotic_kkt: active-set loop failed to settle");
}

// Draws c ~ N(0, gradient_cov) and solves for the limiting error direction.
inline AsymptoticDraw sample_asymptotic_solution(const AsymptoticSpec& spec,
                                                 RngStream stream) {
  const std::size_t n = spec.hessian.rows;
  if (spec.gradient_cov.rows != n || spec.gradient_cov.cols != n)
    throw std::invalid_argument("sample_asymptotic_solution: covariance shape mismatch");
  const Matrix factor = psd_sqrt(spec.gradient_cov);
  Vector z(n);
  for (std::size_t j = 0; j < n; ++j) z[j] = stream.next_normal();
  Vector c = matvec(factor, z);
  return solve_asymptotic_kkt(spec, c);
}

// Second-order loss estimate 0.5 * trace(V H) for an estimator with
// covariance V around an optimum with Hessian H.
inline double loss_approximation(const Matrix& V, const Matrix& H) {
  if (V.rows != V.cols || H.rows != H.cols || V.rows != H.rows)
    throw std::invalid_argument("loss_approximation: dimension mismatch");
  double tr = 0.0;
  for (std::size_t i = 0; i < V.rows; ++i)
    for (std::size_t k = 0; k < V.cols; ++k) tr += V(i, k) * H(k, i);
  return 0.5 * tr;
}

struct ChebyshevBoundInput {
  double bias = 0.0;        // deterministic offset b of the deviation norm
  double direction_norm = 1.0;  // M, uniform bound on direction norms
  double face_dimension = 1.0;  // N, number of extreme directions in play
  double weight_bound = 0.0;    // g, numerator of the expected-weight bound g/N
  std::size_t batches = 1;      // K
  double deviation = 0.0;       // a, number of deviation units
};

struct ChebyshevBound {
  double threshold = 0.0;
  double prob_bound = 1.0;
};

// Threshold b + a M sqrt((N+1) g (N-g)) / (sqrt(K) N) with tail mass at most
// 1 / (a^2 + 1).
inline ChebyshevBound chebyshev_error_bound(const ChebyshevBoundInput& in) {
  if (!(in.weight_bound > 0.0) || !(in.weight_bound < in.face_dimension))
    throw std::domain_error("chebyshev_error_bound: need 0 < g < N");
  if (!(in.direction_norm > 0.0) || in.batches < 1 || !(in.deviation >= 0.0) ||
      !(in.bias >= 0.0))
    throw std::domain_error("chebyshev_error_bound: need M > 0, K >= 1, a >= 0, b >= 0");
  const double N = in.face_dimension;
  const double g = in.weight_bound;
  ChebyshevBound out;
  out.threshold = in.bias + in.deviation * in.direction_norm *
                               std::sqrt((N + 1.0) * g * (N - g)) /
                               (std::sqrt(static_cast<double>(in.batches)) * N);
  out.prob_bound = 1.0 / (in.deviation * in.deviation + 1.0);
  return out;
}

struct TailFit {
  double alpha = 0.0;
  double beta = 0.0;
  double r_squared = 0.0;
};

// Least-squares fit of log p against nu, so p(nu) ~ alpha * exp(-beta nu).
// Points with p <= 0 are dropped; by default the first fifth of the
// surviving points is discarded as pre-asymptotic head.
inline TailFit fit_exponential_tail(std::vector<std::pair<double, double>> points,
                                    bool discard_head = true) {
  std::erase_if(points, [](const auto& p) { return !(p.second > 0.0); });
  std::sort(points.begin(), points.end());
  if (discard_head)
    points.erase(points.begin(),
                 points.begin() + static_cast<std::ptrdiff_t>(points.size() / 5));
  if (points.size() < 3)
    throw std::domain_error("fit_exponential_tail: need at least 3 usable points");

  const double m = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [x, p] : points) {
    const double y = std::log(p);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-30)
    throw std::domain_error("fit_exponential_tail: nu values are all identical");
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;

  double ss_res = 0.0, ss_tot = 0.0;
  const double y_mean = sy / m;
  for (const auto& [x, p] : points) {
    const double y = std::log(p);
    const double fit = intercept + slope * x;
    ss_res += (y - fit) * (y - fit);
    ss_tot += (y - y_mean) * (y - y_mean);
  }

  TailFit out;
  out.alpha = std::exp(intercept);
  out.beta = -slope;
  // Constant input has no variance to explain; r^2 = 0 marks the fit as
  // uninformative even though the residuals vanish.
  out.r_squared = ss_tot > 1e-30 ? 1.0 - ss_res / ss_tot : 0.0;
  return out;
}

} // namespace subsaa
