#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "linalg.hpp"
#include "samples.hpp"

namespace subsaa {

// min_x  -xi_bar' x + gamma * |x|_1  over the box [-1, 1]^n.
struct L1BoxProblem {
  std::size_t n = 0;
  double gamma = 1.0;
};

// min_x  -xi_bar' x + (gamma / 2) * s2_bar * |x|^2  over the unit ball,
// where each observation carries n return coordinates plus one dispersion
// coordinate s (so sample rows have n + 1 columns).
struct BallQuadraticProblem {
  std::size_t n = 0;
  double gamma = 1.0;
  double mean_dispersion = 1.0;
};

// Mean-variance portfolio over a box: min -mu_hat' x + (gamma/2) x' Q x
// with Q built from the sample covariance (optionally bias-adjusted).
struct PortfolioProblem {
  std::size_t n = 0;
  double gamma = 1.0;
  Vector mu;
  Matrix sigma;
  Vector lower;
  Vector upper;
  bool debias = true;
};

// Scalar tracking of a discrete scenario set: min E[(x - xi)^2] over [-1, 1].
struct TrackingProblem {
  Vector support;
};

using ProblemSpec =
    std::variant<L1BoxProblem, BallQuadraticProblem, PortfolioProblem, TrackingProblem>;

enum class SolveStatus { converged, iteration_limit, degenerate };

struct SolveResult {
  Vector x;
  double in_sample_value = 0.0;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;
  SolveStatus status = SolveStatus::converged;
};

inline SolveResult solve_l1_box(const Vector& xi_bar, double gamma) {
  if (!(gamma > 0.0))
    throw std::domain_error("solve_l1_box: gamma must be positive");
  SolveResult r;
  r.x.assign(xi_bar.size(), 0.0);
  double value = 0.0;
  for (std::size_t j = 0; j < xi_bar.size(); ++j) {
    // Strict threshold: a component exactly at gamma stays at zero.
    if (std::abs(xi_bar[j]) > gamma) {
      r.x[j] = xi_bar[j] > 0.0 ? 1.0 : -1.0;
      value += -xi_bar[j] * r.x[j] + gamma;
    }
  }
  r.in_sample_value = value;
  return r;
}

inline SolveResult solve_ball_quadratic(const Vector& xi_bar, double s2_bar,
                                        double gamma) {
  if (!(gamma > 0.0))
    throw std::domain_error("solve_ball_quadratic: gamma must be positive");
  SolveResult r;
  const std::size_t n = xi_bar.size();
  const double norm_mean = norm2(xi_bar);
  if (s2_bar > 0.0) {
    r.x = xi_bar;
    for (double& v : r.x) v /= gamma * s2_bar;
    const double norm_x = norm_mean / (gamma * s2_bar);
    if (norm_x > 1.0)
      for (double& v : r.x) v /= norm_x;
  } else if (norm_mean > 0.0) {
    // Concave (or flat) quadratic: the minimizer sits on the sphere.
    r.x = xi_bar;
    for (double& v : r.x) v /= norm_mean;
  } else {
    // Every boundary point is optimal; pick the first basis vector and flag it.
    r.x.assign(n, 0.0);
    if (n > 0) r.x[0] = 1.0;
    r.status = SolveStatus::degenerate;
  }
  const double nx2 = dot(r.x, r.x);
  r.in_sample_value = -dot(xi_bar, r.x) + 0.5 * gamma * s2_bar * nx2;
  return r;
}

// Projected accelerated gradient descent for
//   min  linear' x + 0.5 x' Q x   s.t.  lower <= x <= upper.
// Q must be symmetric positive semidefinite.
inline SolveResult solve_box_qp(const Vector& linear, const Matrix& quadratic,
                                const Vector& lower, const Vector& upper,
                                double tol = 1e-10, std::size_t max_iter = 50000) {
  const std::size_t n = linear.size();
  if (quadratic.rows != n || quadratic.cols != n ||
      lower.size() != n || upper.size() != n)
    throw std::invalid_argument("solve_box_qp: size mismatch");
  for (std::size_t j = 0; j < n; ++j)
    if (lower[j] > upper[j])
      throw std::domain_error("solve_box_qp: infeasible bounds at component " +
                              std::to_string(j));
  const double scale = std::max(max_abs(quadratic), 1.0);
  if (!is_symmetric(quadratic, 1e-10 * scale))
    throw std::domain_error("solve_box_qp: quadratic term is not symmetric");
  if (min_eigenvalue(quadratic) < -1e-10 * scale)
    throw std::domain_error("solve_box_qp: quadratic term is not positive semidefinite");

  const auto clip = [&](Vector& v) {
    for (std::size_t j = 0; j < n; ++j) v[j] = std::clamp(v[j], lower[j], upper[j]);
  };
  const auto gradient = [&](const Vector& x) {
    Vector g = matvec(quadratic, x);
    for (std::size_t j = 0; j < n; ++j) g[j] += linear[j];
    return g;
  };
  const auto objective = [&](const Vector& x) {
    return dot(linear, x) + 0.5 * dot(x, matvec(quadratic, x));
  };
  // Natural residual with unit step; zero exactly at a KKT point of the box.
  const auto residual = [&](const Vector& x, const Vector& g) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = std::clamp(x[j] - g[j], lower[j], upper[j]);
      s += (x[j] - p) * (x[j] - p);
    }
    return std::sqrt(s);
  };

  const double lmax = power_iteration_lmax(quadratic);
  const double step = 1.0 / std::max(lmax * 1.02, 1e-12);

  SolveResult r;
  r.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) r.x[j] = 0.5 * (lower[j] + upper[j]);
  Vector y = r.x;
  Vector x_prev = r.x;
  double t_prev = 1.0;
  double best_obj = objective(r.x);
  Vector best_x = r.x;

  for (std::size_t it = 1; it <= max_iter; ++it) {
    Vector g = gradient(y);
    Vector x_next = y;
    for (std::size_t j = 0; j < n; ++j) x_next[j] -= step * g[j];
    clip(x_next);

    const Vector gx = gradient(x_next);
    const double res = residual(x_next, gx);
    const double obj = objective(x_next);
    if (obj < best_obj) {
      best_obj = obj;
      best_x = x_next;
    }
    if (res <= tol) {
      r.x = x_next;
      r.iterations = it;
      r.kkt_residual = res;
      r.in_sample_value = obj;
      return r;
    }

    // Momentum with restart whenever the objective moves the wrong way.
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
    if (obj > objective(x_prev)) {
      y = x_next;
      t_prev = 1.0;
    } else {
      const double beta = (t_prev - 1.0) / t_next;
      for (std::size_t j = 0; j < n; ++j)
        y[j] = x_next[j] + beta * (x_next[j] - x_prev[j]);
      clip(y);
      t_prev = t_next;
    }
    x_prev = x_next;
  }

  r.x = best_x;
  r.iterations = max_iter;
  {
    const Vector g = gradient(best_x);
    r.kkt_residual = residual(best_x, g);
  }
  r.in_sample_value = best_obj;
  r.status = SolveStatus::iteration_limit;
  return r;
}

inline SolveResult solve_tracking(const Vector& xi, std::size_t row_begin,
                                  std::size_t row_end) {
  double mean = 0.0;
  for (std::size_t r = row_begin; r < row_end; ++r) mean += xi[r];
  mean /= static_cast<double>(row_end - row_begin);
  SolveResult r;
  r.x.assign(1, std::clamp(mean, -1.0, 1.0));
  double value = 0.0;
  for (std::size_t i = row_begin; i < row_end; ++i) {
    const double d = r.x[0] - xi[i];
    value += d * d;
  }
  r.in_sample_value = value / static_cast<double>(row_end - row_begin);
  return r;
}

// Portfolio objective terms from a batch of samples: linear = -r_hat,
// quadratic = gamma * Sigma_hat.
inline void build_portfolio_qp(const SampleSet& batch, double gamma,
                               Vector& linear, Matrix& quadratic) {
  const MomentEstimate m = sample_moments(batch);
  linear = m.mean;
  for (double& v : linear) v = -v;
  quadratic = m.covariance;
  for (double& v : quadratic.data) v *= gamma;
}

// Factor (count - n - 2) / count that multiplies a solved portfolio point.
// The minimizer of the sampled objective overshoots the true weights by the
// reciprocal of this factor in expectation, and the shrink applies to the
// solved point whether or not box bounds were active there.
inline double portfolio_debias_scale(std::size_t count, std::size_t n) {
  if (count <= n + 2)
    throw std::domain_error(
        "portfolio_debias_scale: bias adjustment needs per-batch count > n + 2 "
        "(got count " + std::to_string(count) + ", n " + std::to_string(n) + ")");
  return static_cast<double>(count - n - 2) / static_cast<double>(count);
}

inline std::size_t problem_dimension(const ProblemSpec& p) {
  return std::visit(
      [](const auto& q) -> std::size_t {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, TrackingProblem>)
          return 1;
        else
          return q.n;
      },
      p);
}

// Number of columns a sample row must have for this family.
inline std::size_t sample_columns(const ProblemSpec& p) {
  return std::visit(
      [](const auto& q) -> std::size_t {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, TrackingProblem>)
          return 1;
        else if constexpr (std::is_same_v<T, BallQuadraticProblem>)
          return q.n + 1;
        else
          return q.n;
      },
      p);
}

inline double true_objective(const ProblemSpec& p, const Vector& x) {
  if (x.size() != problem_dimension(p))
    throw std::domain_error("true_objective: decision vector has wrong dimension");
  return std::visit(
      [&](const auto& q) -> double {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, L1BoxProblem>) {
          // True return mean is zero, so only the penalty survives.
          double l1 = 0.0;
          for (double v : x) l1 += std::abs(v);
          return q.gamma * l1;
        } else if constexpr (std::is_same_v<T, BallQuadraticProblem>) {
          return 0.5 * q.gamma * q.mean_dispersion * dot(x, x);
        } else if constexpr (std::is_same_v<T, PortfolioProblem>) {
          return -dot(q.mu, x) + 0.5 * q.gamma * dot(x, matvec(q.sigma, x));
        } else {
          double s = 0.0;
          for (double xi : q.support) {
            const double d = x[0] - xi;
            s += d * d;
          }
          return s / static_cast<double>(q.support.size());
        }
      },
      p);
}

// Minimizer and optimal value under the true distribution.
inline SolveResult true_solution(const ProblemSpec& p) {
  return std::visit(
      [&](const auto& q) -> SolveResult {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, L1BoxProblem>) {
          return solve_l1_box(Vector(q.n, 0.0), q.gamma);
        } else if constexpr (std::is_same_v<T, BallQuadraticProblem>) {
          return solve_ball_quadratic(Vector(q.n, 0.0), q.mean_dispersion, q.gamma);
        } else if constexpr (std::is_same_v<T, PortfolioProblem>) {
          Vector linear = q.mu;
          for (double& v : linear) v = -v;
          Matrix quad = q.sigma;
          for (double& v : quad.data) v *= q.gamma;
          return solve_box_qp(linear, quad, q.lower, q.upper, 1e-12);
        } else {
          SolveResult r = solve_tracking(q.support, 0, q.support.size());
          r.in_sample_value = true_objective(p, r.x);
          return r;
        }
      },
      p);
}

} // namespace subsaa
