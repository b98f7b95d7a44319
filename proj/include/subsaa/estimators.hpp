#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "problems.hpp"
#include "samples.hpp"

namespace subsaa {

// Raised when a per-batch solve does not reach a usable solution; experiment
// drivers catch it and count the replication as aborted.
class SolverFailure : public std::runtime_error {
public:
  SolverFailure(std::size_t batch, const std::string& what)
      : std::runtime_error("batch " + std::to_string(batch) + ": " + what),
        batch_(batch) {}
  std::size_t batch() const { return batch_; }

private:
  std::size_t batch_;
};

// Contiguous row ranges; remainders go to the earliest batches so sizes are
// non-increasing.
inline std::vector<std::pair<std::size_t, std::size_t>>
partition_batches(std::size_t nu, std::size_t K) {
  if (K == 0 || K > nu)
    throw std::domain_error("partition_batches: need 1 <= K <= sample count");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(K);
  const std::size_t base = nu / K;
  const std::size_t extra = nu % K;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < K; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    out.emplace_back(begin, begin + len);
    begin += len;
  }
  return out;
}

struct EstimateResult {
  Vector estimate;
  std::vector<Vector> batch_solutions;
  std::vector<std::size_t> batch_sizes;
  double max_kkt_residual = 0.0;
  std::size_t total_iterations = 0;
};

namespace detail {

inline SolveResult solve_batch(const ProblemSpec& p, const SampleSet& samples,
                               std::size_t row_begin, std::size_t row_end) {
  return std::visit(
      [&](const auto& q) -> SolveResult {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, L1BoxProblem>) {
          const MomentEstimate m = sample_moments(samples, row_begin, row_end);
          return solve_l1_box(m.mean, q.gamma);
        } else if constexpr (std::is_same_v<T, BallQuadraticProblem>) {
          const MomentEstimate m = sample_moments(samples, row_begin, row_end);
          Vector mean_returns(m.mean.begin(), m.mean.begin() + q.n);
          return solve_ball_quadratic(mean_returns, m.mean[q.n], q.gamma);
        } else if constexpr (std::is_same_v<T, PortfolioProblem>) {
          SampleSet batch;
          batch.rows = row_end - row_begin;
          batch.cols = samples.cols;
          batch.data.assign(samples.data.begin() + row_begin * samples.cols,
                            samples.data.begin() + row_end * samples.cols);
          Vector linear;
          Matrix quad;
          build_portfolio_qp(batch, q.gamma, linear, quad);
          SolveResult sol = solve_box_qp(linear, quad, q.lower, q.upper);
          if (q.debias) {
            // The shrink can leave a box that excludes the origin, so the
            // scaled point is clamped back onto the bounds.
            const double scale = portfolio_debias_scale(batch.rows, q.n);
            for (std::size_t j = 0; j < q.n; ++j)
              sol.x[j] = std::clamp(scale * sol.x[j], q.lower[j], q.upper[j]);
          }
          return sol;
        } else {
          Vector col(samples.data.begin() + row_begin,
                     samples.data.begin() + row_end);
          return solve_tracking(col, 0, col.size());
        }
      },
      p);
}

} // namespace detail

// Splits the sample into K contiguous batches, solves each, and averages the
// batch solutions. K = 1 is the plain full-sample estimator.
inline EstimateResult subsample_estimate(const ProblemSpec& p,
                                         const SampleSet& samples, std::size_t K) {
  if (samples.cols != sample_columns(p))
    throw std::invalid_argument("subsample_estimate: sample width does not match problem");
  const auto ranges = partition_batches(samples.rows, K);
  const std::size_t n = problem_dimension(p);

  EstimateResult out;
  out.estimate.assign(n, 0.0);
  out.batch_solutions.reserve(K);
  out.batch_sizes.reserve(K);
  for (std::size_t b = 0; b < ranges.size(); ++b) {
    SolveResult sol = detail::solve_batch(p, samples, ranges[b].first, ranges[b].second);
    if (sol.status == SolveStatus::iteration_limit)
      throw SolverFailure(b, "solver hit the iteration limit with residual " +
                                 std::to_string(sol.kkt_residual));
    if (sol.status == SolveStatus::degenerate)
      throw SolverFailure(b, "batch problem is degenerate");
    out.max_kkt_residual = std::max(out.max_kkt_residual, sol.kkt_residual);
    out.total_iterations += sol.iterations;
    out.batch_sizes.push_back(ranges[b].second - ranges[b].first);
    for (std::size_t j = 0; j < n; ++j) out.estimate[j] += sol.x[j];
    out.batch_solutions.push_back(std::move(sol.x));
  }
  for (double& v : out.estimate) v /= static_cast<double>(K);
  return out;
}

inline EstimateResult full_sample_estimate(const ProblemSpec& p,
                                           const SampleSet& samples) {
  return subsample_estimate(p, samples, 1);
}

struct EvaluationRecord {
  double rel_distance = 0.0;
  double rel_objective_loss = 0.0;
  double abs_loss = 0.0;
};

// Compares an estimate against the true optimum. Distance is relative to
// |x*| when x* is nonzero and absolute otherwise; loss is scaled by -z*
// (positive for the minimization problems whose optimum is a gain) and
// stays absolute when z* = 0.
inline EvaluationRecord evaluate_estimate(const ProblemSpec& p, const Vector& estimate) {
  const SolveResult truth = true_solution(p);
  const double z_star = true_objective(p, truth.x);

  EvaluationRecord rec;
  Vector diff = estimate;
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] -= truth.x[j];
  const double dist = norm2(diff);
  const double ref = norm2(truth.x);
  rec.rel_distance = ref > 0.0 ? dist / ref : dist;

  rec.abs_loss = true_objective(p, estimate) - z_star;
  if (rec.abs_loss < 0.0 && rec.abs_loss > -1e-12) rec.abs_loss = 0.0;
  rec.rel_objective_loss =
      z_star != 0.0 ? rec.abs_loss / -z_star : rec.abs_loss;
  return rec;
}

} // namespace subsaa
