#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "analytics.hpp"
#include "estimators.hpp"
#include "problems.hpp"
#include "rng.hpp"
#include "samples.hpp"
#include "version.hpp"

namespace subsaa {

enum class Family { portfolio, ball, l1 };

struct ExperimentConfig {
  Family family = Family::portfolio;
  std::string label = "portfolio";
  std::size_t n = 10;
  std::size_t nu = 500;
  std::size_t K = 10;
  double gamma = 1.0;
  std::size_t replications = 200;
  double box_lower = 0.0;
  double box_upper = 1.0;
  double mu_scalar = 0.02;
  double sigma_scalar = 0.05;
  // Deviation-bound inputs for the prop2 run.
  double weight_bound = 0.3;
  std::uint64_t root_seed = 20240817;
  std::size_t histogram_bins = 50;
  std::size_t threads = 0; // 0 picks the hardware concurrency
};

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.replications < 1)
    throw std::domain_error("config invariant: reps must be >= 1");
  if (cfg.n < 1) throw std::domain_error("config invariant: n must be >= 1");
  if (cfg.nu < 1) throw std::domain_error("config invariant: nu must be >= 1");
  if (cfg.K < 1 || cfg.K > cfg.nu)
    throw std::domain_error("config invariant: need 1 <= k <= nu");
  if (!(cfg.gamma > 0.0))
    throw std::domain_error("config invariant: gamma must be positive");
  if (cfg.histogram_bins < 2)
    throw std::domain_error("config invariant: bins must be >= 2");
  if (cfg.family == Family::portfolio) {
    if (!(cfg.box_lower < cfg.box_upper))
      throw std::domain_error("config invariant: box lower bound must be below upper");
    const std::size_t per_batch = cfg.nu / cfg.K;
    if (per_batch <= cfg.n + 2)
      throw std::domain_error(
          "config invariant: per-batch sample count nu/k = " +
          std::to_string(per_batch) + " must exceed n + 2 = " +
          std::to_string(cfg.n + 2) + " for the solution debias factor");
  }
}

struct ReplicationRecord {
  std::size_t rep = 0;
  bool aborted = false;
  EvaluationRecord full_eval;
  EvaluationRecord sub_eval;
  double diff_rel_loss = 0.0;
  double diff_rel_dist = 0.0;
  double full_mean_weight = 0.0;
  double sub_mean_weight = 0.0;
  // Run-specific scratch values reduced into the report details; never
  // serialized per replication.
  std::array<double, 3> extras{};
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ReplicationRecord> records;
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  std::size_t aborted = 0;
  double mean_diff_rel_loss = 0.0;
  double mean_diff_rel_dist = 0.0;
  double mean_full_weight = 0.0;
  double mean_sub_weight = 0.0;
  std::vector<std::size_t> hist_diff_rel_loss;
  std::vector<std::size_t> hist_diff_rel_dist;
  double wall_seconds = 0.0;
  std::string version = kVersion;
  // Ordered extra summary values specific to the run kind.
  std::vector<std::pair<std::string, double>> details;
};

namespace detail {

inline double mean_of(const Vector& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Runs body(r) for r in [0, reps), spreading work over a pool. Bodies write
// only to their own replication slot, so the schedule cannot affect results.
template <class Body>
void for_each_replication(std::size_t reps, std::size_t threads, Body&& body) {
  std::size_t workers = threads != 0 ? threads : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min({workers, reps, std::size_t{64}}));
  if (workers == 1) {
    for (std::size_t r = 0; r < reps; ++r) body(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t r = next.fetch_add(1);
        if (r >= reps) break;
        try {
          body(r);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::size_t histogram_bin(double value, std::size_t bins) {
  const double pos = (value + 1.0) / 2.0 * static_cast<double>(bins);
  const auto idx = static_cast<long long>(std::floor(pos));
  if (idx < 0) return 0;
  if (idx >= static_cast<long long>(bins)) return bins - 1;
  return static_cast<std::size_t>(idx);
}

// Serial reduction pass; runs after the parallel section so summary numbers
// never depend on thread interleaving.
inline void finalize_summary(ExperimentReport& report) {
  const std::size_t bins = report.config.histogram_bins;
  report.hist_diff_rel_loss.assign(bins, 0);
  report.hist_diff_rel_dist.assign(bins, 0);
  report.wins = report.losses = report.ties = report.aborted = 0;
  double sum_loss = 0.0, sum_dist = 0.0, sum_wf = 0.0, sum_ws = 0.0;
  std::size_t completed = 0;
  for (const auto& rec : report.records) {
    if (rec.aborted) {
      ++report.aborted;
      continue;
    }
    ++completed;
    if (rec.sub_eval.rel_distance < rec.full_eval.rel_distance)
      ++report.wins;
    else if (rec.sub_eval.rel_distance == rec.full_eval.rel_distance)
      ++report.ties;
    else
      ++report.losses;
    sum_loss += rec.diff_rel_loss;
    sum_dist += rec.diff_rel_dist;
    sum_wf += rec.full_mean_weight;
    sum_ws += rec.sub_mean_weight;
    ++report.hist_diff_rel_loss[histogram_bin(rec.diff_rel_loss, bins)];
    ++report.hist_diff_rel_dist[histogram_bin(rec.diff_rel_dist, bins)];
  }
  if (completed > 0) {
    const double c = static_cast<double>(completed);
    report.mean_diff_rel_loss = sum_loss / c;
    report.mean_diff_rel_dist = sum_dist / c;
    report.mean_full_weight = sum_wf / c;
    report.mean_sub_weight = sum_ws / c;
  }
}

inline void fill_record(ReplicationRecord& rec, const ProblemSpec& problem,
                        const EstimateResult& full, const EstimateResult& sub) {
  rec.full_eval = evaluate_estimate(problem, full.estimate);
  rec.sub_eval = evaluate_estimate(problem, sub.estimate);
  rec.diff_rel_loss = rec.sub_eval.rel_objective_loss - rec.full_eval.rel_objective_loss;
  rec.diff_rel_dist = rec.sub_eval.rel_distance - rec.full_eval.rel_distance;
  rec.full_mean_weight = mean_of(full.estimate);
  rec.sub_mean_weight = mean_of(sub.estimate);
}

} // namespace detail

inline ExperimentReport run_portfolio_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto started = std::chrono::steady_clock::now();

  PortfolioProblem prob;
  prob.n = cfg.n;
  prob.gamma = cfg.gamma;
  prob.mu.assign(cfg.n, cfg.mu_scalar);
  prob.sigma = Matrix(cfg.n, cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) prob.sigma(i, i) = cfg.sigma_scalar;
  prob.lower.assign(cfg.n, cfg.box_lower);
  prob.upper.assign(cfg.n, cfg.box_upper);
  prob.debias = true;
  const ProblemSpec problem = prob;

  ExperimentReport report;
  report.config = cfg;
  report.records.resize(cfg.replications);
  detail::for_each_replication(cfg.replications, cfg.threads, [&](std::size_t r) {
    ReplicationRecord& rec = report.records[r];
    rec.rep = r;
    const SampleSet samples =
        sample_gaussian(cfg.nu, prob.mu, prob.sigma, RngStream(cfg.root_seed, r));
    try {
      const EstimateResult full = full_sample_estimate(problem, samples);
      const EstimateResult sub = subsample_estimate(problem, samples, cfg.K);
      detail::fill_record(rec, problem, full, sub);
    } catch (const SolverFailure&) {
      rec.aborted = true;
    }
  });
  detail::finalize_summary(report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

// Exceedance predicate for the ball runs: radial projection lands exactly on
// the unit sphere, so a strict margin keeps capped solutions out of the count.
inline constexpr double kBallExceedMargin = 1.0 + 1e-9;

inline ExperimentReport run_ball_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto started = std::chrono::steady_clock::now();

  BallQuadraticProblem prob;
  prob.n = cfg.n;
  prob.gamma = cfg.gamma;
  prob.mean_dispersion = 1.0;
  const ProblemSpec problem = prob;

  // Observation = n return coordinates ~ N(0, I) plus one dispersion
  // observation ~ N(1, 1).
  Vector mean(cfg.n + 1, 0.0);
  mean[cfg.n] = 1.0;
  const Matrix cov = Matrix::identity(cfg.n + 1);

  ExperimentReport report;
  report.config = cfg;
  report.records.resize(cfg.replications);
  detail::for_each_replication(cfg.replications, cfg.threads, [&](std::size_t r) {
    ReplicationRecord& rec = report.records[r];
    rec.rep = r;
    const SampleSet samples =
        sample_gaussian(cfg.nu, mean, cov, RngStream(cfg.root_seed, r));
    try {
      const EstimateResult full = full_sample_estimate(problem, samples);
      const EstimateResult sub = subsample_estimate(problem, samples, cfg.K);
      detail::fill_record(rec, problem, full, sub);

      const MomentEstimate m = sample_moments(samples);
      Vector mean_returns(m.mean.begin(), m.mean.begin() + cfg.n);
      const double s2 = m.mean[cfg.n];
      const double unconstrained_norm =
          s2 != 0.0 ? norm2(mean_returns) / (cfg.gamma * std::abs(s2))
                    : std::numeric_limits<double>::infinity();
      rec.extras[0] = norm2(full.estimate) >= kBallExceedMargin ? 1.0 : 0.0;
      rec.extras[1] = norm2(sub.estimate) >= kBallExceedMargin ? 1.0 : 0.0;
      rec.extras[2] = unconstrained_norm >= kBallExceedMargin ? 1.0 : 0.0;
    } catch (const SolverFailure&) {
      rec.aborted = true;
    }
  });
  detail::finalize_summary(report);

  double ex_full = 0.0, ex_sub = 0.0, ex_unc = 0.0;
  for (const auto& rec : report.records)
    if (!rec.aborted) {
      ex_full += rec.extras[0];
      ex_sub += rec.extras[1];
      ex_unc += rec.extras[2];
    }
  report.details.emplace_back("exceed_count_full_constrained", ex_full);
  report.details.emplace_back("exceed_count_sub_constrained", ex_sub);
  report.details.emplace_back("exceed_count_full_unconstrained", ex_unc);
  report.details.emplace_back("analytic_error_prob",
                              ball_error_prob(cfg.n, static_cast<double>(cfg.nu)));
  // Threshold-1 event for the error ratio maps to the standard noncentral F
  // CDF evaluated at x = n; recorded so downstream readers see the scale.
  report.details.emplace_back("noncentral_f_scale", static_cast<double>(cfg.n));
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

inline ExperimentReport verify_proposition2(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto started = std::chrono::steady_clock::now();

  L1BoxProblem prob{cfg.n, cfg.gamma};
  const ProblemSpec problem = prob;
  const Vector zero_mean(cfg.n, 0.0);
  const Matrix identity = Matrix::identity(cfg.n);

  // Directions are the 2n signed unit vectors; the bound's face dimension is
  // one less than their count.
  const double face_dim = 2.0 * static_cast<double>(cfg.n) - 1.0;
  const std::array<double, 3> deviations{1.0, 2.0, 4.0};

  ExperimentReport report;
  report.config = cfg;
  report.records.resize(cfg.replications);
  detail::for_each_replication(cfg.replications, cfg.threads, [&](std::size_t r) {
    ReplicationRecord& rec = report.records[r];
    rec.rep = r;
    const SampleSet samples =
        sample_gaussian(cfg.nu, zero_mean, identity, RngStream(cfg.root_seed, r));
    try {
      const EstimateResult full = full_sample_estimate(problem, samples);
      const EstimateResult sub = subsample_estimate(problem, samples, cfg.K);
      detail::fill_record(rec, problem, full, sub);
      rec.extras[0] = norm2(sub.estimate);
      double nonzero = 0.0;
      for (const auto& batch : sub.batch_solutions)
        for (double v : batch)
          if (v != 0.0) nonzero += 1.0;
      rec.extras[1] = nonzero;
    } catch (const SolverFailure&) {
      rec.aborted = true;
    }
  });
  detail::finalize_summary(report);

  report.details.emplace_back("face_dimension", face_dim);
  report.details.emplace_back("weight_bound_g", cfg.weight_bound);
  report.details.emplace_back("g_over_n", cfg.weight_bound / face_dim);
  double total_nonzero = 0.0;
  std::size_t completed = 0;
  for (const auto& rec : report.records)
    if (!rec.aborted) {
      total_nonzero += rec.extras[1];
      ++completed;
    }
  const double weight_slots = static_cast<double>(completed) *
                              static_cast<double>(cfg.K) * 2.0 *
                              static_cast<double>(cfg.n);
  report.details.emplace_back(
      "observed_mean_weight", weight_slots > 0.0 ? total_nonzero / weight_slots : 0.0);
  for (double a : deviations) {
    ChebyshevBoundInput in;
    in.bias = 0.0;
    in.direction_norm = 1.0;
    in.face_dimension = face_dim;
    in.weight_bound = cfg.weight_bound;
    in.batches = cfg.K;
    in.deviation = a;
    const ChebyshevBound bound = chebyshev_error_bound(in);
    double exceed = 0.0;
    for (const auto& rec : report.records)
      if (!rec.aborted && rec.extras[0] >= bound.threshold) exceed += 1.0;
    const std::string tag = "a" + std::to_string(static_cast<int>(a));
    report.details.emplace_back("threshold_" + tag, bound.threshold);
    report.details.emplace_back("prob_bound_" + tag, bound.prob_bound);
    report.details.emplace_back("exceed_count_" + tag, exceed);
    report.details.emplace_back(
        "exceed_freq_" + tag,
        completed > 0 ? exceed / static_cast<double>(completed) : 0.0);
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

struct Table1Report {
  Vector support{-3.0, -1.0, 1.0, 3.0};
  // cells[i][j] = (full, sub) estimates for the pair (xi1 = support[j],
  // xi2 = support[i]).
  std::array<std::array<std::pair<double, double>, 4>, 4> cells{};
  double z_star = 0.0;
  double loss_full = 0.0;
  double loss_sub = 0.0;
  double var_full = 0.0;
  double var_sub = 0.0;
};

// Exhaustive enumeration of the two-draw scenario problem: 16 equally likely
// (xi1, xi2) pairs, full-sample solution vs the two-batch mean.
inline Table1Report run_table1() {
  Table1Report t;
  const TrackingProblem prob{t.support};
  const ProblemSpec problem = prob;
  t.z_star = true_solution(problem).in_sample_value;

  double sum_full = 0.0, sum_sub = 0.0;
  double sumsq_full = 0.0, sumsq_sub = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      SampleSet pair;
      pair.rows = 2;
      pair.cols = 1;
      pair.data = {t.support[j], t.support[i]};
      const EstimateResult full = full_sample_estimate(problem, pair);
      const EstimateResult sub = subsample_estimate(problem, pair, 2);
      const double xf = full.estimate[0];
      const double xs = sub.estimate[0];
      t.cells[i][j] = {xf, xs};
      sum_full += xf;
      sum_sub += xs;
      sumsq_full += xf * xf;
      sumsq_sub += xs * xs;
      t.loss_full += evaluate_estimate(problem, full.estimate).abs_loss;
      t.loss_sub += evaluate_estimate(problem, sub.estimate).abs_loss;
    }
  }
  t.loss_full /= 16.0;
  t.loss_sub /= 16.0;
  const double mean_full = sum_full / 16.0;
  const double mean_sub = sum_sub / 16.0;
  t.var_full = sumsq_full / 16.0 - mean_full * mean_full;
  t.var_sub = sumsq_sub / 16.0 - mean_sub * mean_sub;
  return t;
}

enum class FigureId { fig1, fig2, fig3 };

struct CurveData {
  std::string x_name = "nu";
  std::vector<std::string> series_names;
  std::vector<double> x;
  std::vector<std::vector<double>> series; // one inner vector per series
};

inline CurveData run_figure_curve(FigureId which, double gamma = 1.0) {
  if (!(gamma > 0.0))
    throw std::domain_error("run_figure_curve: gamma must be positive");
  CurveData c;
  if (which == FigureId::fig1) {
    const std::array<std::size_t, 3> ns{100, 1000, 10000};
    for (std::size_t n : ns)
      c.series_names.push_back("log10_prob_n" + std::to_string(n));
    c.series.resize(ns.size());
    // Below nu = 10 the larger dimensions saturate at probability 1, which
    // collapses to log 0 in double precision; start where curves resolve.
    for (std::size_t nu = 10; nu <= 40; ++nu) {
      c.x.push_back(static_cast<double>(nu));
      for (std::size_t i = 0; i < ns.size(); ++i)
        c.series[i].push_back(
            std::log10(single_sample_error_prob(ns[i], gamma, static_cast<double>(nu))));
    }
  } else if (which == FigureId::fig2) {
    const std::array<std::size_t, 2> ns{10, 100};
    const std::array<std::size_t, 2> ks{1, 10};
    for (std::size_t n : ns)
      for (std::size_t k : ks)
        c.series_names.push_back("log10_prob_n" + std::to_string(n) + "_k" +
                                 std::to_string(k));
    c.series.resize(c.series_names.size());
    for (std::size_t nu = 10; nu <= 45; ++nu) {
      c.x.push_back(static_cast<double>(nu));
      std::size_t s = 0;
      for (std::size_t n : ns)
        for (std::size_t k : ks)
          c.series[s++].push_back(
              std::log10(batch_error_prob(n, gamma, static_cast<double>(nu), k)));
    }
  } else {
    const std::array<std::size_t, 3> ns{10, 20, 50};
    for (std::size_t n : ns) c.series_names.push_back("gap_n" + std::to_string(n));
    c.series.resize(ns.size());
    std::vector<double> grid;
    for (std::size_t nu = 1; nu <= 200; ++nu) grid.push_back(static_cast<double>(nu));
    c.x = grid;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto pts = asymptotic_gap_curve(ns[i], grid);
      for (const auto& p : pts) c.series[i].push_back(p.gap);
    }
  }
  return c;
}

struct AsymptoticRunReport {
  std::size_t n = 0;
  std::size_t draws = 0;
  std::uint64_t root_seed = 0;
  std::vector<AsymptoticDraw> records;
  double max_kkt_residual = 0.0;
  double max_constraint_violation = 0.0;
  Vector mean_u;
};

// Demonstration run of the limiting-distribution sampler: identity Hessian
// and gradient covariance with the mean gradient pinning the all-ones
// direction, so every draw is the centered projection of the Gaussian onto
// that hyperplane.
inline AsymptoticRunReport run_asymptotic_demo(std::size_t n, std::size_t draws,
                                               std::uint64_t root_seed) {
  if (n < 1 || draws < 1)
    throw std::domain_error("run_asymptotic_demo: need n >= 1 and draws >= 1");
  AsymptoticSpec spec;
  spec.hessian = Matrix::identity(n);
  spec.gradient_cov = Matrix::identity(n);
  spec.active_rows = Matrix(0, n);
  spec.mean_gradient.assign(n, 1.0);

  AsymptoticRunReport report;
  report.n = n;
  report.draws = draws;
  report.root_seed = root_seed;
  report.records.resize(draws);
  report.mean_u.assign(n, 0.0);
  for (std::size_t r = 0; r < draws; ++r) {
    report.records[r] = sample_asymptotic_solution(spec, RngStream(root_seed, r));
    const AsymptoticDraw& d = report.records[r];
    report.max_kkt_residual = std::max(report.max_kkt_residual, d.kkt_residual);
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row_sum += d.u[j];
      report.mean_u[j] += d.u[j];
    }
    report.max_constraint_violation =
        std::max(report.max_constraint_violation, std::abs(row_sum));
  }
  for (double& v : report.mean_u) v /= static_cast<double>(draws);
  return report;
}

} // namespace subsaa
