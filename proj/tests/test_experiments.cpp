#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <subsaa/experiments.hpp>
#include <subsaa/report_io.hpp>

using Catch::Approx;
using subsaa::ExperimentConfig;
using subsaa::ExperimentReport;
using subsaa::Family;

namespace {

std::filesystem::path fresh_dir(const std::string& tag) {
  const auto dir = std::filesystem::temp_directory_path() / ("subsaa_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, double> detail_map(const ExperimentReport& r) {
  std::map<std::string, double> m;
  for (const auto& [k, v] : r.details) m[k] = v;
  return m;
}

ExperimentConfig small_portfolio_config() {
  ExperimentConfig cfg;
  cfg.family = Family::portfolio;
  cfg.label = "portfolio";
  cfg.n = 4;
  cfg.nu = 100;
  cfg.K = 5;
  cfg.replications = 40;
  cfg.root_seed = 4242;
  cfg.threads = 1;
  return cfg;
}

} // namespace

TEST_CASE("config validation catches each invariant") {
  ExperimentConfig cfg = small_portfolio_config();
  REQUIRE_NOTHROW(subsaa::validate_config(cfg));

  ExperimentConfig bad = cfg;
  bad.replications = 0;
  REQUIRE_THROWS_AS(subsaa::validate_config(bad), std::domain_error);
  bad = cfg;
  bad.K = bad.nu + 1;
  REQUIRE_THROWS_AS(subsaa::validate_config(bad), std::domain_error);
  bad = cfg;
  bad.gamma = 0.0;
  REQUIRE_THROWS_AS(subsaa::validate_config(bad), std::domain_error);
  bad = cfg;
  bad.histogram_bins = 1;
  REQUIRE_THROWS_AS(subsaa::validate_config(bad), std::domain_error);
  bad = cfg;
  bad.box_lower = 2.0;
  bad.box_upper = 1.0;
  REQUIRE_THROWS_AS(subsaa::validate_config(bad), std::domain_error);

  // Batches too small for the bias adjustment: nu/k must exceed n + 2.
  bad = cfg;
  bad.n = 10;
  bad.nu = 100;
  bad.K = 10;
  try {
    subsaa::validate_config(bad);
    FAIL("expected a config invariant error");
  } catch (const std::domain_error& e) {
    REQUIRE(std::string(e.what()).find("must exceed n + 2") != std::string::npos);
  }
}

TEST_CASE("scenario table enumeration reproduces the known cells") {
  const auto t = subsaa::run_table1();
  REQUIRE(t.z_star == 5.0);

  using P = std::pair<double, double>;
  const std::array<std::array<P, 4>, 4> expected{{
      {{{-1, -1}, {-1, -1}, {-1, 0}, {0, 0}}},
      {{{-1, -1}, {-1, -1}, {0, 0}, {1, 0}}},
      {{{-1, 0}, {0, 0}, {1, 1}, {1, 1}}},
      {{{0, 0}, {1, 0}, {1, 1}, {1, 1}}},
  }};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      REQUIRE(t.cells[i][j].first == expected[i][j].first);
      REQUIRE(t.cells[i][j].second == expected[i][j].second);
    }

  REQUIRE(t.loss_full == 0.75);
  REQUIRE(t.loss_sub == 0.5);
  REQUIRE(t.var_full == 0.75);
  REQUIRE(t.var_sub == 0.5);
}

TEST_CASE("portfolio experiment summary is consistent") {
  const ExperimentConfig cfg = small_portfolio_config();
  const auto report = subsaa::run_portfolio_experiment(cfg);
  REQUIRE(report.records.size() == cfg.replications);
  REQUIRE(report.aborted == 0);
  REQUIRE(report.wins + report.losses + report.ties == cfg.replications);

  std::size_t hist_mass = 0;
  for (std::size_t c : report.hist_diff_rel_loss) hist_mass += c;
  REQUIRE(hist_mass == cfg.replications);
  hist_mass = 0;
  for (std::size_t c : report.hist_diff_rel_dist) hist_mass += c;
  REQUIRE(hist_mass == cfg.replications);

  for (std::size_t r = 0; r < report.records.size(); ++r) {
    const auto& rec = report.records[r];
    REQUIRE(rec.rep == r);
    REQUIRE(std::isfinite(rec.full_eval.rel_distance));
    REQUIRE(std::isfinite(rec.sub_eval.rel_distance));
    REQUIRE(rec.diff_rel_dist ==
            rec.sub_eval.rel_distance - rec.full_eval.rel_distance);
  }
  REQUIRE(report.version == subsaa::kVersion);
  REQUIRE(report.wall_seconds >= 0.0);
}

TEST_CASE("thread count never changes experiment records") {
  ExperimentConfig cfg = small_portfolio_config();
  cfg.threads = 1;
  const auto serial = subsaa::run_portfolio_experiment(cfg);
  cfg.threads = 4;
  const auto parallel = subsaa::run_portfolio_experiment(cfg);

  REQUIRE(serial.records.size() == parallel.records.size());
  for (std::size_t r = 0; r < serial.records.size(); ++r) {
    const auto& a = serial.records[r];
    const auto& b = parallel.records[r];
    REQUIRE(a.full_eval.rel_distance == b.full_eval.rel_distance);
    REQUIRE(a.sub_eval.rel_distance == b.sub_eval.rel_distance);
    REQUIRE(a.full_eval.rel_objective_loss == b.full_eval.rel_objective_loss);
    REQUIRE(a.sub_eval.rel_objective_loss == b.sub_eval.rel_objective_loss);
    REQUIRE(a.diff_rel_loss == b.diff_rel_loss);
    REQUIRE(a.diff_rel_dist == b.diff_rel_dist);
    REQUIRE(a.full_mean_weight == b.full_mean_weight);
    REQUIRE(a.sub_mean_weight == b.sub_mean_weight);
  }
  REQUIRE(serial.wins == parallel.wins);
  REQUIRE(serial.hist_diff_rel_loss == parallel.hist_diff_rel_loss);
}

TEST_CASE("shrinking the replication count leaves a shared prefix") {
  ExperimentConfig cfg = small_portfolio_config();
  cfg.replications = 25;
  const auto longer = subsaa::run_portfolio_experiment(cfg);
  cfg.replications = 10;
  const auto shorter = subsaa::run_portfolio_experiment(cfg);
  for (std::size_t r = 0; r < 10; ++r) {
    REQUIRE(shorter.records[r].full_eval.rel_distance ==
            longer.records[r].full_eval.rel_distance);
    REQUIRE(shorter.records[r].sub_eval.rel_distance ==
            longer.records[r].sub_eval.rel_distance);
  }
}

TEST_CASE("ball experiment respects the norm cap and tracks the analytic rate") {
  ExperimentConfig cfg;
  cfg.family = Family::ball;
  cfg.label = "ball";
  cfg.n = 10;
  cfg.nu = 20;
  cfg.K = 5;
  cfg.replications = 300;
  cfg.root_seed = 515;
  cfg.threads = 1;
  const auto report = subsaa::run_ball_experiment(cfg);
  REQUIRE(report.aborted == 0);

  const auto d = detail_map(report);
  REQUIRE(d.at("exceed_count_full_constrained") == 0.0);
  REQUIRE(d.at("exceed_count_sub_constrained") == 0.0);
  REQUIRE(d.at("noncentral_f_scale") == 10.0);
  REQUIRE(d.at("analytic_error_prob") ==
          Approx(subsaa::ball_error_prob(10, 20.0)).margin(1e-15));

  const double p = d.at("analytic_error_prob");
  const double freq = d.at("exceed_count_full_unconstrained") /
                      static_cast<double>(cfg.replications);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.replications));
  REQUIRE(std::abs(freq - p) <= 3.0 * se);
}

TEST_CASE("proposition-style bound run stays under its tail budget") {
  ExperimentConfig cfg;
  cfg.family = Family::l1;
  cfg.label = "prop2";
  cfg.n = 10;
  cfg.nu = 60;
  cfg.K = 10;
  cfg.replications = 300;
  cfg.root_seed = 616;
  cfg.threads = 1;
  const auto report = subsaa::verify_proposition2(cfg);
  REQUIRE(report.aborted == 0);

  const auto d = detail_map(report);
  REQUIRE(d.at("face_dimension") == 19.0);
  REQUIRE(d.at("weight_bound_g") == 0.3);
  // The configured expected-weight cap has to dominate what the runs show.
  REQUIRE(d.at("g_over_n") >= d.at("observed_mean_weight"));

  for (const std::string tag : {"a1", "a2", "a4"}) {
    const double bound = d.at("prob_bound_" + tag);
    const double freq = d.at("exceed_freq_" + tag);
    const double se =
        std::sqrt(bound * (1.0 - bound) / static_cast<double>(cfg.replications));
    REQUIRE(freq <= bound + 3.0 * se);
    REQUIRE(d.at("threshold_" + tag) > 0.0);
  }
}

TEST_CASE("figure one series are decreasing and ordered by dimension") {
  const auto c = subsaa::run_figure_curve(subsaa::FigureId::fig1);
  REQUIRE(c.series_names ==
          std::vector<std::string>{"log10_prob_n100", "log10_prob_n1000",
                                   "log10_prob_n10000"});
  REQUIRE(c.x.front() == 10.0);
  REQUIRE(c.x.back() == 40.0);
  for (const auto& s : c.series)
    for (std::size_t i = 1; i < s.size(); ++i) REQUIRE(s[i] < s[i - 1]);
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    REQUIRE(c.series[0][i] < c.series[1][i]);
    REQUIRE(c.series[1][i] < c.series[2][i]);
  }
}

TEST_CASE("figure two separates batched and unbatched curves") {
  const auto c = subsaa::run_figure_curve(subsaa::FigureId::fig2);
  REQUIRE(c.series_names ==
          std::vector<std::string>{"log10_prob_n10_k1", "log10_prob_n10_k10",
                                   "log10_prob_n100_k1", "log10_prob_n100_k10"});
  REQUIRE(c.x.front() == 10.0);
  // Vertical gap at the left edge, measured in natural-log units to match
  // the "orders of magnitude" bookkeeping of the source curves.
  const double ln10 = std::log(10.0);
  REQUIRE((c.series[0][0] - c.series[1][0]) * ln10 >= 4.0);
  REQUIRE((c.series[2][0] - c.series[3][0]) * ln10 >= 4.0);
  // Batched series sit below their unbatched partners everywhere.
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    REQUIRE(c.series[1][i] < c.series[0][i]);
    REQUIRE(c.series[3][i] < c.series[2][i]);
  }
}

TEST_CASE("figure three gaps shrink and settle later for larger dimension") {
  const auto c = subsaa::run_figure_curve(subsaa::FigureId::fig3);
  REQUIRE(c.series_names ==
          std::vector<std::string>{"gap_n10", "gap_n20", "gap_n50"});
  std::vector<std::size_t> settle;
  for (const auto& s : c.series) {
    bool below = false;
    std::size_t first_below = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double mag = std::abs(s[i]);
      if (!below && mag < 1e-3) {
        below = true;
        first_below = i;
      }
      if (below)
        REQUIRE(mag < 1e-3);
      else if (i > 0)
        REQUIRE(mag <= std::abs(s[i - 1]) + 1e-15);
    }
    REQUIRE(below);
    settle.push_back(first_below);
  }
  REQUIRE(settle[0] < settle[1]);
  REQUIRE(settle[1] < settle[2]);
}

TEST_CASE("figure curves reject nonpositive gamma") {
  REQUIRE_THROWS_AS(subsaa::run_figure_curve(subsaa::FigureId::fig1, 0.0),
                    std::domain_error);
}

TEST_CASE("limit sampler demo keeps draws on the constraint plane") {
  const auto report = subsaa::run_asymptotic_demo(5, 200, 99);
  REQUIRE(report.records.size() == 200);
  REQUIRE(report.max_kkt_residual <= 1e-9);
  REQUIRE(report.max_constraint_violation <= 1e-9);
  for (double v : report.mean_u) REQUIRE(std::abs(v) < 0.2);
  for (const auto& d : report.records) REQUIRE(d.pi.size() == 1);
}

TEST_CASE("report files land on disk with the documented schemas") {
  const ExperimentConfig cfg = small_portfolio_config();
  const auto report = subsaa::run_portfolio_experiment(cfg);
  const auto dir = fresh_dir("report_schema");
  subsaa::write_report(report, dir);

  const std::string csv = slurp(dir / "replications.csv");
  REQUIRE(csv.rfind("rep,full_rel_dist,sub_rel_dist,full_rel_loss,sub_rel_loss,"
                    "diff_rel_loss,diff_rel_dist,full_mean_weight,sub_mean_weight\n",
                    0) == 0);
  std::size_t rows = 0;
  for (char ch : csv)
    if (ch == '\n') ++rows;
  REQUIRE(rows == cfg.replications + 1);

  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  REQUIRE(summary.at("wins").get<std::size_t>() == report.wins);
  REQUIRE(summary.at("aborted_replications").get<std::size_t>() == 0);
  REQUIRE(summary.at("seed").get<std::uint64_t>() == cfg.root_seed);
  REQUIRE(summary.at("config").at("nu").get<std::size_t>() == cfg.nu);
  REQUIRE(summary.at("mean_weights").at("full").get<double>() ==
          report.mean_full_weight);
  REQUIRE(summary.at("version").get<std::string>() == subsaa::kVersion);

  const std::string hist = slurp(dir / "hist_diff_rel_dist.csv");
  REQUIRE(hist.rfind("bin_left,bin_right,count\n", 0) == 0);
  rows = 0;
  for (char ch : hist)
    if (ch == '\n') ++rows;
  REQUIRE(rows == cfg.histogram_bins + 1);
}

TEST_CASE("empty record lists still serialize cleanly") {
  ExperimentReport report;
  report.config = small_portfolio_config();
  subsaa::detail::finalize_summary(report);
  const auto dir = fresh_dir("report_empty");
  subsaa::write_report(report, dir);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  REQUIRE(summary.at("wins").get<int>() == 0);
  REQUIRE(summary.at("losses").get<int>() == 0);
  REQUIRE(summary.at("aborted_replications").get<int>() == 0);
  const std::string csv = slurp(dir / "replications.csv");
  REQUIRE(csv ==
          "rep,full_rel_dist,sub_rel_dist,full_rel_loss,sub_rel_loss,"
          "diff_rel_loss,diff_rel_dist,full_mean_weight,sub_mean_weight\n");
}

TEST_CASE("scenario table file matches the cells") {
  const auto t = subsaa::run_table1();
  const auto dir = fresh_dir("table1_io");
  subsaa::write_table1(t, dir);
  const std::string csv = slurp(dir / "table1.csv");
  REQUIRE(csv.rfind("xi2\\xi1,-3,-1,1,3\n", 0) == 0);
  REQUIRE(csv.find("\"(-1,0)\"") != std::string::npos);
  const auto details = nlohmann::json::parse(slurp(dir / "details.json"));
  REQUIRE(details.at("z_star").get<double>() == 5.0);
  REQUIRE(details.at("loss_full").get<double>() == 0.75);
  REQUIRE(details.at("var_sub").get<double>() == 0.5);
}

TEST_CASE("double formatting round-trips exactly") {
  for (double v : {0.1, -1.0 / 3.0, 1e-17, 123456.789, 0.0, -0.0, 1e-300}) {
    const std::string s = subsaa::format_double(v);
    REQUIRE(std::stod(s) == v);
  }
}
