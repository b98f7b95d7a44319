#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "experiments.hpp"
#include "report_io.hpp"
#include "version.hpp"

namespace subsaa {

namespace cli_detail {

struct SubcommandState {
  ExperimentConfig cfg;
  std::vector<double> box{0.0, 1.0};
  std::string out_dir;
  std::string config_path;
  bool paper_scale = false;
  bool with_box = false;
  bool with_moments = false;
  bool with_weight_bound = false;
  CLI::Option* reps_option = nullptr;
};

inline std::string strip_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool flag_present(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

// CLI11 applies a config file only when it is registered on the root app, and
// the file here belongs to a subcommand, so its entries are expanded into
// equivalent --key=value tokens before parsing. Keys already present on the
// command line keep their command-line values.
inline std::vector<std::string> expand_config_args(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    line = strip_ws(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line missing '=': " + line);
    const std::string key = strip_ws(line.substr(0, eq));
    const std::string value = strip_ws(line.substr(eq + 1));
    if (key.empty()) throw std::runtime_error("config line missing key: " + line);
    if (flag_present(args, "--" + key)) continue;
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

inline void add_experiment_flags(CLI::App* sub, SubcommandState& st) {
  sub->add_option("--config", st.config_path,
                  "flat key=value file mirroring these flags; flags win on conflict");
  sub->add_option("--seed", st.cfg.root_seed, "root RNG seed")->capture_default_str();
  st.reps_option =
      sub->add_option("--reps", st.cfg.replications, "replication count")
          ->capture_default_str();
  sub->add_option("--n", st.cfg.n, "problem dimension")->capture_default_str();
  sub->add_option("--nu", st.cfg.nu, "samples per replication")->capture_default_str();
  sub->add_option("--k", st.cfg.K, "number of batches")->capture_default_str();
  sub->add_option("--gamma", st.cfg.gamma, "risk-aversion parameter")
      ->capture_default_str();
  if (st.with_box)
    sub->add_option("--box", st.box, "box bounds as lo,hi")
        ->delimiter(',')
        ->expected(2)
        ->capture_default_str();
  if (st.with_moments) {
    sub->add_option("--mu", st.cfg.mu_scalar, "true mean return per asset")
        ->capture_default_str();
    sub->add_option("--sigma", st.cfg.sigma_scalar, "true return variance per asset")
        ->capture_default_str();
  }
  if (st.with_weight_bound)
    sub->add_option("--g", st.cfg.weight_bound, "expected-weight bound numerator")
        ->capture_default_str();
  sub->add_option("--bins", st.cfg.histogram_bins, "histogram bin count")
      ->capture_default_str();
  sub->add_option("--threads", st.cfg.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  sub->add_option("--out", st.out_dir, "output directory")->capture_default_str();
}

inline std::vector<std::pair<std::string, std::string>> config_entries(
    const SubcommandState& st) {
  std::vector<std::pair<std::string, std::string>> e;
  e.emplace_back("seed", std::to_string(st.cfg.root_seed));
  e.emplace_back("reps", std::to_string(st.cfg.replications));
  e.emplace_back("n", std::to_string(st.cfg.n));
  e.emplace_back("nu", std::to_string(st.cfg.nu));
  e.emplace_back("k", std::to_string(st.cfg.K));
  e.emplace_back("gamma", format_double(st.cfg.gamma));
  if (st.with_box)
    e.emplace_back("box", format_double(st.cfg.box_lower) + "," +
                              format_double(st.cfg.box_upper));
  if (st.with_moments) {
    e.emplace_back("mu", format_double(st.cfg.mu_scalar));
    e.emplace_back("sigma", format_double(st.cfg.sigma_scalar));
  }
  if (st.with_weight_bound)
    e.emplace_back("g", format_double(st.cfg.weight_bound));
  e.emplace_back("bins", std::to_string(st.cfg.histogram_bins));
  return e;
}

} // namespace cli_detail

// Parses argv-style arguments, runs the selected experiment, and writes its
// report files. Returns 0 on success, 2 for bad flags or violated config
// invariants, 1 for runtime failures such as unwritable output.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"Full-sample vs batch-mean estimators for sampled mean-risk programs"};
  app.name("subsaa");
  app.require_subcommand(1);

  cli_detail::SubcommandState table1_state;
  table1_state.out_dir = "out-table1";
  CLI::App* sub_table1 =
      app.add_subcommand("table1", "enumerate the two-draw scenario table");
  sub_table1->add_option("--out", table1_state.out_dir, "output directory")
      ->capture_default_str();

  double fig_gamma[3] = {1.0, 1.0, 1.0};
  std::string fig_out[3] = {"out-fig1", "out-fig2", "out-fig3"};
  CLI::App* fig_subs[3];
  const char* fig_names[3] = {"fig1", "fig2", "fig3"};
  const char* fig_desc[3] = {
      "log10 error probability vs nu for n in {100, 1000, 10000}",
      "log10 error probability vs nu for K in {1, 10}, n in {10, 100}",
      "finite-sample vs limiting error-probability gap for n in {10, 20, 50}"};
  for (int i = 0; i < 3; ++i) {
    fig_subs[i] = app.add_subcommand(fig_names[i], fig_desc[i]);
    fig_subs[i]
        ->add_option("--gamma", fig_gamma[i], "risk-aversion parameter")
        ->capture_default_str();
    fig_subs[i]->add_option("--out", fig_out[i], "output directory")
        ->capture_default_str();
  }

  cli_detail::SubcommandState portfolio_state;
  portfolio_state.cfg.label = "portfolio";
  portfolio_state.cfg.family = Family::portfolio;
  portfolio_state.out_dir = "out-portfolio";
  portfolio_state.with_box = true;
  portfolio_state.with_moments = true;
  CLI::App* sub_portfolio = app.add_subcommand(
      "portfolio", "box-constrained mean-variance estimator comparison");
  cli_detail::add_experiment_flags(sub_portfolio, portfolio_state);
  sub_portfolio->add_flag("--paper-scale", portfolio_state.paper_scale,
                          "use 1000 replications unless --reps is given");

  cli_detail::SubcommandState ball_state;
  ball_state.cfg.label = "ball";
  ball_state.cfg.family = Family::ball;
  ball_state.cfg.nu = 20;
  ball_state.cfg.K = 5;
  ball_state.cfg.replications = 10000;
  ball_state.out_dir = "out-ball";
  CLI::App* sub_ball = app.add_subcommand(
      "ball", "unit-ball quadratic estimator comparison with exceedance counts");
  cli_detail::add_experiment_flags(sub_ball, ball_state);

  cli_detail::SubcommandState prop2_state;
  prop2_state.cfg.label = "prop2";
  prop2_state.cfg.family = Family::l1;
  prop2_state.cfg.nu = 60;
  prop2_state.cfg.K = 10;
  prop2_state.cfg.replications = 2000;
  prop2_state.out_dir = "out-prop2";
  prop2_state.with_weight_bound = true;
  CLI::App* sub_prop2 = app.add_subcommand(
      "prop2", "Chebyshev tail bound check on the separable instance");
  cli_detail::add_experiment_flags(sub_prop2, prop2_state);

  std::size_t asym_n = 10, asym_reps = 1000;
  std::uint64_t asym_seed = 20240817;
  std::string asym_out = "out-asymptotic";
  CLI::App* sub_asym = app.add_subcommand(
      "asymptotic", "draws from the limiting error distribution via its KKT system");
  sub_asym->add_option("--n", asym_n, "dimension")->capture_default_str();
  sub_asym->add_option("--reps", asym_reps, "number of draws")->capture_default_str();
  sub_asym->add_option("--seed", asym_seed, "root RNG seed")->capture_default_str();
  sub_asym->add_option("--out", asym_out, "output directory")->capture_default_str();

  std::vector<std::string> tokens;
  try {
    tokens = cli_detail::expand_config_args(args);
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 2;
  }

  std::vector<const char*> argv;
  argv.reserve(tokens.size() + 1);
  argv.push_back("subsaa");
  for (const auto& a : tokens) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 2;
  }

  const auto run_experiment = [&](cli_detail::SubcommandState& st) {
    if (st.paper_scale && st.reps_option->count() == 0) st.cfg.replications = 1000;
    if (st.with_box) {
      st.cfg.box_lower = st.box[0];
      st.cfg.box_upper = st.box[1];
    }
    validate_config(st.cfg);
    ExperimentReport report;
    if (st.cfg.family == Family::portfolio)
      report = run_portfolio_experiment(st.cfg);
    else if (st.cfg.family == Family::ball)
      report = run_ball_experiment(st.cfg);
    else
      report = verify_proposition2(st.cfg);
    write_report(report, st.out_dir);
    write_resolved_config(st.out_dir, cli_detail::config_entries(st));
    out << st.cfg.label << ": " << report.wins << " wins / " << report.losses
        << " losses / " << report.ties << " ties over "
        << (report.records.size() - report.aborted) << " replications; wrote "
        << st.out_dir << "\n";
  };

  try {
    if (app.got_subcommand(sub_table1)) {
      const Table1Report t = run_table1();
      write_table1(t, table1_state.out_dir);
      write_resolved_config(table1_state.out_dir, {});
      out << "table1: wrote " << table1_state.out_dir << "\n";
    } else if (app.got_subcommand(sub_portfolio)) {
      run_experiment(portfolio_state);
    } else if (app.got_subcommand(sub_ball)) {
      run_experiment(ball_state);
    } else if (app.got_subcommand(sub_prop2)) {
      run_experiment(prop2_state);
    } else if (app.got_subcommand(sub_asym)) {
      const AsymptoticRunReport report = run_asymptotic_demo(asym_n, asym_reps, asym_seed);
      write_asymptotic(report, asym_out);
      write_resolved_config(asym_out, {{"seed", std::to_string(asym_seed)},
                                       {"reps", std::to_string(asym_reps)},
                                       {"n", std::to_string(asym_n)}});
      out << "asymptotic: wrote " << asym_out << "\n";
    } else {
      for (int i = 0; i < 3; ++i) {
        if (!app.got_subcommand(fig_subs[i])) continue;
        const CurveData curve =
            run_figure_curve(static_cast<FigureId>(i), fig_gamma[i]);
        write_curve(curve, fig_out[i], std::string(fig_names[i]) + ".csv");
        write_resolved_config(fig_out[i], {{"gamma", format_double(fig_gamma[i])}});
        out << fig_names[i] << ": wrote " << fig_out[i] << "\n";
      }
    }
  } catch (const std::domain_error& e) {
    err << "invariant: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return 1;
  }
  return 0;
}

} // namespace subsaa
