#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "experiments.hpp"

namespace subsaa {

// Shortest decimal form that round-trips the exact double.
inline std::string format_double(double v) {
  std::array<char, 40> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << body;
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline std::string family_label(const ExperimentConfig& cfg) { return cfg.label; }

inline nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["family"] = cfg.label;
  j["n"] = cfg.n;
  j["nu"] = cfg.nu;
  j["k"] = cfg.K;
  j["gamma"] = cfg.gamma;
  j["reps"] = cfg.replications;
  j["box"] = format_double(cfg.box_lower) + "," + format_double(cfg.box_upper);
  j["mu"] = cfg.mu_scalar;
  j["sigma"] = cfg.sigma_scalar;
  j["g"] = cfg.weight_bound;
  j["bins"] = cfg.histogram_bins;
  j["seed"] = cfg.root_seed;
  return j;
}

// Flat key=value echo of the flags that produced a run; feeding it back via
// --config reproduces the run.
inline void write_resolved_config(
    const std::filesystem::path& dir,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::string body;
  for (const auto& [key, value] : entries) body += key + "=" + value + "\n";
  write_text_file(dir / "resolved_config.txt", body);
}

inline void write_histogram(const std::filesystem::path& path,
                            const std::vector<std::size_t>& counts) {
  const std::size_t bins = counts.size();
  std::string body = "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < bins; ++i) {
    const double left = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(bins);
    const double right =
        -1.0 + 2.0 * static_cast<double>(i + 1) / static_cast<double>(bins);
    body += format_double(left) + "," + format_double(right) + "," +
            std::to_string(counts[i]) + "\n";
  }
  write_text_file(path, body);
}

inline void write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::string csv =
      "rep,full_rel_dist,sub_rel_dist,full_rel_loss,sub_rel_loss,"
      "diff_rel_loss,diff_rel_dist,full_mean_weight,sub_mean_weight\n";
  for (const auto& rec : report.records) {
    if (rec.aborted) continue;
    csv += std::to_string(rec.rep) + "," + format_double(rec.full_eval.rel_distance) +
           "," + format_double(rec.sub_eval.rel_distance) + "," +
           format_double(rec.full_eval.rel_objective_loss) + "," +
           format_double(rec.sub_eval.rel_objective_loss) + "," +
           format_double(rec.diff_rel_loss) + "," + format_double(rec.diff_rel_dist) +
           "," + format_double(rec.full_mean_weight) + "," +
           format_double(rec.sub_mean_weight) + "\n";
  }
  write_text_file(dir / "replications.csv", csv);

  nlohmann::ordered_json summary;
  summary["config"] = config_json(report.config);
  summary["wins"] = report.wins;
  summary["losses"] = report.losses;
  summary["ties"] = report.ties;
  summary["mean_diff_rel_loss"] = report.mean_diff_rel_loss;
  summary["mean_diff_rel_dist"] = report.mean_diff_rel_dist;
  summary["mean_weights"] = {{"full", report.mean_full_weight},
                             {"sub", report.mean_sub_weight}};
  summary["aborted_replications"] = report.aborted;
  summary["seed"] = report.config.root_seed;
  summary["version"] = report.version;
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");

  write_histogram(dir / "hist_diff_rel_loss.csv", report.hist_diff_rel_loss);
  write_histogram(dir / "hist_diff_rel_dist.csv", report.hist_diff_rel_dist);

  if (!report.details.empty()) {
    nlohmann::ordered_json details;
    for (const auto& [key, value] : report.details) details[key] = value;
    write_text_file(dir / "details.json", details.dump(2) + "\n");
  }
}

inline void write_table1(const Table1Report& t, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string csv = "xi2\\xi1";
  for (double s : t.support) csv += "," + format_double(s);
  csv += "\n";
  for (std::size_t i = 0; i < 4; ++i) {
    csv += format_double(t.support[i]);
    for (std::size_t j = 0; j < 4; ++j) {
      csv += ",\"(" + format_double(t.cells[i][j].first) + "," +
             format_double(t.cells[i][j].second) + ")\"";
    }
    csv += "\n";
  }
  write_text_file(dir / "table1.csv", csv);

  nlohmann::ordered_json details;
  details["z_star"] = t.z_star;
  details["loss_full"] = t.loss_full;
  details["loss_sub"] = t.loss_sub;
  details["var_full"] = t.var_full;
  details["var_sub"] = t.var_sub;
  write_text_file(dir / "details.json", details.dump(2) + "\n");
}

inline void write_curve(const CurveData& c, const std::filesystem::path& dir,
                        const std::string& filename) {
  std::filesystem::create_directories(dir);
  std::string csv = c.x_name;
  for (const auto& name : c.series_names) csv += "," + name;
  csv += "\n";
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    csv += format_double(c.x[i]);
    for (const auto& s : c.series) csv += "," + format_double(s[i]);
    csv += "\n";
  }
  write_text_file(dir / filename, csv);
}

inline void write_asymptotic(const AsymptoticRunReport& report,
                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string csv = "rep";
  for (std::size_t j = 0; j < report.n; ++j) csv += ",u" + std::to_string(j);
  csv += ",pi0,kkt_residual\n";
  for (std::size_t r = 0; r < report.records.size(); ++r) {
    const auto& d = report.records[r];
    csv += std::to_string(r);
    for (double v : d.u) csv += "," + format_double(v);
    csv += "," + format_double(d.pi.empty() ? 0.0 : d.pi[0]);
    csv += "," + format_double(d.kkt_residual) + "\n";
  }
  write_text_file(dir / "asymptotic.csv", csv);

  nlohmann::ordered_json details;
  details["n"] = report.n;
  details["draws"] = report.draws;
  details["seed"] = report.root_seed;
  details["max_kkt_residual"] = report.max_kkt_residual;
  details["max_constraint_violation"] = report.max_constraint_violation;
  nlohmann::ordered_json mean = nlohmann::ordered_json::array();
  for (double v : report.mean_u) mean.push_back(v);
  details["mean_u"] = mean;
  write_text_file(dir / "details.json", details.dump(2) + "\n");
}

} // namespace subsaa
