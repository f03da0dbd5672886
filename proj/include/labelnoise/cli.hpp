#pragma once

// Command-line front end: verify | sweep | consistency | plot | ingest.
// Exit status: 0 success, 1 verification or cell failure, 2 usage/config error.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "labelnoise/config.hpp"
#include "labelnoise/distributions.hpp"
#include "labelnoise/errors.hpp"
#include "labelnoise/evaluation.hpp"
#include "labelnoise/ingest.hpp"
#include "labelnoise/plot.hpp"
#include "labelnoise/sweep.hpp"

namespace labelnoise {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// JSON document produced by `verify`.
inline nlohmann::json verification_report(std::size_t k, std::size_t trials, std::uint64_t seed,
                                          std::size_t support, std::size_t bound_trials) {
  const auto agreement = verify_symmetric_agreement(k, sub_threshold_grid(k), trials, seed, support);
  const auto bound = verify_binary_bound(bound_trials, seed, support);
  nlohmann::json j;
  j["symmetric_agreement"] = to_json(agreement);
  j["binary_bound"] = to_json(bound);
  j["passed"] = agreement.passed() && bound.passed();
  return j;
}

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ValidationError("write to '" + path + "' failed");
  }
  std::filesystem::rename(tmp, target);
}

inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

struct ExperimentFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> jobs;
  std::string mitigation;
};

inline void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--config", f.config, "experiment config file")->required();
  cmd->add_option("--seed", f.seed, "override the master seed");
  cmd->add_option("--out", f.out, "CSV output path (default: config output, else stdout)");
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--mitigation", f.mitigation, "none | known-symmetric | backward")
      ->check(CLI::IsMember({"none", "known-symmetric", "backward"}));
}

inline ExperimentConfig load_with_overrides(const ExperimentFlags& f) {
  ExperimentConfig cfg = load_config(f.config);
  if (f.seed) cfg.spec.master_seed = *f.seed;
  if (f.jobs) cfg.spec.jobs = *f.jobs;
  if (!f.mitigation.empty()) cfg.spec.mitigation = parse_mitigation(f.mitigation);
  if (!f.out.empty()) cfg.output = f.out;
  return cfg;
}

inline int report_failures(const std::vector<RiskReport>& reports, std::ostream& err) {
  int status = kExitOk;
  for (const auto& r : reports) {
    if (!r.ok()) {
      err << "cell failed (alpha=" << format_number(r.alpha) << ", n_train=" << r.n_train
          << ", seed=" << (r.seed ? std::to_string(*r.seed) : "mean") << "): " << *r.failure << '\n';
      status = kExitFailure;
    }
  }
  return status;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Label-noise robustness experiments for plug-in classifiers", "labelnoise"};
  app.require_subcommand(1);

  std::size_t k = 10, trials = 200, support = 50, bound_trials = 1000;
  std::uint64_t verify_seed = 0;
  std::string verify_out;
  auto* verify = app.add_subcommand("verify", "exact decision-agreement and bound checks");
  verify->add_option("--k", k, "class count")->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  verify->add_option("--trials", trials, "random distributions for the symmetric check")
      ->check(CLI::PositiveNumber);
  verify->add_option("--bound-trials", bound_trials, "random binary distributions")
      ->check(CLI::PositiveNumber);
  verify->add_option("--support", support, "support points per distribution")
      ->check(CLI::PositiveNumber);
  verify->add_option("--seed", verify_seed, "master seed");
  verify->add_option("--out", verify_out, "JSON output path (default stdout)");

  detail::ExperimentFlags sweep_flags, consistency_flags;
  auto* sweep = app.add_subcommand("sweep", "risk across a noise grid");
  detail::add_experiment_flags(sweep, sweep_flags);
  auto* consistency = app.add_subcommand("consistency", "posterior error across training sizes");
  detail::add_experiment_flags(consistency, consistency_flags);

  std::string plot_csv_path, plot_out;
  auto* plot = app.add_subcommand("plot", "SVG chart of accuracy versus noise");
  plot->add_option("csv", plot_csv_path, "sweep CSV")->required();
  plot->add_option("--out", plot_out, "SVG output path")->required();

  std::string ingest_path, label_column = "label", ingest_out;
  auto* ingest = app.add_subcommand("ingest", "convert a labeled CSV into a dataset file");
  ingest->add_option("csv", ingest_path, "input CSV")->required();
  ingest->add_option("--label-column", label_column, "name of the label column");
  ingest->add_option("--out", ingest_out, "dataset output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*verify) {
      const auto report = verification_report(k, trials, verify_seed, support, bound_trials);
      detail::emit(verify_out, report.dump(2) + "\n", out);
      return report["passed"].get<bool>() ? kExitOk : kExitFailure;
    }
    if (*sweep || *consistency) {
      const bool is_sweep = sweep->parsed();
      const auto cfg = detail::load_with_overrides(is_sweep ? sweep_flags : consistency_flags);
      std::vector<RiskReport> rows;
      int status = kExitOk;
      if (is_sweep) {
        rows = sweep_noise(cfg.spec);
        status = detail::report_failures(rows, err);
      } else {
        if (cfg.spec.n_grid.empty()) {
          throw ParseError(0, "consistency.n_grid: required field missing");
        }
        const auto cells = consistency_trend(cfg.spec);
        status = detail::report_failures(cells, err);
        const auto means = average_over_seeds(cells, cfg.spec.seeds);
        for (std::size_t g = 0; g < means.size(); ++g) {
          rows.insert(rows.end(), cells.begin() + static_cast<std::ptrdiff_t>(g * cfg.spec.seeds),
                      cells.begin() + static_cast<std::ptrdiff_t>((g + 1) * cfg.spec.seeds));
          rows.push_back(means[g]);
        }
      }
      std::ostringstream csv;
      write_reports_csv(csv, rows);
      detail::emit(cfg.output, csv.str(), out);
      return status;
    }
    if (*plot) {
      std::ifstream in(plot_csv_path, std::ios::binary);
      if (!in) throw ValidationError("cannot open '" + plot_csv_path + "'");
      std::ostringstream text;
      text << in.rdbuf();
      detail::write_text_file(plot_out, plot_csv(text.str()));
      return kExitOk;
    }
    if (*ingest) {
      std::ifstream in(ingest_path);
      if (!in) throw ValidationError("cannot open '" + ingest_path + "'");
      const Dataset data = ingest_csv(in, label_column);
      std::ostringstream text;
      text << "# ingested from " << std::filesystem::path(ingest_path).filename().string()
           << "; empirical labels only, no posteriors\n";
      write_dataset(text, data);
      detail::write_text_file(ingest_out, text.str());
      err << "ingested n=" << data.size() << ", d=" << data.dim() << ", K=" << data.classes() << '\n';
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace labelnoise
