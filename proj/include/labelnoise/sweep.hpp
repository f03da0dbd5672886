#pragma once

// Noise sweeps and consistency trends: the cell-by-cell experiment driver
// behind the CLI, and the CSV schema its results are written in.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "labelnoise/csv.hpp"
#include "labelnoise/distributions.hpp"
#include "labelnoise/errors.hpp"
#include "labelnoise/estimators.hpp"
#include "labelnoise/evaluation.hpp"
#include "labelnoise/format.hpp"
#include "labelnoise/mitigation.hpp"
#include "labelnoise/noise_channel.hpp"
#include "labelnoise/rng.hpp"

namespace labelnoise {

enum class EstimatorFamily { Knn, Histogram, Mlp, Oracle };

inline const char* to_string(EstimatorFamily f) {
  switch (f) {
    case EstimatorFamily::Knn: return "knn";
    case EstimatorFamily::Histogram: return "histogram";
    case EstimatorFamily::Mlp: return "mlp";
    case EstimatorFamily::Oracle: return "oracle";
  }
  return "unknown";
}

struct EstimatorSpec {
  EstimatorFamily family = EstimatorFamily::Knn;
  std::optional<std::size_t> k_neighbors;  // unset: ceil(sqrt(n))
  std::optional<double> bin_width;         // unset: n^(-1/(d+2))
  EmptyCellFallback empty_cell = EmptyCellFallback::Uniform;
  MlpConfig mlp;

  /// Label for the CSV estimator column; constant across cells.
  std::string describe() const {
    switch (family) {
      case EstimatorFamily::Knn:
        return "knn(k=" + (k_neighbors ? std::to_string(*k_neighbors) : std::string("sqrt-n")) + ")";
      case EstimatorFamily::Histogram: {
        std::string s = "histogram(h=" + (bin_width ? format_number(*bin_width) : std::string("auto"));
        if (empty_cell == EmptyCellFallback::GlobalFrequency) s += ";empty=global";
        return s + ")";
      }
      case EstimatorFamily::Mlp: {
        std::string s = "mlp(";
        for (std::size_t i = 0; i < mlp.hidden.size(); ++i) {
          s += (i ? "x" : "") + std::to_string(mlp.hidden[i]);
        }
        return s + ";epochs=" + std::to_string(mlp.epochs) + ")";
      }
      case EstimatorFamily::Oracle: return "oracle";
    }
    return "unknown";
  }
};

struct ChannelSpec {
  ChannelKind kind = ChannelKind::Symmetric;
  std::vector<double> alphas;
  double beta = std::nan("");  // asymmetric (binary) only
};

inline TransitionMatrix make_channel(const ChannelSpec& spec, std::size_t k, double alpha) {
  switch (spec.kind) {
    case ChannelKind::Symmetric: return build_symmetric(k, alpha);
    case ChannelKind::Shift: return build_shift(k, alpha);
    case ChannelKind::Asymmetric:
      if (k != 2) throw ValidationError("asymmetric channel is binary only (K=2)");
      return build_binary(alpha, spec.beta);
    case ChannelKind::General: break;
  }
  throw ValidationError("sweeps support symmetric, shift and asymmetric channels");
}

/// Ground truth with exact posteriors, or an ingested dataset without them.
using DataSource = std::variant<GaussianMixtureDistribution, DiscreteJointDistribution, Dataset>;

inline std::size_t source_classes(const DataSource& s) {
  return std::visit([](const auto& v) { return v.classes(); }, s);
}
inline std::size_t source_dim(const DataSource& s) {
  return std::visit([](const auto& v) { return v.dim(); }, s);
}

struct ExperimentSpec {
  std::string experiment_id = "experiment";
  DataSource source = circle_mixture();
  EstimatorSpec estimator;
  ChannelSpec channel;
  Mitigation mitigation = Mitigation::None;
  std::size_t n_train = 1000;
  std::size_t n_test = 10000;
  std::size_t seeds = 5;
  std::uint64_t master_seed = 0;
  std::size_t jobs = 1;
  std::vector<std::size_t> n_grid;  // consistency trends only
};

/// One experiment cell. Optional fields are NA when no oracle exists.
struct RiskReport {
  std::string experiment_id;
  std::optional<std::uint64_t> seed;  // unset on seed-averaged rows
  std::size_t k = 0;
  std::size_t d = 0;
  std::string noise_kind;
  double alpha = 0.0;
  double beta = std::nan("");
  std::size_t n_train = 0;
  std::string estimator;
  std::string mitigation;
  double risk = std::nan("");
  double risk_se = 0.0;
  std::optional<double> bayes_risk;
  std::optional<double> excess_risk;
  std::optional<double> l1_posterior_error;
  std::optional<double> l2_posterior_error;
  std::optional<std::string> failure;

  bool ok() const { return !failure.has_value(); }
};

namespace detail {

inline PosteriorEstimate fit_estimator(const EstimatorSpec& spec, const Dataset& train, Rng& rng) {
  switch (spec.family) {
    case EstimatorFamily::Knn:
      return fit_knn(train, spec.k_neighbors.value_or(default_k_neighbors(train.size())));
    case EstimatorFamily::Histogram:
      return fit_histogram(train, spec.bin_width.value_or(default_bin_width(train.size(), train.dim())),
                           spec.empty_cell);
    case EstimatorFamily::Mlp: return fit_mlp(train, spec.mlp, rng);
    case EstimatorFamily::Oracle: break;
  }
  throw ValidationError("oracle estimator needs a distribution with known posteriors");
}

// Stream ordinals within a cell.
enum Stream : std::uint64_t { kTrainStream = 0, kNoiseStream = 1, kFitStream = 2, kTestStream = 3 };

template <JointDistribution D>
void run_oracle_cell(const ExperimentSpec& spec, const D& dist, const TransitionMatrix& channel,
                     std::size_t n_train, std::uint64_t cell_seed, RiskReport& r) {
  std::optional<PosteriorEstimate> est;
  if (spec.estimator.family == EstimatorFamily::Oracle) {
    est = oracle_noisy_posterior(dist, channel);
  } else {
    Rng train_rng(derive_seed(cell_seed, kTrainStream));
    Rng noise_rng(derive_seed(cell_seed, kNoiseStream));
    Rng fit_rng(derive_seed(cell_seed, kFitStream));
    const Dataset clean = dist.sample(n_train, train_rng);
    const Dataset noisy = clean.relabeled(corrupt_labels(clean.labels(), channel, noise_rng),
                                          {true, channel.describe(), cell_seed});
    est = fit_estimator(spec.estimator, noisy, fit_rng);
  }
  const PosteriorEstimate plug = apply_mitigation(*est, spec.mitigation, channel);
  const PosteriorEstimate target = spec.mitigation == Mitigation::None
                                       ? oracle_noisy_posterior(dist, channel)
                                       : true_posterior(dist);
  if constexpr (std::is_same_v<D, DiscreteJointDistribution>) {
    r.risk = conditional_risk_exact(plug_in(plug), dist);
    r.risk_se = 0.0;
    r.bayes_risk = bayes_risk_exact(dist);
    const auto err = posterior_l1_error(plug, dist, target);
    r.l1_posterior_error = err.l1;
    r.l2_posterior_error = err.l2;
  } else {
    Rng test_rng(derive_seed(cell_seed, kTestStream));
    const Dataset test = dist.sample(spec.n_test, test_rng);
    std::size_t errors = 0;
    double bayes = 0.0;
    PosteriorError err{0.0, 0.0};
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto x = test.row(i);
      const ProbVec q = plug(x);
      if (argmax(q) != test.labels()[i]) ++errors;
      const ProbVec p = dist.posterior(x);
      bayes += 1.0 - p[argmax(p)];
      accumulate_error(q, target(x), 1.0, err);
    }
    const double m = static_cast<double>(test.size());
    r.risk = static_cast<double>(errors) / m;
    r.risk_se = std::sqrt(r.risk * (1.0 - r.risk) / m);
    r.bayes_risk = bayes / m;
    r.l1_posterior_error = err.l1 / m;
    r.l2_posterior_error = err.l2 / m;
  }
  r.excess_risk = r.risk - *r.bayes_risk;
}

inline void run_dataset_cell(const ExperimentSpec& spec, const Dataset& data,
                             const TransitionMatrix& channel, std::size_t n_train,
                             std::uint64_t cell_seed, RiskReport& r) {
  if (spec.estimator.family == EstimatorFamily::Oracle) {
    throw ValidationError("oracle estimator needs a distribution with known posteriors");
  }
  if (n_train >= data.size()) {
    throw ValidationError("n_train (" + std::to_string(n_train) +
                          ") must be smaller than the dataset (" + std::to_string(data.size()) + ")");
  }
  Rng split_rng(derive_seed(cell_seed, kTrainStream));
  Rng noise_rng(derive_seed(cell_seed, kNoiseStream));
  Rng fit_rng(derive_seed(cell_seed, kFitStream));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[split_rng.index(i)]);
  const std::size_t n_test = std::min(spec.n_test, data.size() - n_train);
  const Dataset train = data.subset(std::span(order).first(n_train));
  const Dataset test = data.subset(std::span(order).subspan(n_train, n_test));
  const Dataset noisy = train.relabeled(corrupt_labels(train.labels(), channel, noise_rng),
                                        {true, channel.describe(), cell_seed});
  const auto plug = apply_mitigation(fit_estimator(spec.estimator, noisy, fit_rng), spec.mitigation,
                                     channel);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (classify_argmax(plug, test.row(i)) != test.labels()[i]) ++errors;
  }
  const double m = static_cast<double>(test.size());
  r.risk = static_cast<double>(errors) / m;
  r.risk_se = std::sqrt(r.risk * (1.0 - r.risk) / m);
}

inline RiskReport run_cell(const ExperimentSpec& spec, double alpha, std::size_t n_train,
                           std::uint64_t cell_seed) {
  RiskReport r;
  r.experiment_id = spec.experiment_id;
  r.seed = cell_seed;
  r.k = source_classes(spec.source);
  r.d = source_dim(spec.source);
  r.noise_kind = to_string(spec.channel.kind);
  r.alpha = alpha;
  r.beta = spec.channel.kind == ChannelKind::Asymmetric ? spec.channel.beta : std::nan("");
  r.n_train = n_train;
  r.estimator = spec.estimator.describe();
  r.mitigation = to_string(spec.mitigation);
  try {
    const TransitionMatrix channel = make_channel(spec.channel, r.k, alpha);
    std::visit(
        [&](const auto& src) {
          using S = std::decay_t<decltype(src)>;
          if constexpr (std::is_same_v<S, Dataset>) {
            run_dataset_cell(spec, src, channel, n_train, cell_seed, r);
          } else {
            run_oracle_cell(spec, src, channel, n_train, cell_seed, r);
          }
        },
        spec.source);
  } catch (const Error& e) {
    RiskReport failed;
    failed.experiment_id = r.experiment_id;
    failed.seed = r.seed;
    failed.k = r.k;
    failed.d = r.d;
    failed.noise_kind = r.noise_kind;
    failed.alpha = r.alpha;
    failed.beta = r.beta;
    failed.n_train = r.n_train;
    failed.estimator = r.estimator;
    failed.mitigation = r.mitigation;
    failed.failure = e.what();
    return failed;
  }
  return r;
}

}  // namespace detail

/// One report per (alpha, seed) cell, in grid order then seed order. Cell
/// (i, s) uses seed derive_seed(master_seed, i * seeds + s), so results do
/// not depend on `jobs`. Failed cells yield reports with `failure` set.
inline std::vector<RiskReport> sweep_noise(const ExperimentSpec& spec) {
  if (spec.channel.alphas.empty()) throw ValidationError("alpha grid is empty");
  if (spec.seeds == 0) throw ValidationError("seeds per cell must be positive");
  if (spec.n_train == 0) throw ValidationError("n_train must be positive");
  const std::size_t cells = spec.channel.alphas.size() * spec.seeds;
  std::vector<RiskReport> reports(cells);
  parallel_for(cells, spec.jobs, [&](std::size_t c) {
    const double alpha = spec.channel.alphas[c / spec.seeds];
    reports[c] = detail::run_cell(spec, alpha, spec.n_train, derive_seed(spec.master_seed, c));
  });
  return reports;
}

/// One report per (n, seed) cell at the single alpha of the channel grid;
/// l1/l2 columns measure the fitted estimate against the exact noisy
/// posterior (or the clean one when a mitigation is applied).
inline std::vector<RiskReport> consistency_trend(const ExperimentSpec& spec) {
  if (spec.n_grid.empty()) throw ValidationError("n grid is empty");
  for (std::size_t i = 0; i < spec.n_grid.size(); ++i) {
    if (spec.n_grid[i] == 0) throw ValidationError("n grid entries must be positive");
    if (i && spec.n_grid[i] <= spec.n_grid[i - 1]) {
      throw ValidationError("n grid must be strictly increasing");
    }
  }
  if (spec.channel.alphas.size() != 1) {
    throw ValidationError("consistency trends take exactly one alpha");
  }
  if (spec.seeds == 0) throw ValidationError("seeds per cell must be positive");
  const std::size_t cells = spec.n_grid.size() * spec.seeds;
  std::vector<RiskReport> reports(cells);
  parallel_for(cells, spec.jobs, [&](std::size_t c) {
    reports[c] = detail::run_cell(spec, spec.channel.alphas.front(), spec.n_grid[c / spec.seeds],
                                  derive_seed(spec.master_seed, c));
  });
  return reports;
}

/// Seed-averaged row for each consecutive group of `seeds` reports. Groups
/// containing a failed cell produce a failed row.
inline std::vector<RiskReport> average_over_seeds(const std::vector<RiskReport>& reports,
                                                  std::size_t seeds) {
  std::vector<RiskReport> out;
  auto mean_opt = [](std::optional<double>& acc, const std::optional<double>& v, bool& missing) {
    if (!v) {
      missing = true;
      return;
    }
    acc = acc.value_or(0.0) + *v;
  };
  for (std::size_t start = 0; start + seeds <= reports.size(); start += seeds) {
    RiskReport avg = reports[start];
    avg.seed.reset();
    avg.risk = 0.0;
    avg.risk_se = 0.0;
    avg.bayes_risk.reset();
    avg.excess_risk.reset();
    avg.l1_posterior_error.reset();
    avg.l2_posterior_error.reset();
    bool miss_bayes = false, miss_l1 = false, miss_l2 = false;
    double var = 0.0;
    for (std::size_t i = start; i < start + seeds; ++i) {
      const auto& r = reports[i];
      if (!r.ok()) avg.failure = r.failure;
      avg.risk += r.risk;
      var += r.risk_se * r.risk_se;
      mean_opt(avg.bayes_risk, r.bayes_risk, miss_bayes);
      mean_opt(avg.l1_posterior_error, r.l1_posterior_error, miss_l1);
      mean_opt(avg.l2_posterior_error, r.l2_posterior_error, miss_l2);
    }
    const double s = static_cast<double>(seeds);
    avg.risk /= s;
    avg.risk_se = std::sqrt(var) / s;
    if (miss_bayes) avg.bayes_risk.reset(); else *avg.bayes_risk /= s;
    if (miss_l1) avg.l1_posterior_error.reset(); else *avg.l1_posterior_error /= s;
    if (miss_l2) avg.l2_posterior_error.reset(); else *avg.l2_posterior_error /= s;
    if (avg.bayes_risk) avg.excess_risk = avg.risk - *avg.bayes_risk;
    out.push_back(std::move(avg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV schema

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols{
      "experiment_id", "seed",     "K",          "d",          "noise_kind",
      "alpha",         "beta",     "n_train",    "estimator",  "mitigation",
      "risk",          "risk_se",  "bayes_risk", "excess_risk", "l1_posterior_error",
      "l2_posterior_error"};
  return cols;
}

/// Marker written in the risk column of a failed cell.
inline constexpr const char* kFailedMarker = "FAILED";

inline void write_csv_header(std::ostream& out) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

inline void write_csv_row(std::ostream& out, const RiskReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); };
  const bool ok = r.ok();
  out << csv_escape(r.experiment_id) << ',' << (r.seed ? std::to_string(*r.seed) : "mean") << ','
      << r.k << ',' << r.d << ',' << r.noise_kind << ',' << format_number(r.alpha) << ','
      << format_number(r.beta) << ',' << r.n_train << ',' << csv_escape(r.estimator) << ','
      << r.mitigation << ',' << (ok ? format_number(r.risk) : kFailedMarker) << ','
      << (ok ? format_number(r.risk_se) : "NA") << ',' << (ok ? opt(r.bayes_risk) : "NA") << ','
      << (ok ? opt(r.excess_risk) : "NA") << ',' << (ok ? opt(r.l1_posterior_error) : "NA") << ','
      << (ok ? opt(r.l2_posterior_error) : "NA") << '\n';
}

inline void write_reports_csv(std::ostream& out, const std::vector<RiskReport>& reports) {
  write_csv_header(out);
  for (const auto& r : reports) write_csv_row(out, r);
}

}  // namespace labelnoise
