#pragma once

// Risk and posterior-error metrics, and the exact decision-agreement checks
// for symmetric, binary asymmetric and shift channels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "labelnoise/distributions.hpp"
#include "labelnoise/errors.hpp"
#include "labelnoise/estimators.hpp"
#include "labelnoise/noise_channel.hpp"
#include "labelnoise/rng.hpp"
#include "labelnoise/simplex.hpp"

namespace labelnoise {

/// Maps a feature vector to a 0-based class index.
using Classifier = std::function<std::size_t(std::span<const double>)>;

inline Classifier plug_in(PosteriorEstimate est) {
  return [est = std::move(est)](std::span<const double> x) { return classify_argmax(est, x); };
}

template <JointDistribution D>
Classifier bayes_classifier(D dist) {
  return [dist = std::move(dist)](std::span<const double> x) { return bayes_classify(dist, x); };
}

/// sum_m w_m (1 - p_m[g(x_m)]): the exact clean-label risk of g.
inline double conditional_risk_exact(const Classifier& g, const DiscreteJointDistribution& dist) {
  double risk = 0.0;
  for (std::size_t m = 0; m < dist.support_size(); ++m) {
    std::size_t label = 0;
    try {
      label = g(dist.point(m));
    } catch (const Error& e) {
      throw DomainError("classifier undefined at support point " + std::to_string(m + 1) + ": " +
                        e.what());
    }
    if (label >= dist.classes()) {
      throw DomainError("classifier returned class " + std::to_string(label + 1) +
                        " at support point " + std::to_string(m + 1));
    }
    risk += dist.weight(m) * (1.0 - dist.posterior_at(m)[label]);
  }
  return risk;
}

/// Misclassification rate against clean labels on m fresh draws, with
/// binomial standard error.
template <JointDistribution D>
MonteCarloEstimate conditional_risk_mc(const Classifier& g, const D& dist, std::size_t m,
                                       Rng& rng) {
  if (m < 100) throw ValidationError("Monte Carlo sample count must be at least 100");
  const Dataset test = dist.sample(m, rng);
  std::size_t errors = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (g(test.row(i)) != test.labels()[i]) ++errors;
  }
  const double r = static_cast<double>(errors) / static_cast<double>(m);
  return {r, std::sqrt(r * (1.0 - r) / static_cast<double>(m))};
}

/// E sum_k |est_k - target_k| and E sum_k (est_k - target_k)^2.
struct PosteriorError {
  double l1;
  double l2;
};

namespace detail {

inline void accumulate_error(const ProbVec& a, const ProbVec& b, double weight, PosteriorError& acc) {
  if (a.size() != b.size()) throw ValidationError("estimator and target disagree on K");
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    l1 += std::abs(d);
    l2 += d * d;
  }
  acc.l1 += weight * l1;
  acc.l2 += weight * l2;
}

}  // namespace detail

/// Exact expectation over the support of a discrete distribution.
inline PosteriorError posterior_l1_error(const PosteriorEstimate& est,
                                         const DiscreteJointDistribution& dist,
                                         const PosteriorEstimate& target) {
  if (est.classes() != target.classes()) throw ValidationError("estimator and target disagree on K");
  PosteriorError acc{0.0, 0.0};
  for (std::size_t m = 0; m < dist.support_size(); ++m) {
    detail::accumulate_error(est(dist.point(m)), target(dist.point(m)), dist.weight(m), acc);
  }
  return acc;
}

/// Mean over the given feature rows.
inline PosteriorError posterior_l1_error_at(const PosteriorEstimate& est,
                                            const PosteriorEstimate& target,
                                            std::span<const double> features, std::size_t jobs = 1) {
  if (est.classes() != target.classes()) throw ValidationError("estimator and target disagree on K");
  const std::size_t d = est.dim();
  const std::size_t n = features.size() / d;
  if (n == 0) throw ValidationError("no evaluation points");
  std::vector<PosteriorError> per(n, PosteriorError{0.0, 0.0});
  parallel_for(n, jobs, [&](std::size_t i) {
    auto x = features.subspan(i * d, d);
    detail::accumulate_error(est(x), target(x), 1.0, per[i]);
  });
  PosteriorError acc{0.0, 0.0};
  for (const auto& e : per) {
    acc.l1 += e.l1;
    acc.l2 += e.l2;
  }
  acc.l1 /= static_cast<double>(n);
  acc.l2 /= static_cast<double>(n);
  return acc;
}

/// Monte Carlo form over m feature draws.
template <JointDistribution D>
PosteriorError posterior_l1_error(const PosteriorEstimate& est, const D& dist,
                                  const PosteriorEstimate& target, std::size_t m, Rng& rng) {
  if (m < 100) throw ValidationError("Monte Carlo sample count must be at least 100");
  const auto features = dist.sample_features(m, rng);
  return posterior_l1_error_at(est, target, features);
}

inline PosteriorError posterior_l1_error(const PosteriorEstimate& est,
                                         const DiscreteJointDistribution& dist,
                                         const PosteriorEstimate& target, std::size_t, Rng&) {
  return posterior_l1_error(est, dist, target);
}

/// Multiplier on the Bayes risk reached by the noisy plug-in under a binary
/// channel with unknown flip rates: 1 + 2|alpha - beta| / (1 - 2 max(alpha, beta)).
inline double binary_bound_factor(double alpha, double beta) {
  if (!(alpha >= 0.0 && beta >= 0.0)) throw DomainError("flip rates must be non-negative");
  const double top = std::max(alpha, beta);
  if (!(top < 0.5)) {
    throw DomainError("max(alpha, beta) must be below 0.5, got " + format_number(top));
  }
  return 1.0 + 2.0 * std::abs(alpha - beta) / (1.0 - 2.0 * top);
}

// ---------------------------------------------------------------------------
// Symmetric channels: exact decision agreement.

/// Support points whose true posterior has maxima within this of each other
/// are excluded from agreement counts.
inline constexpr double kTieTolerance = 1e-12;

struct Disagreement {
  std::size_t trial;
  double alpha;
  std::size_t point;        // 1-based support index
  std::size_t bayes_class;  // 1-based
  std::size_t noisy_class;  // 1-based
};

struct AgreementReport {
  std::size_t k = 0;
  std::vector<double> alphas;
  std::size_t trials = 0;
  std::size_t support_size = 0;
  std::uint64_t seed = 0;
  std::size_t checked = 0;
  std::size_t agreements = 0;
  std::size_t tied_excluded = 0;
  std::vector<Disagreement> disagreements;

  bool passed() const { return disagreements.empty(); }
};

/// Multiples of 0.05 up to (K-1)/K - margin, plus that endpoint.
inline std::vector<double> sub_threshold_grid(std::size_t k, double margin = 0.01,
                                              double step = 0.05) {
  const double top = breakdown_threshold(k) - margin;
  std::vector<double> grid;
  for (std::size_t i = 0;; ++i) {
    const double a = static_cast<double>(i) * step;
    if (a > top + 1e-12) break;
    grid.push_back(a);
  }
  if (grid.empty() || top - grid.back() > 1e-12) grid.push_back(top);
  return grid;
}

/// For each trial, draws random_discrete(k, support_size) and checks that
/// the plug-in on the exact noisy posterior under build_symmetric(k, alpha)
/// picks the Bayes class at every support point with a unique maximizer.
inline AgreementReport verify_symmetric_agreement(std::size_t k, const std::vector<double>& alphas,
                                      std::size_t trials, std::uint64_t seed,
                                      std::size_t support_size = 50) {
  const double threshold = breakdown_threshold(k);
  for (double a : alphas) {
    if (!(a >= 0.0 && a < threshold)) {
      throw DomainError("alpha " + format_number(a) + " not in [0, (K-1)/K) = [0, " +
                        format_number(threshold) + ")");
    }
  }
  AgreementReport report;
  report.k = k;
  report.alphas = alphas;
  report.trials = trials;
  report.support_size = support_size;
  report.seed = seed;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto dist = random_discrete(k, support_size, derive_seed(seed, t));
    for (double alpha : alphas) {
      const auto est = oracle_noisy_posterior(dist, build_symmetric(k, alpha));
      for (std::size_t m = 0; m < dist.support_size(); ++m) {
        if (has_tied_max(dist.posterior_at(m), kTieTolerance)) {
          ++report.tied_excluded;
          continue;
        }
        ++report.checked;
        const std::size_t bayes = bayes_classify(dist, dist.point(m));
        const std::size_t noisy = classify_argmax(est, dist.point(m));
        if (bayes == noisy) {
          ++report.agreements;
        } else {
          report.disagreements.push_back({t, alpha, m + 1, bayes + 1, noisy + 1});
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Binary channels with unequal flip rates.

struct BinaryBoundViolation {
  std::size_t trial;
  double alpha, beta, risk, bound;
};

struct BinaryBoundReport {
  std::size_t trials = 0;
  std::size_t support_size = 0;
  std::uint64_t seed = 0;
  double max_ratio = 0.0;               // max risk / (bayes * factor)
  double max_risk_over_bayes = 0.0;     // max risk / bayes
  double max_equal_noise_deviation = 0.0;  // max |risk / bayes - 1| with alpha = beta
  std::vector<BinaryBoundViolation> violations;

  bool passed() const { return violations.empty() && max_equal_noise_deviation <= 1e-12; }
};

/// Exact risk of the plug-in on the noisy posterior of `dist` under `channel`.
inline double noisy_plug_in_risk(const DiscreteJointDistribution& dist,
                                 const TransitionMatrix& channel) {
  return conditional_risk_exact(plug_in(oracle_noisy_posterior(dist, channel)), dist);
}

/// Per trial: random binary distribution, alpha and beta uniform on [0, 0.5),
/// and the check risk <= bayes * binary_bound_factor + 1e-12. The same trial also
/// runs alpha = beta and records |risk / bayes - 1|.
inline BinaryBoundReport verify_binary_bound(std::size_t trials, std::uint64_t seed,
                                        std::size_t support_size = 50) {
  BinaryBoundReport report;
  report.trials = trials;
  report.support_size = support_size;
  report.seed = seed;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    const auto dist = random_discrete(2, support_size, rng.next());
    const double alpha = rng.uniform(0.0, 0.5);
    const double beta = rng.uniform(0.0, 0.5);
    const double bayes = bayes_risk_exact(dist);
    const double risk = noisy_plug_in_risk(dist, build_binary(alpha, beta));
    const double bound = bayes * binary_bound_factor(alpha, beta);
    if (!(risk <= bound + 1e-12)) report.violations.push_back({t, alpha, beta, risk, bound});
    if (bayes > 0.0) {
      report.max_ratio = std::max(report.max_ratio, risk / bound);
      report.max_risk_over_bayes = std::max(report.max_risk_over_bayes, risk / bayes);
      const double equal_risk = noisy_plug_in_risk(dist, build_binary(alpha, alpha));
      report.max_equal_noise_deviation =
          std::max(report.max_equal_noise_deviation, std::abs(equal_risk / bayes - 1.0));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Shift channels.

/// Discrete distribution whose posterior rows put `top` on one random class
/// and spread 1 - top evenly over the others.
inline DiscreteJointDistribution peaked_discrete(std::size_t k, std::size_t m, double top,
                                                 std::uint64_t seed) {
  if (!(top > 1.0 / static_cast<double>(k) && top <= 1.0)) {
    throw ValidationError("peak must exceed 1/K");
  }
  const auto base = random_discrete(k, m, seed);
  Rng rng(mix64(seed));
  std::vector<double> points, posteriors;
  const double rest = (1.0 - top) / static_cast<double>(k - 1);
  for (std::size_t i = 0; i < m; ++i) {
    auto p = base.point(i);
    points.insert(points.end(), p.begin(), p.end());
    const std::size_t hot = rng.index(k);
    for (std::size_t c = 0; c < k; ++c) posteriors.push_back(c == hot ? top : rest);
  }
  return DiscreteJointDistribution(base.dim(), k, std::move(points), base.weights(),
                                   std::move(posteriors));
}

struct ShiftRow {
  double alpha;
  std::size_t checked = 0;
  std::size_t disagreements = 0;
};

struct ShiftCrossoverReport {
  std::size_t k = 0;
  double top = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::vector<ShiftRow> rows;
};

/// Agreement of the noisy plug-in under build_shift with the Bayes decision
/// on peaked distributions, for each alpha.
inline ShiftCrossoverReport verify_shift_crossover(std::size_t k, const std::vector<double>& alphas,
                                                   std::size_t trials, std::uint64_t seed,
                                                   double top = 0.9, std::size_t support_size = 50) {
  ShiftCrossoverReport report{k, top, trials, seed, {}};
  for (double alpha : alphas) report.rows.push_back({alpha});
  for (std::size_t t = 0; t < trials; ++t) {
    const auto dist = peaked_discrete(k, support_size, top, derive_seed(seed, t));
    for (auto& row : report.rows) {
      const auto est = oracle_noisy_posterior(dist, build_shift(k, row.alpha));
      for (std::size_t m = 0; m < dist.support_size(); ++m) {
        ++row.checked;
        if (classify_argmax(est, dist.point(m)) != bayes_classify(dist, dist.point(m))) {
          ++row.disagreements;
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const AgreementReport& r) {
  nlohmann::json j;
  j["k"] = r.k;
  j["alphas"] = r.alphas;
  j["trials"] = r.trials;
  j["support_size"] = r.support_size;
  j["seed"] = r.seed;
  j["checked_points"] = r.checked;
  j["agreements"] = r.agreements;
  j["tied_points_excluded"] = r.tied_excluded;
  j["disagreement_count"] = r.disagreements.size();
  auto list = nlohmann::json::array();
  for (const auto& d : r.disagreements) {
    list.push_back({{"trial", d.trial},
                    {"alpha", d.alpha},
                    {"point", d.point},
                    {"bayes_class", d.bayes_class},
                    {"noisy_class", d.noisy_class}});
  }
  j["disagreements"] = std::move(list);
  j["passed"] = r.passed();
  return j;
}

inline nlohmann::json to_json(const BinaryBoundReport& r) {
  nlohmann::json j;
  j["trials"] = r.trials;
  j["support_size"] = r.support_size;
  j["seed"] = r.seed;
  j["max_bound_ratio"] = r.max_ratio;
  j["max_risk_over_bayes"] = r.max_risk_over_bayes;
  j["max_equal_noise_deviation"] = r.max_equal_noise_deviation;
  j["violation_count"] = r.violations.size();
  auto list = nlohmann::json::array();
  for (const auto& v : r.violations) {
    list.push_back({{"trial", v.trial},
                    {"alpha", v.alpha},
                    {"beta", v.beta},
                    {"risk", v.risk},
                    {"bound", v.bound}});
  }
  j["violations"] = std::move(list);
  j["passed"] = r.passed();
  return j;
}

inline nlohmann::json to_json(const ShiftCrossoverReport& r) {
  nlohmann::json j;
  j["k"] = r.k;
  j["top"] = r.top;
  j["trials"] = r.trials;
  j["seed"] = r.seed;
  auto rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"alpha", row.alpha},
                    {"checked_points", row.checked},
                    {"disagreements", row.disagreements}});
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace labelnoise
