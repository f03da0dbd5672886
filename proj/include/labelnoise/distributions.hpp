#pragma once

// Ground-truth joint distributions of (X, Y) with exact posterior access.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "labelnoise/errors.hpp"
#include "labelnoise/format.hpp"
#include "labelnoise/rng.hpp"
#include "labelnoise/simplex.hpp"

namespace labelnoise {

/// Where the labels of a Dataset came from.
struct Provenance {
  bool noisy = false;
  std::string channel;  // channel description, empty when clean
  std::uint64_t seed = 0;

  std::string describe() const {
    if (!noisy) return "clean";
    return "noisy(" + channel + ", seed=" + std::to_string(seed) + ")";
  }
};

/// n samples in d dimensions with 0-based labels in [0, classes).
class Dataset {
 public:
  Dataset(std::size_t dim, std::size_t classes, std::vector<double> features,
          std::vector<std::size_t> labels, Provenance provenance = {})
      : dim_(dim),
        classes_(classes),
        features_(std::move(features)),
        labels_(std::move(labels)),
        provenance_(std::move(provenance)) {
    if (dim_ == 0) throw ValidationError("dataset dimension must be positive");
    if (classes_ < 2) throw ValidationError("dataset needs at least 2 classes");
    if (features_.size() != labels_.size() * dim_) {
      throw ValidationError("dataset has " + std::to_string(labels_.size()) + " labels but " +
                            std::to_string(features_.size()) + " feature values for d=" +
                            std::to_string(dim_));
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] >= classes_) {
        throw ValidationError("label " + std::to_string(labels_[i] + 1) + " of sample " +
                              std::to_string(i + 1) + " outside [1, " +
                              std::to_string(classes_) + "]");
      }
    }
  }

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  std::size_t classes() const { return classes_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * dim_, dim_);
  }
  const std::vector<double>& features() const { return features_; }
  const std::vector<std::size_t>& labels() const { return labels_; }
  const Provenance& provenance() const { return provenance_; }

  /// Same features with replaced labels.
  Dataset relabeled(std::vector<std::size_t> labels, Provenance provenance) const {
    return Dataset(dim_, classes_, features_, std::move(labels), std::move(provenance));
  }

  /// Rows at the given indices, in that order.
  Dataset subset(std::span<const std::size_t> indices) const {
    std::vector<double> f;
    std::vector<std::size_t> l;
    f.reserve(indices.size() * dim_);
    l.reserve(indices.size());
    for (std::size_t i : indices) {
      auto r = row(i);
      f.insert(f.end(), r.begin(), r.end());
      l.push_back(labels_[i]);
    }
    return Dataset(dim_, classes_, std::move(f), std::move(l), provenance_);
  }

 private:
  std::size_t dim_;
  std::size_t classes_;
  std::vector<double> features_;
  std::vector<std::size_t> labels_;
  Provenance provenance_;
};

/// Finite-support distribution: M distinct points with marginal weights and
/// a posterior row per point.
class DiscreteJointDistribution {
 public:
  DiscreteJointDistribution(std::size_t dim, std::size_t classes, std::vector<double> points,
                            std::vector<double> weights, std::vector<double> posteriors)
      : dim_(dim),
        classes_(classes),
        points_(std::move(points)),
        weights_(std::move(weights)),
        posteriors_(std::move(posteriors)) {
    if (dim_ == 0) throw ValidationError("dimension must be positive");
    if (classes_ < 2) throw ValidationError("need at least 2 classes");
    const std::size_t m = weights_.size();
    if (m == 0) throw ValidationError("support must contain at least one point");
    if (points_.size() != m * dim_) throw ValidationError("point count does not match weights");
    if (posteriors_.size() != m * classes_) {
      throw ValidationError("posterior table does not match support size and K");
    }
    require_simplex(weights_, "weight vector");
    cumulative_.resize(m);
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!on_simplex(posterior_at(i))) {
        throw ValidationError("posterior row " + std::to_string(i + 1) + " is not on the simplex");
      }
      auto [it, inserted] = index_.emplace(std::vector<double>(point(i).begin(), point(i).end()), i);
      if (!inserted) {
        throw ValidationError("support points " + std::to_string(it->second + 1) + " and " +
                              std::to_string(i + 1) + " coincide");
      }
      acc += weights_[i];
      cumulative_[i] = acc;
    }
  }

  std::size_t classes() const { return classes_; }
  std::size_t dim() const { return dim_; }
  std::size_t support_size() const { return weights_.size(); }
  std::span<const double> point(std::size_t m) const {
    return std::span<const double>(points_).subspan(m * dim_, dim_);
  }
  double weight(std::size_t m) const { return weights_[m]; }
  const std::vector<double>& weights() const { return weights_; }
  std::span<const double> posterior_at(std::size_t m) const {
    return std::span<const double>(posteriors_).subspan(m * classes_, classes_);
  }

  /// Index of the support point equal to x; DomainError if x is not in the support.
  std::size_t locate(std::span<const double> x) const {
    if (x.size() != dim_) throw ValidationError("query dimension does not match distribution");
    auto it = index_.find(std::vector<double>(x.begin(), x.end()));
    if (it == index_.end()) throw DomainError("query point is not in the support");
    return it->second;
  }

  ProbVec posterior(std::span<const double> x) const {
    auto row = posterior_at(locate(x));
    return ProbVec(row.begin(), row.end());
  }

  /// i.i.d. draws: point by inverse CDF over weights, label from its posterior row.
  Dataset sample(std::size_t n, Rng& rng) const {
    if (n == 0) throw ValidationError("sample size must be positive");
    std::vector<double> features;
    std::vector<std::size_t> labels;
    features.reserve(n * dim_);
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t m = draw_point(rng);
      auto p = point(m);
      features.insert(features.end(), p.begin(), p.end());
      labels.push_back(sample_categorical(posterior_at(m), rng.uniform()));
    }
    return Dataset(dim_, classes_, std::move(features), std::move(labels));
  }

  /// Feature draws only.
  std::vector<double> sample_features(std::size_t n, Rng& rng) const {
    std::vector<double> features;
    features.reserve(n * dim_);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = point(draw_point(rng));
      features.insert(features.end(), p.begin(), p.end());
    }
    return features;
  }

  std::size_t draw_point(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t m = static_cast<std::size_t>(it - cumulative_.begin());
    if (m >= cumulative_.size()) m = cumulative_.size() - 1;
    while (weights_[m] == 0.0 && m > 0) --m;
    return m;
  }

  std::string describe() const {
    return "discrete(M=" + std::to_string(support_size()) + ", K=" + std::to_string(classes_) +
           ", d=" + std::to_string(dim_) + ")";
  }

 private:
  std::size_t dim_;
  std::size_t classes_;
  std::vector<double> points_;
  std::vector<double> weights_;
  std::vector<double> posteriors_;
  std::vector<double> cumulative_;
  std::map<std::vector<double>, std::size_t> index_;
};

/// One mixture component per class; diagonal covariance.
struct MixtureComponent {
  double prior;
  std::vector<double> mean;
  std::vector<double> variance;
};

class GaussianMixtureDistribution {
 public:
  explicit GaussianMixtureDistribution(std::vector<MixtureComponent> components)
      : components_(std::move(components)) {
    if (components_.size() < 2) throw ValidationError("mixture needs at least 2 components");
    dim_ = components_.front().mean.size();
    if (dim_ == 0) throw ValidationError("mixture dimension must be positive");
    std::vector<double> priors;
    for (std::size_t c = 0; c < components_.size(); ++c) {
      const auto& comp = components_[c];
      if (comp.mean.size() != dim_ || comp.variance.size() != dim_) {
        throw ValidationError("component " + std::to_string(c + 1) + " has inconsistent dimension");
      }
      for (double v : comp.variance) {
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw ValidationError("component " + std::to_string(c + 1) + " has non-positive variance");
        }
      }
      for (double v : comp.mean) {
        if (!std::isfinite(v)) throw ValidationError("component mean is not finite");
      }
      priors.push_back(comp.prior);
    }
    require_simplex(priors, "mixture priors");
    double acc = 0.0;
    for (const auto& comp : components_) {
      acc += comp.prior;
      cumulative_.push_back(acc);
      double norm = 0.0;
      for (double v : comp.variance) norm += std::log(2.0 * std::numbers::pi * v);
      log_norm_.push_back(-0.5 * norm);
    }
  }

  std::size_t classes() const { return components_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<MixtureComponent>& components() const { return components_; }

  /// Exact posterior by Bayes' rule, computed in log space with max shift.
  ProbVec posterior(std::span<const double> x) const {
    if (x.size() != dim_) throw ValidationError("query dimension does not match distribution");
    const std::size_t k = components_.size();
    std::vector<double> log_joint(k, -INFINITY);
    double top = -INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
      const auto& comp = components_[c];
      if (comp.prior <= 0.0) continue;
      double quad = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double diff = x[j] - comp.mean[j];
        quad += diff * diff / comp.variance[j];
      }
      log_joint[c] = std::log(comp.prior) + log_norm_[c] - 0.5 * quad;
      top = std::max(top, log_joint[c]);
    }
    ProbVec p(k, 0.0);
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (log_joint[c] == -INFINITY) continue;
      p[c] = std::exp(log_joint[c] - top);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
    return p;
  }

  std::size_t draw_component(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t c = static_cast<std::size_t>(it - cumulative_.begin());
    if (c >= cumulative_.size()) c = cumulative_.size() - 1;
    while (components_[c].prior == 0.0 && c > 0) --c;
    return c;
  }

  /// Component is drawn from the priors; its index is the label.
  Dataset sample(std::size_t n, Rng& rng) const {
    if (n == 0) throw ValidationError("sample size must be positive");
    std::vector<double> features;
    std::vector<std::size_t> labels;
    features.reserve(n * dim_);
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = draw_component(rng);
      const auto& comp = components_[c];
      for (std::size_t j = 0; j < dim_; ++j) {
        features.push_back(comp.mean[j] + std::sqrt(comp.variance[j]) * rng.normal());
      }
      labels.push_back(c);
    }
    return Dataset(dim_, classes(), std::move(features), std::move(labels));
  }

  std::vector<double> sample_features(std::size_t n, Rng& rng) const {
    return sample(n, rng).features();
  }

  std::string describe() const {
    return "mixture(K=" + std::to_string(classes()) + ", d=" + std::to_string(dim_) + ")";
  }

 private:
  std::vector<MixtureComponent> components_;
  std::size_t dim_ = 0;
  std::vector<double> cumulative_;
  std::vector<double> log_norm_;
};

/// Anything with exact posteriors that can be sampled.
template <typename D>
concept JointDistribution = requires(const D& d, std::span<const double> x, Rng& rng,
                                     std::size_t n) {
  { d.classes() } -> std::convertible_to<std::size_t>;
  { d.dim() } -> std::convertible_to<std::size_t>;
  { d.posterior(x) } -> std::convertible_to<ProbVec>;
  { d.sample(n, rng) } -> std::convertible_to<Dataset>;
  { d.sample_features(n, rng) } -> std::convertible_to<std::vector<double>>;
  { d.describe() } -> std::convertible_to<std::string>;
};

/// K equal-prior unit-variance components with means equally spaced on a
/// circle in the first two coordinates. Defaults: K=10, d=2, radius 3.
inline GaussianMixtureDistribution circle_mixture(std::size_t k = 10, std::size_t dim = 2,
                                                  double radius = 3.0, double variance = 1.0) {
  if (dim < 2) throw ValidationError("circle mixture needs d >= 2");
  std::vector<MixtureComponent> comps;
  for (std::size_t c = 0; c < k; ++c) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
    std::vector<double> mean(dim, 0.0);
    mean[0] = radius * std::cos(angle);
    mean[1] = radius * std::sin(angle);
    comps.push_back({1.0 / static_cast<double>(k), std::move(mean), std::vector<double>(dim, variance)});
  }
  return GaussianMixtureDistribution(std::move(comps));
}

template <JointDistribution D>
Dataset sample(const D& dist, std::size_t n, Rng& rng) {
  return dist.sample(n, rng);
}

template <JointDistribution D>
ProbVec posterior_oracle(const D& dist, std::span<const double> x) {
  return dist.posterior(x);
}

/// Bayes decision, lowest index on ties.
template <JointDistribution D>
std::size_t bayes_classify(const D& dist, std::span<const double> x) {
  return argmax(dist.posterior(x));
}

/// 1 - E[max_k p_k(X)], summed exactly over the support.
inline double bayes_risk_exact(const DiscreteJointDistribution& dist) {
  double risk = 0.0;
  for (std::size_t m = 0; m < dist.support_size(); ++m) {
    auto p = dist.posterior_at(m);
    risk += dist.weight(m) * (1.0 - p[argmax(p)]);
  }
  return risk;
}

struct MonteCarloEstimate {
  double value;
  double standard_error;
};

/// Mean of 1 - max_k p_k(x) over m feature draws, with its standard error.
template <JointDistribution D>
MonteCarloEstimate bayes_risk_mc(const D& dist, std::size_t m, Rng& rng) {
  if (m < 100) throw ValidationError("Monte Carlo sample count must be at least 100");
  const auto features = dist.sample_features(m, rng);
  double sum = 0.0;
  double sum_sq = 0.0;
  const std::size_t d = dist.dim();
  for (std::size_t i = 0; i < m; ++i) {
    auto p = dist.posterior(std::span<const double>(features).subspan(i * d, d));
    const double loss = 1.0 - p[argmax(p)];
    sum += loss;
    sum_sq += loss * loss;
  }
  const double n = static_cast<double>(m);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

/// Random distribution for property tests: weights and posterior rows from a
/// flat Dirichlet, support on distinct integer grid points of a square
/// lattice (d = 2) or the integers (d = 1).
inline DiscreteJointDistribution random_discrete(std::size_t k, std::size_t m, std::uint64_t seed,
                                                 std::size_t dim = 2) {
  if (k < 2) throw ValidationError("class count must be at least 2");
  if (m == 0) throw ValidationError("support size must be positive");
  if (dim == 0) throw ValidationError("dimension must be positive");
  Rng rng(seed);
  const std::size_t side = dim == 1 ? m
                                    : static_cast<std::size_t>(std::ceil(std::pow(
                                          static_cast<double>(m), 1.0 / static_cast<double>(dim))));
  std::vector<double> points;
  points.reserve(m * dim);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t rest = i;
    for (std::size_t j = 0; j < dim; ++j) {
      points.push_back(static_cast<double>(rest % side));
      rest /= side;
    }
  }
  ProbVec weights = flat_dirichlet(m, rng);
  std::vector<double> posteriors;
  posteriors.reserve(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    auto row = flat_dirichlet(k, rng);
    posteriors.insert(posteriors.end(), row.begin(), row.end());
  }
  return DiscreteJointDistribution(dim, k, std::move(points), std::move(weights),
                                   std::move(posteriors));
}

// Text formats.
//
// Distribution: header "M K d", then M lines "x_1 ... x_d | weight | p_1 ... p_K".
// Dataset:      header "n K d", then n lines "x_1 ... x_d | label" with
//               1-based labels (no posteriors; empirical data only).
// Blank lines and lines starting with '#' are ignored.

namespace detail {

struct TextRecord {
  std::size_t line;
  std::vector<std::vector<double>> fields;
};

struct TextTable {
  std::size_t rows = 0, classes = 0, dim = 0;
  std::vector<TextRecord> records;
};

inline TextTable read_table(std::istream& in) {
  TextTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (!have_header) {
      std::istringstream ss{std::string(t)};
      std::string a, b, c, extra;
      if (!(ss >> a >> b >> c) || (ss >> extra)) throw ParseError(line_no, "expected header 'M K d'");
      auto m = parse_uint(a), k = parse_uint(b), d = parse_uint(c);
      if (!m || !k || !d || *m == 0 || *k < 2 || *d == 0) {
        throw ParseError(line_no, "header needs M >= 1, K >= 2, d >= 1");
      }
      table.rows = *m;
      table.classes = *k;
      table.dim = *d;
      have_header = true;
      continue;
    }
    TextRecord rec{line_no, {}};
    std::string_view rest = t;
    while (true) {
      const auto bar = rest.find('|');
      std::string_view field = rest.substr(0, bar);
      std::vector<double> values;
      std::istringstream ss{std::string(field)};
      std::string token;
      while (ss >> token) {
        auto v = parse_double(token);
        if (!v) throw ParseError(line_no, "not a number: '" + token + "'");
        values.push_back(*v);
      }
      rec.fields.push_back(std::move(values));
      if (bar == std::string_view::npos) break;
      rest.remove_prefix(bar + 1);
    }
    table.records.push_back(std::move(rec));
  }
  if (!have_header) throw ParseError(0, "missing header line");
  if (table.records.size() != table.rows) {
    throw ParseError(line_no, "header declares " + std::to_string(table.rows) + " rows, found " +
                                  std::to_string(table.records.size()));
  }
  return table;
}

}  // namespace detail

inline DiscreteJointDistribution read_distribution(std::istream& in) {
  auto table = detail::read_table(in);
  std::vector<double> points, weights, posteriors;
  for (const auto& rec : table.records) {
    if (rec.fields.size() != 3) {
      throw ParseError(rec.line, "expected 'x_1 ... x_d | weight | p_1 ... p_K'");
    }
    if (rec.fields[0].size() != table.dim) throw ParseError(rec.line, "expected d feature values");
    if (rec.fields[1].size() != 1) throw ParseError(rec.line, "expected one weight");
    if (rec.fields[2].size() != table.classes) throw ParseError(rec.line, "expected K posterior values");
    if (!on_simplex(rec.fields[2])) throw ParseError(rec.line, "posterior row is not on the simplex");
    if (rec.fields[1][0] < 0.0) throw ParseError(rec.line, "negative weight");
    points.insert(points.end(), rec.fields[0].begin(), rec.fields[0].end());
    weights.push_back(rec.fields[1][0]);
    posteriors.insert(posteriors.end(), rec.fields[2].begin(), rec.fields[2].end());
  }
  return DiscreteJointDistribution(table.dim, table.classes, std::move(points), std::move(weights),
                                   std::move(posteriors));
}

inline void write_distribution(std::ostream& out, const DiscreteJointDistribution& dist) {
  out << dist.support_size() << ' ' << dist.classes() << ' ' << dist.dim() << '\n';
  for (std::size_t m = 0; m < dist.support_size(); ++m) {
    std::string line;
    for (double v : dist.point(m)) line += format_number(v) + ' ';
    line += "| " + format_number(dist.weight(m)) + " |";
    for (double v : dist.posterior_at(m)) line += ' ' + format_number(v);
    out << line << '\n';
  }
}

inline Dataset read_dataset(std::istream& in) {
  auto table = detail::read_table(in);
  std::vector<double> features;
  std::vector<std::size_t> labels;
  for (const auto& rec : table.records) {
    if (rec.fields.size() != 2) throw ParseError(rec.line, "expected 'x_1 ... x_d | label'");
    if (rec.fields[0].size() != table.dim) throw ParseError(rec.line, "expected d feature values");
    if (rec.fields[1].size() != 1) throw ParseError(rec.line, "expected one label");
    const double label = rec.fields[1][0];
    if (label != std::floor(label) || label < 1.0 || label > static_cast<double>(table.classes)) {
      throw ParseError(rec.line, "label must be an integer in [1, K]");
    }
    features.insert(features.end(), rec.fields[0].begin(), rec.fields[0].end());
    labels.push_back(static_cast<std::size_t>(label) - 1);
  }
  return Dataset(table.dim, table.classes, std::move(features), std::move(labels));
}

inline void write_dataset(std::ostream& out, const Dataset& data) {
  out << data.size() << ' ' << data.classes() << ' ' << data.dim() << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::string line;
    for (double v : data.row(i)) line += format_number(v) + ' ';
    line += "| " + std::to_string(data.labels()[i] + 1);
    out << line << '\n';
  }
}

}  // namespace labelnoise
