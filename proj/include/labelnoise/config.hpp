#pragma once

// Experiment configuration: a flat INI-style key-value file.
//
//   # comment
//   [experiment]
//   id = symmetric-knn
//   seed = 42
//   n_train = 20000
//   n_test = 10000
//   seeds = 5
//   jobs = 1
//   mitigation = none            # none | known-symmetric | backward
//   output = results.csv
//
//   [distribution]
//   kind = mixture               # mixture | discrete | dataset
//   classes = 10                 # mixture: circle benchmark parameters
//   dim = 2
//   radius = 3
//   variance = 1
//   priors = [0.5, 0.5]          # optional, defaults to equal priors
//   path = dist.txt              # discrete | dataset, relative to the config
//
//   [estimator]
//   family = knn                 # knn | histogram | mlp | oracle
//   k_neighbors = auto           # auto = ceil(sqrt(n))
//   bin_width = auto             # auto = n^(-1/(d+2))
//   empty_cell = uniform         # uniform | global
//   hidden = [64, 64]
//   learning_rate = 0.01
//   batch_size = 64
//   epochs = 10
//   momentum = 0.5
//   init_scale = auto            # auto = sqrt(2 / fan_in)
//
//   [channel]
//   kind = symmetric             # symmetric | shift | asymmetric
//   alphas = [0, 0.05, 0.1]
//   beta = 0.2                   # asymmetric only
//
//   [consistency]
//   n_grid = [500, 5000, 50000]

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "labelnoise/distributions.hpp"
#include "labelnoise/errors.hpp"
#include "labelnoise/format.hpp"
#include "labelnoise/sweep.hpp"

namespace labelnoise {

struct ExperimentConfig {
  ExperimentSpec spec;
  std::string output;  // may be empty; the CLI falls back to stdout or --out
};

namespace detail {

struct ConfigEntry {
  std::string value;
  std::size_t line;
  bool used = false;
};

class ConfigFile {
 public:
  ConfigFile(std::istream& in) {
    std::string raw;
    std::size_t line_no = 0;
    std::string section;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto hash = raw.find('#');
      std::string_view line = trim(std::string_view(raw).substr(0, hash));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError(line_no, "malformed section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        static const std::vector<std::string> known{"experiment", "distribution", "estimator",
                                                    "channel", "consistency"};
        if (std::find(known.begin(), known.end(), section) == known.end()) {
          throw ParseError(line_no, "unknown section [" + section + "]");
        }
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
      if (section.empty()) throw ParseError(line_no, "key outside of a section");
      const std::string key = section + "." + std::string(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (value.empty()) throw ParseError(line_no, key + ": empty value");
      auto [it, inserted] = entries_.emplace(key, ConfigEntry{value, line_no});
      if (!inserted) {
        throw ParseError(line_no, key + ": duplicate key (first set on line " +
                                      std::to_string(it->second.line) + ")");
      }
    }
  }

  const ConfigEntry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  template <typename T, typename Parse>
  T get(const std::string& key, T fallback, Parse parse) {
    const auto* e = find(key);
    if (!e) return fallback;
    try {
      return parse(e->value);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      throw ParseError(e->line, key + ": " + err.what());
    }
  }

  template <typename T, typename Parse>
  T require(const std::string& key, Parse parse) {
    if (!has(key)) throw ParseError(0, key + ": required field missing");
    return get<T>(key, T{}, parse);
  }

  std::size_t line_of(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!e.used) throw ParseError(e.line, key + ": unknown key");
    }
  }

 private:
  std::map<std::string, ConfigEntry> entries_;
};

inline double as_double(const std::string& s) {
  auto v = parse_double(s);
  if (!v) throw ValidationError("expected a number, got '" + s + "'");
  return *v;
}

inline std::size_t as_count(const std::string& s) {
  auto v = parse_uint(s);
  if (!v) throw ValidationError("expected a non-negative integer, got '" + s + "'");
  return static_cast<std::size_t>(*v);
}

inline std::size_t as_positive(const std::string& s) {
  const auto v = as_count(s);
  if (v == 0) throw ValidationError("must be positive");
  return v;
}

inline std::vector<std::string> as_list(const std::string& s) {
  std::string_view v = trim(s);
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw ValidationError("expected a bracketed list like [1, 2, 3]");
  }
  v = trim(v.substr(1, v.size() - 2));
  std::vector<std::string> items;
  if (v.empty()) return items;
  while (true) {
    const auto comma = v.find(',');
    const auto item = trim(v.substr(0, comma));
    if (item.empty()) throw ValidationError("empty list element");
    items.emplace_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return items;
}

inline std::vector<double> as_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : as_list(s)) out.push_back(as_double(item));
  return out;
}

inline std::vector<std::size_t> as_count_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : as_list(s)) out.push_back(as_positive(item));
  return out;
}

inline Mitigation parse_mitigation(const std::string& s) {
  if (s == "none") return Mitigation::None;
  if (s == "known-symmetric") return Mitigation::KnownSymmetric;
  if (s == "backward") return Mitigation::Backward;
  throw ValidationError("expected none, known-symmetric or backward; got '" + s + "'");
}

}  // namespace detail

using detail::parse_mitigation;

/// Parses a configuration. Relative paths resolve against `base_dir`.
inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  using namespace detail;
  ConfigFile cfg(in);
  ExperimentConfig out;
  ExperimentSpec& spec = out.spec;

  auto as_string = [](const std::string& s) { return s; };
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return path;
  };

  // [experiment]
  spec.experiment_id = cfg.get<std::string>("experiment.id", "experiment", as_string);
  spec.master_seed = cfg.get<std::uint64_t>("experiment.seed", 0, [](const std::string& s) {
    auto v = parse_uint(s);
    if (!v) throw ValidationError("expected a 64-bit unsigned integer");
    return *v;
  });
  spec.n_train = cfg.get<std::size_t>("experiment.n_train", 1000, as_positive);
  spec.n_test = cfg.get<std::size_t>("experiment.n_test", 10000, as_positive);
  spec.seeds = cfg.get<std::size_t>("experiment.seeds", 5, as_positive);
  spec.jobs = cfg.get<std::size_t>("experiment.jobs", 1, as_positive);
  spec.mitigation = cfg.get<Mitigation>("experiment.mitigation", Mitigation::None, parse_mitigation);
  out.output = cfg.get<std::string>("experiment.output", "", as_string);
  if (!out.output.empty()) out.output = resolve(out.output).string();

  // [distribution]
  const std::string kind = cfg.get<std::string>("distribution.kind", "mixture", as_string);
  if (kind == "mixture") {
    const auto k = cfg.get<std::size_t>("distribution.classes", 10, as_count);
    const auto dim = cfg.get<std::size_t>("distribution.dim", 2, as_count);
    const double radius = cfg.get<double>("distribution.radius", 3.0, as_double);
    const double variance = cfg.get<double>("distribution.variance", 1.0, as_double);
    const std::size_t line = cfg.line_of("distribution.kind");
    if (k < 2) throw ParseError(cfg.line_of("distribution.classes"), "distribution.classes: must be at least 2");
    if (dim < 2) throw ParseError(cfg.line_of("distribution.dim"), "distribution.dim: must be at least 2");
    if (!(variance > 0.0)) throw ParseError(cfg.line_of("distribution.variance"), "distribution.variance: must be positive");
    try {
      auto mixture = circle_mixture(k, dim, radius, variance);
      if (cfg.has("distribution.priors")) {
        auto priors = cfg.get<std::vector<double>>("distribution.priors", {}, as_double_list);
        if (priors.size() != k) {
          throw ParseError(cfg.line_of("distribution.priors"),
                           "distribution.priors: expected " + std::to_string(k) + " values");
        }
        auto comps = mixture.components();
        for (std::size_t c = 0; c < k; ++c) comps[c].prior = priors[c];
        try {
          mixture = GaussianMixtureDistribution(std::move(comps));
        } catch (const ValidationError& e) {
          throw ParseError(cfg.line_of("distribution.priors"), std::string("distribution.priors: ") + e.what());
        }
      }
      spec.source = std::move(mixture);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line, std::string("distribution: ") + e.what());
    }
  } else if (kind == "discrete" || kind == "dataset") {
    const auto path = resolve(cfg.require<std::string>("distribution.path", as_string));
    const std::size_t line = cfg.line_of("distribution.path");
    std::ifstream file(path);
    if (!file) throw ParseError(line, "distribution.path: cannot open '" + path.string() + "'");
    try {
      if (kind == "discrete") {
        spec.source = read_distribution(file);
      } else {
        spec.source = read_dataset(file);
      }
    } catch (const Error& e) {
      throw ParseError(line, "distribution.path: " + path.string() + ": " + e.what());
    }
  } else {
    throw ParseError(cfg.line_of("distribution.kind"),
                     "distribution.kind: expected mixture, discrete or dataset; got '" + kind + "'");
  }

  // [estimator]
  auto& est = spec.estimator;
  const std::string family = cfg.get<std::string>("estimator.family", "knn", as_string);
  if (family == "knn") est.family = EstimatorFamily::Knn;
  else if (family == "histogram") est.family = EstimatorFamily::Histogram;
  else if (family == "mlp") est.family = EstimatorFamily::Mlp;
  else if (family == "oracle") est.family = EstimatorFamily::Oracle;
  else {
    throw ParseError(cfg.line_of("estimator.family"),
                     "estimator.family: expected knn, histogram, mlp or oracle; got '" + family + "'");
  }
  auto auto_or = [](auto parse) {
    return [parse](const std::string& s) -> std::optional<decltype(parse(s))> {
      if (s == "auto") return std::nullopt;
      return parse(s);
    };
  };
  est.k_neighbors = cfg.get<std::optional<std::size_t>>("estimator.k_neighbors", std::nullopt,
                                                        auto_or(as_positive));
  est.bin_width = cfg.get<std::optional<double>>("estimator.bin_width", std::nullopt,
                                                 auto_or([](const std::string& s) {
                                                   const double v = as_double(s);
                                                   if (!(v > 0.0)) throw ValidationError("must be positive");
                                                   return v;
                                                 }));
  est.empty_cell = cfg.get<EmptyCellFallback>(
      "estimator.empty_cell", EmptyCellFallback::Uniform, [](const std::string& s) {
        if (s == "uniform") return EmptyCellFallback::Uniform;
        if (s == "global") return EmptyCellFallback::GlobalFrequency;
        throw ValidationError("expected uniform or global");
      });
  auto& mlp = est.mlp;
  mlp.hidden = cfg.get<std::vector<std::size_t>>("estimator.hidden", mlp.hidden, as_count_list);
  mlp.learning_rate = cfg.get<double>("estimator.learning_rate", mlp.learning_rate, as_double);
  mlp.batch_size = cfg.get<std::size_t>("estimator.batch_size", mlp.batch_size, as_positive);
  mlp.epochs = cfg.get<std::size_t>("estimator.epochs", mlp.epochs, as_positive);
  mlp.momentum = cfg.get<double>("estimator.momentum", mlp.momentum, as_double);
  mlp.init_scale = cfg.get<std::optional<double>>("estimator.init_scale", std::nullopt, auto_or(as_double));
  try {
    mlp.validate();
  } catch (const ValidationError& e) {
    throw ParseError(cfg.line_of("estimator.family"), std::string("estimator: ") + e.what());
  }

  // [channel]
  const std::string channel = cfg.get<std::string>("channel.kind", "symmetric", as_string);
  if (channel == "symmetric") spec.channel.kind = ChannelKind::Symmetric;
  else if (channel == "shift") spec.channel.kind = ChannelKind::Shift;
  else if (channel == "asymmetric") spec.channel.kind = ChannelKind::Asymmetric;
  else {
    throw ParseError(cfg.line_of("channel.kind"),
                     "channel.kind: expected symmetric, shift or asymmetric; got '" + channel + "'");
  }
  spec.channel.alphas = cfg.require<std::vector<double>>("channel.alphas", as_double_list);
  if (spec.channel.alphas.empty()) {
    throw ParseError(cfg.line_of("channel.alphas"), "channel.alphas: grid must not be empty");
  }
  for (double a : spec.channel.alphas) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw ParseError(cfg.line_of("channel.alphas"),
                       "channel.alphas: " + format_number(a) + " outside [0, 1]");
    }
  }
  if (spec.channel.kind == ChannelKind::Asymmetric) {
    spec.channel.beta = cfg.require<double>("channel.beta", as_double);
    if (!(spec.channel.beta >= 0.0 && spec.channel.beta <= 1.0)) {
      throw ParseError(cfg.line_of("channel.beta"), "channel.beta: outside [0, 1]");
    }
    if (source_classes(spec.source) != 2) {
      throw ParseError(cfg.line_of("channel.kind"), "channel.kind: asymmetric needs K = 2");
    }
  } else if (cfg.has("channel.beta")) {
    throw ParseError(cfg.line_of("channel.beta"), "channel.beta: only valid for asymmetric channels");
  }

  // [consistency]
  spec.n_grid = cfg.get<std::vector<std::size_t>>("consistency.n_grid", {}, as_count_list);

  cfg.reject_unused();
  return out;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open config '" + path.string() + "'");
  return parse_config(in, path.parent_path());
}

}  // namespace labelnoise
