#pragma once

// Posterior estimators q_n(x) and the plug-in argmax classifier.

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "labelnoise/distributions.hpp"
#include "labelnoise/errors.hpp"
#include "labelnoise/format.hpp"
#include "labelnoise/noise_channel.hpp"
#include "labelnoise/rng.hpp"
#include "labelnoise/simplex.hpp"

namespace labelnoise {

/// Fitted posterior model. Implementations are immutable after fitting.
class PosteriorModel {
 public:
  virtual ~PosteriorModel() = default;
  virtual ProbVec predict(std::span<const double> x) const = 0;
};

struct EstimatorInfo {
  std::string family;
  std::string hyperparameters;
  std::size_t n_train = 0;

  std::string describe() const {
    return hyperparameters.empty() ? family : family + "(" + hyperparameters + ")";
  }
};

/// A fitted map from a d-vector to a K-simplex vector. Cheap to copy; safe
/// to query from several threads.
class PosteriorEstimate {
 public:
  PosteriorEstimate(std::shared_ptr<const PosteriorModel> model, std::size_t classes,
                    std::size_t dim, EstimatorInfo info)
      : model_(std::move(model)), classes_(classes), dim_(dim), info_(std::move(info)) {}

  ProbVec operator()(std::span<const double> x) const {
    if (x.size() != dim_) throw ValidationError("query dimension does not match estimator");
    return model_->predict(x);
  }

  std::size_t classes() const { return classes_; }
  std::size_t dim() const { return dim_; }
  const EstimatorInfo& info() const { return info_; }

 private:
  std::shared_ptr<const PosteriorModel> model_;
  std::size_t classes_;
  std::size_t dim_;
  EstimatorInfo info_;
};

/// Lowest-index argmax of the estimate at x.
inline std::size_t classify_argmax(const PosteriorEstimate& est, std::span<const double> x) {
  return argmax(est(x));
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index is
/// visited exactly once; results must be written to per-index slots.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = n;
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

/// Predictions for each row of a flat n x d feature matrix.
inline std::vector<ProbVec> predict_batch(const PosteriorEstimate& est,
                                          std::span<const double> features, std::size_t jobs = 1) {
  const std::size_t d = est.dim();
  const std::size_t n = features.size() / d;
  std::vector<ProbVec> out(n);
  parallel_for(n, jobs, [&](std::size_t i) { out[i] = est(features.subspan(i * d, d)); });
  return out;
}

// ---------------------------------------------------------------------------
// k nearest neighbors

namespace detail {

class KnnModel final : public PosteriorModel {
 public:
  KnnModel(const Dataset& train, std::size_t k_neighbors)
      : features_(train.features()),
        labels_(train.labels()),
        dim_(train.dim()),
        classes_(train.classes()),
        k_(k_neighbors) {}

  ProbVec predict(std::span<const double> x) const override {
    // Max-heap on (distance, index): the top is the worst kept neighbor, so
    // equal distances prefer the lower training index.
    std::vector<std::pair<double, std::size_t>> heap;
    heap.reserve(k_ + 1);
    const std::size_t n = labels_.size();
    const double* f = features_.data();
    for (std::size_t i = 0; i < n; ++i, f += dim_) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double diff = f[j] - x[j];
        d2 += diff * diff;
      }
      if (heap.size() < k_) {
        heap.emplace_back(d2, i);
        std::push_heap(heap.begin(), heap.end());
      } else if (std::make_pair(d2, i) < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = {d2, i};
        std::push_heap(heap.begin(), heap.end());
      }
    }
    ProbVec q(classes_, 0.0);
    for (const auto& [d2, i] : heap) q[labels_[i]] += 1.0;
    for (double& v : q) v /= static_cast<double>(heap.size());
    return q;
  }

 private:
  std::vector<double> features_;
  std::vector<std::size_t> labels_;
  std::size_t dim_;
  std::size_t classes_;
  std::size_t k_;
};

}  // namespace detail

/// ceil(sqrt(n)), the default neighbor count.
inline std::size_t default_k_neighbors(std::size_t n) {
  auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  while (k * k < n) ++k;
  while (k > 1 && (k - 1) * (k - 1) >= n) --k;
  return std::clamp<std::size_t>(k, 1, n);
}

/// Class frequencies among the k nearest training points (Euclidean;
/// distance ties go to the lower training index).
inline PosteriorEstimate fit_knn(const Dataset& train, std::size_t k_neighbors) {
  if (train.size() == 0) throw ValidationError("kNN needs a non-empty training set");
  if (k_neighbors < 1 || k_neighbors > train.size()) {
    throw ValidationError("k_neighbors must lie in [1, n]; got " + std::to_string(k_neighbors) +
                          " with n=" + std::to_string(train.size()));
  }
  return PosteriorEstimate(std::make_shared<detail::KnnModel>(train, k_neighbors), train.classes(),
                           train.dim(),
                           {"knn", "k=" + std::to_string(k_neighbors), train.size()});
}

// ---------------------------------------------------------------------------
// Histogram (cubic partition anchored at the origin)

enum class EmptyCellFallback { Uniform, GlobalFrequency };

namespace detail {

struct CellHash {
  std::size_t operator()(const std::vector<std::int64_t>& key) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (auto v : key) h = mix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

class HistogramModel final : public PosteriorModel {
 public:
  HistogramModel(const Dataset& train, double bin_width, EmptyCellFallback fallback)
      : width_(bin_width), classes_(train.classes()) {
    std::vector<double> global(classes_, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
      auto& counts = cells_[key(train.row(i))];
      if (counts.empty()) counts.assign(classes_, 0.0);
      counts[train.labels()[i]] += 1.0;
      global[train.labels()[i]] += 1.0;
    }
    for (auto& [k, counts] : cells_) normalize(counts);
    if (fallback == EmptyCellFallback::GlobalFrequency) {
      normalize(global);
      empty_ = std::move(global);
    } else {
      empty_ = uniform_vector(classes_);
    }
  }

  ProbVec predict(std::span<const double> x) const override {
    auto it = cells_.find(key(x));
    return it == cells_.end() ? empty_ : it->second;
  }

 private:
  std::vector<std::int64_t> key(std::span<const double> x) const {
    std::vector<std::int64_t> k(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
      k[j] = static_cast<std::int64_t>(std::floor(x[j] / width_));
    }
    return k;
  }

  static void normalize(std::vector<double>& v) {
    double sum = 0.0;
    for (double c : v) sum += c;
    for (double& c : v) c /= sum;
  }

  double width_;
  std::size_t classes_;
  std::unordered_map<std::vector<std::int64_t>, std::vector<double>, CellHash> cells_;
  ProbVec empty_;
};

}  // namespace detail

/// n^(-1/(d+2)), the default bin width.
inline double default_bin_width(std::size_t n, std::size_t dim) {
  return std::pow(static_cast<double>(n), -1.0 / static_cast<double>(dim + 2));
}

/// Class frequencies within x's cell of side bin_width; empty cells return
/// the fallback vector.
inline PosteriorEstimate fit_histogram(const Dataset& train, double bin_width,
                                       EmptyCellFallback fallback = EmptyCellFallback::Uniform) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw ValidationError("bin width must be positive, got " + format_number(bin_width));
  }
  if (train.size() == 0) throw ValidationError("histogram needs a non-empty training set");
  std::string hyper = "h=" + format_number(bin_width);
  if (fallback == EmptyCellFallback::GlobalFrequency) hyper += ", empty=global";
  return PosteriorEstimate(std::make_shared<detail::HistogramModel>(train, bin_width, fallback),
                           train.classes(), train.dim(), {"histogram", hyper, train.size()});
}

// ---------------------------------------------------------------------------
// Multilayer perceptron

struct MlpConfig {
  std::vector<std::size_t> hidden{64, 64};
  double learning_rate = 0.01;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  double momentum = 0.5;
  /// Standard deviation of the normal weight init; unset means sqrt(2 / fan_in).
  std::optional<double> init_scale;

  void validate() const {
    for (std::size_t w : hidden) {
      if (w == 0) throw ValidationError("hidden layer widths must be positive");
    }
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    if (batch_size == 0) throw ValidationError("batch size must be positive");
    if (epochs == 0) throw ValidationError("epoch count must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must lie in [0, 1)");
    if (init_scale && !(*init_scale > 0.0)) throw ValidationError("init scale must be positive");
  }

  std::string describe() const {
    std::string s = "hidden=[";
    for (std::size_t i = 0; i < hidden.size(); ++i) s += (i ? " " : "") + std::to_string(hidden[i]);
    s += "], lr=" + format_number(learning_rate) + ", batch=" + std::to_string(batch_size) +
         ", epochs=" + std::to_string(epochs) + ", momentum=" + format_number(momentum);
    if (init_scale) s += ", init=" + format_number(*init_scale);
    return s;
  }
};

namespace detail {

struct DenseLayer {
  std::size_t in, out;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;
};

class MlpModel final : public PosteriorModel {
 public:
  explicit MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {}

  ProbVec predict(std::span<const double> x) const override {
    std::vector<double> act(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      act = forward(layers_[l], act, l + 1 < layers_.size());
    }
    return softmax(act);
  }

  static std::vector<double> forward(const DenseLayer& layer, std::span<const double> in,
                                     bool relu) {
    std::vector<double> out(layer.bias);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weights.data() + o * layer.in;
      double acc = out[o];
      for (std::size_t i = 0; i < layer.in; ++i) acc += w[i] * in[i];
      out[o] = relu && acc < 0.0 ? 0.0 : acc;
    }
    return out;
  }

  static ProbVec softmax(std::span<const double> z) {
    const double top = *std::max_element(z.begin(), z.end());
    ProbVec p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      p[i] = std::exp(z[i] - top);
      sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
  }

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace detail

/// Fully connected ReLU network with softmax output, trained by mini-batch
/// SGD with momentum on cross-entropy against the labels as given.
///
/// Two streams are drawn from `rng`: one for weight init, one for the
/// per-epoch shuffles. The final partial batch of each epoch is used.
inline PosteriorEstimate fit_mlp(const Dataset& train, const MlpConfig& config, Rng& rng) {
  config.validate();
  if (train.size() < config.batch_size) {
    throw ValidationError("training set (" + std::to_string(train.size()) +
                          ") smaller than batch size (" + std::to_string(config.batch_size) + ")");
  }
  Rng init_rng(rng.next());
  Rng shuffle_rng(rng.next());

  std::vector<std::size_t> widths{train.dim()};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(train.classes());

  std::vector<detail::DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    detail::DenseLayer layer{widths[l], widths[l + 1], {}, {}};
    const double scale =
        config.init_scale.value_or(std::sqrt(2.0 / static_cast<double>(layer.in)));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = scale * init_rng.normal();
    layer.bias.assign(layer.out, 0.0);
    layers.push_back(std::move(layer));
  }
  const std::size_t depth = layers.size();
  std::vector<std::vector<double>> vel_w(depth), vel_b(depth), grad_w(depth), grad_b(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    vel_w[l].assign(layers[l].weights.size(), 0.0);
    vel_b[l].assign(layers[l].out, 0.0);
  }

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<std::vector<double>> acts(depth + 1);
  std::vector<std::vector<double>> deltas(depth);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    }
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (std::size_t l = 0; l < depth; ++l) {
        grad_w[l].assign(layers[l].weights.size(), 0.0);
        grad_b[l].assign(layers[l].out, 0.0);
      }
      double loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t idx = order[b];
        auto x = train.row(idx);
        acts[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < depth; ++l) {
          acts[l + 1] = detail::MlpModel::forward(layers[l], acts[l], l + 1 < depth);
        }
        const ProbVec p = detail::MlpModel::softmax(acts[depth]);
        const std::size_t y = train.labels()[idx];
        loss -= std::log(std::max(p[y], 1e-300));
        deltas[depth - 1] = p;
        deltas[depth - 1][y] -= 1.0;
        for (std::size_t l = depth; l-- > 0;) {
          const auto& layer = layers[l];
          const auto& delta = deltas[l];
          const auto& in = acts[l];
          for (std::size_t o = 0; o < layer.out; ++o) {
            const double g = delta[o];
            if (g == 0.0) continue;
            grad_b[l][o] += g;
            double* gw = grad_w[l].data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) gw[i] += g * in[i];
          }
          if (l == 0) break;
          auto& prev = deltas[l - 1];
          prev.assign(layer.in, 0.0);
          for (std::size_t o = 0; o < layer.out; ++o) {
            const double g = delta[o];
            if (g == 0.0) continue;
            const double* w = layer.weights.data() + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) prev[i] += g * w[i];
          }
          for (std::size_t i = 0; i < layer.in; ++i) {
            if (acts[l][i] <= 0.0) prev[i] = 0.0;  // ReLU gate
          }
        }
      }
      if (!std::isfinite(loss)) throw TrainingError(epoch + 1, batch_no + 1, "non-finite loss");
      for (std::size_t l = 0; l < depth; ++l) {
        auto& layer = layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) {
          vel_w[l][i] = config.momentum * vel_w[l][i] - config.learning_rate * grad_w[l][i] * inv_batch;
          layer.weights[i] += vel_w[l][i];
        }
        for (std::size_t o = 0; o < layer.out; ++o) {
          vel_b[l][o] = config.momentum * vel_b[l][o] - config.learning_rate * grad_b[l][o] * inv_batch;
          layer.bias[o] += vel_b[l][o];
        }
      }
      for (const auto& layer : layers) {
        for (double w : layer.weights) {
          if (!std::isfinite(w)) throw TrainingError(epoch + 1, batch_no + 1, "non-finite weights");
        }
      }
    }
  }
  return PosteriorEstimate(std::make_shared<detail::MlpModel>(std::move(layers)), train.classes(),
                           train.dim(), {"mlp", config.describe(), train.size()});
}

// ---------------------------------------------------------------------------
// Oracle estimators

namespace detail {

template <JointDistribution D>
class NoisyOracleModel final : public PosteriorModel {
 public:
  NoisyOracleModel(D dist, TransitionMatrix channel)
      : dist_(std::move(dist)), channel_(std::move(channel)) {}

  ProbVec predict(std::span<const double> x) const override {
    return apply_to_posterior(dist_.posterior(x), channel_);
  }

 private:
  D dist_;
  TransitionMatrix channel_;
};

}  // namespace detail

/// Exact noisy posterior q(x) = p(x) A: the large-sample limit of any
/// consistent estimator trained on labels passed through A.
template <JointDistribution D>
PosteriorEstimate oracle_noisy_posterior(const D& dist, const TransitionMatrix& channel) {
  if (channel.k() != dist.classes()) {
    throw ValidationError("channel K=" + std::to_string(channel.k()) +
                          " does not match distribution K=" + std::to_string(dist.classes()));
  }
  return PosteriorEstimate(std::make_shared<detail::NoisyOracleModel<D>>(dist, channel),
                           dist.classes(), dist.dim(), {"oracle", channel.describe(), 0});
}

/// Exact clean posterior p(x).
template <JointDistribution D>
PosteriorEstimate true_posterior(const D& dist) {
  return oracle_noisy_posterior(dist, identity_channel(dist.classes()));
}

}  // namespace labelnoise
