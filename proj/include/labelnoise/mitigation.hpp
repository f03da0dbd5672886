#pragma once

// Known-channel posterior corrections. Both wrap an estimate and clip
// negative entries before renormalizing.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "labelnoise/errors.hpp"
#include "labelnoise/estimators.hpp"
#include "labelnoise/noise_channel.hpp"
#include "labelnoise/simplex.hpp"

namespace labelnoise {

enum class Mitigation { None, KnownSymmetric, Backward };

inline const char* to_string(Mitigation m) {
  switch (m) {
    case Mitigation::None: return "none";
    case Mitigation::KnownSymmetric: return "known-symmetric";
    case Mitigation::Backward: return "backward";
  }
  return "unknown";
}

namespace detail {

class SymmetricCorrection final : public PosteriorModel {
 public:
  SymmetricCorrection(PosteriorEstimate inner, double alpha)
      : inner_(std::move(inner)), alpha_(alpha) {}

  ProbVec predict(std::span<const double> x) const override {
    return clip_renormalize(invert_symmetric(inner_(x), alpha_, inner_.classes()));
  }

 private:
  PosteriorEstimate inner_;
  double alpha_;
};

class BackwardCorrection final : public PosteriorModel {
 public:
  BackwardCorrection(PosteriorEstimate inner, std::vector<double> inverse)
      : inner_(std::move(inner)), inverse_(std::move(inverse)) {}

  ProbVec predict(std::span<const double> x) const override {
    const ProbVec q = inner_(x);
    const std::size_t k = q.size();
    ProbVec p(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      if (q[i] == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) p[j] += q[i] * inverse_[i * k + j];
    }
    return clip_renormalize(std::move(p));
  }

 private:
  PosteriorEstimate inner_;
  std::vector<double> inverse_;
};

}  // namespace detail

/// Inverts a known symmetric channel on every output of `est`.
inline PosteriorEstimate correct_known_symmetric(const PosteriorEstimate& est, double alpha,
                                                 std::size_t k) {
  if (k != est.classes()) throw ValidationError("K does not match the estimator");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (alpha >= breakdown_threshold(k)) {
    throw SingularChannelError("known-symmetric correction needs alpha < (K-1)/K = " +
                               format_number(breakdown_threshold(k)) + ", got " +
                               format_number(alpha));
  }
  EstimatorInfo info = est.info();
  info.family += "+known-symmetric";
  info.hyperparameters += (info.hyperparameters.empty() ? "" : ", ") +
                          std::string("alpha=") + format_number(alpha);
  return PosteriorEstimate(std::make_shared<detail::SymmetricCorrection>(est, alpha), k, est.dim(),
                           std::move(info));
}

/// Right-multiplies every output of `est` by A^-1.
inline PosteriorEstimate correct_backward(const PosteriorEstimate& est, const TransitionMatrix& a) {
  if (a.k() != est.classes()) throw ValidationError("channel K does not match the estimator");
  auto inv = inverse(a);
  EstimatorInfo info = est.info();
  info.family += "+backward";
  return PosteriorEstimate(std::make_shared<detail::BackwardCorrection>(est, std::move(inv)),
                           a.k(), est.dim(), std::move(info));
}

/// Applies the chosen correction for channel `a`. KnownSymmetric requires
/// a symmetric channel.
inline PosteriorEstimate apply_mitigation(const PosteriorEstimate& est, Mitigation mode,
                                          const TransitionMatrix& a) {
  switch (mode) {
    case Mitigation::None: return est;
    case Mitigation::KnownSymmetric:
      if (a.kind() != ChannelKind::Symmetric) {
        throw ValidationError("known-symmetric mitigation needs a symmetric channel");
      }
      return correct_known_symmetric(est, a.alpha(), a.k());
    case Mitigation::Backward: return correct_backward(est, a);
  }
  return est;
}

}  // namespace labelnoise
