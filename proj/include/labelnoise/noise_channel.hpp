#pragma once

// Label-noise transition matrices: construction, validation, sampling and the
// exact posterior transforms q = p A and its inverse.

#include <cmath>
#include <cstddef>
#include <istream>
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

/// |det| at or below this is treated as singular.
inline constexpr double kSingularDeterminant = 1e-12;
/// Row-sum tolerance for user-supplied matrices.
inline constexpr double kGeneralRowSumTol = 1e-9;

enum class ChannelKind { Symmetric, Shift, Asymmetric, General };

inline const char* to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::Symmetric: return "symmetric";
    case ChannelKind::Shift: return "shift";
    case ChannelKind::Asymmetric: return "asymmetric";
    case ChannelKind::General: return "general";
  }
  return "unknown";
}

namespace detail {

// Square row-major matrix helpers. Gaussian elimination with partial pivoting.
inline double determinant(std::vector<double> a, std::size_t n) {
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    }
    if (a[pivot * n + col] == 0.0) return 0.0;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[pivot * n + c], a[col * n + c]);
      det = -det;
    }
    const double diag = a[col * n + col];
    det *= diag;
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / diag;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
    }
  }
  return det;
}

inline std::vector<double> inverse(std::vector<double> a, std::size_t n) {
  std::vector<double> inv(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    }
    if (a[pivot * n + col] == 0.0) throw SingularChannelError("matrix is singular");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(a[pivot * n + c], a[col * n + c]);
        std::swap(inv[pivot * n + c], inv[col * n + c]);
      }
    }
    const double diag = a[col * n + col];
    for (std::size_t c = 0; c < n; ++c) {
      a[col * n + c] /= diag;
      inv[col * n + c] /= diag;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        a[r * n + c] -= f * a[col * n + c];
        inv[r * n + c] -= f * inv[col * n + c];
      }
    }
  }
  return inv;
}

inline void require_class_count(std::size_t k) {
  if (k < 2) throw ValidationError("class count must be at least 2, got " + std::to_string(k));
}

inline void require_probability(double alpha, const char* name) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError(std::string(name) + " must lie in [0, 1], got " + format_number(alpha));
  }
}

}  // namespace detail

/// K x K row-stochastic matrix; entry (i, j) = P[Z = j | Y = i], 0-based.
///
/// Immutable after construction. Use the build_* functions to create one.
class TransitionMatrix {
 public:
  std::size_t k() const { return k_; }
  double operator()(std::size_t i, std::size_t j) const { return rows_[i * k_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(rows_).subspan(i * k_, k_);
  }
  const std::vector<double>& data() const { return rows_; }

  ChannelKind kind() const { return kind_; }
  /// Noise level for parametric channels (for asymmetric: class-1 flip rate).
  double alpha() const { return alpha_; }
  /// Class-2 flip rate of a binary asymmetric channel; NaN otherwise.
  double beta() const { return beta_; }

  std::string describe() const {
    std::string s = to_string(kind_);
    if (kind_ == ChannelKind::General) return s + "(K=" + std::to_string(k_) + ")";
    s += "(K=" + std::to_string(k_) + ", alpha=" + format_number(alpha_);
    if (kind_ == ChannelKind::Asymmetric) s += ", beta=" + format_number(beta_);
    return s + ")";
  }

  friend bool operator==(const TransitionMatrix& a, const TransitionMatrix& b) {
    return a.k_ == b.k_ && a.rows_ == b.rows_;
  }

 private:
  TransitionMatrix(std::size_t k, std::vector<double> rows, ChannelKind kind, double alpha,
                   double beta)
      : k_(k), rows_(std::move(rows)), kind_(kind), alpha_(alpha), beta_(beta) {}

  friend TransitionMatrix build_symmetric(std::size_t, double);
  friend TransitionMatrix build_shift(std::size_t, double);
  friend TransitionMatrix build_binary(double, double);
  friend TransitionMatrix build_general(const std::vector<std::vector<double>>&);

  std::size_t k_;
  std::vector<double> rows_;
  ChannelKind kind_;
  double alpha_;
  double beta_;
};

/// 1 - alpha on the diagonal, alpha / (k - 1) elsewhere.
inline TransitionMatrix build_symmetric(std::size_t k, double alpha) {
  detail::require_class_count(k);
  detail::require_probability(alpha, "alpha");
  // At the threshold every entry is 1/k; 1 - alpha and alpha/(k-1) can
  // differ in the last bit there, which would leak the clean argmax.
  if (alpha == static_cast<double>(k - 1) / static_cast<double>(k)) {
    return TransitionMatrix(k, std::vector<double>(k * k, 1.0 / static_cast<double>(k)),
                            ChannelKind::Symmetric, alpha, std::nan(""));
  }
  const double off = alpha / static_cast<double>(k - 1);
  std::vector<double> rows(k * k, off);
  for (std::size_t i = 0; i < k; ++i) rows[i * k + i] = 1.0 - alpha;
  return TransitionMatrix(k, std::move(rows), ChannelKind::Symmetric, alpha,
                          std::nan(""));
}

/// Class i keeps its label with probability 1 - alpha and moves to
/// (i + 1) mod k otherwise.
inline TransitionMatrix build_shift(std::size_t k, double alpha) {
  detail::require_class_count(k);
  detail::require_probability(alpha, "alpha");
  std::vector<double> rows(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    rows[i * k + i] = 1.0 - alpha;
    rows[i * k + (i + 1) % k] += alpha;
  }
  return TransitionMatrix(k, std::move(rows), ChannelKind::Shift, alpha, std::nan(""));
}

/// Binary channel: class 1 flips with probability alpha, class 2 with beta.
inline TransitionMatrix build_binary(double alpha, double beta) {
  detail::require_probability(alpha, "alpha");
  detail::require_probability(beta, "beta");
  return TransitionMatrix(2, {1.0 - alpha, alpha, beta, 1.0 - beta}, ChannelKind::Asymmetric,
                          alpha, beta);
}

/// Validates an arbitrary square row-stochastic matrix. Error messages name
/// the offending row 1-based.
inline TransitionMatrix build_general(const std::vector<std::vector<double>>& rows) {
  const std::size_t k = rows.size();
  detail::require_class_count(k);
  std::vector<double> flat;
  flat.reserve(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::string where = "row " + std::to_string(i + 1);
    if (rows[i].size() != k) {
      throw ValidationError(where + " has " + std::to_string(rows[i].size()) +
                            " entries; matrix must be square (" + std::to_string(k) + ")");
    }
    double sum = 0.0;
    for (double v : rows[i]) {
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw ValidationError(where + " has entry " + format_number(v) + " outside [0, 1]");
      }
      sum += v;
      flat.push_back(v);
    }
    if (std::abs(sum - 1.0) > kGeneralRowSumTol) {
      throw ValidationError(where + " sums to " + format_short(sum) + ", expected 1");
    }
  }
  return TransitionMatrix(k, std::move(flat), ChannelKind::General, std::nan(""),
                          std::nan(""));
}

inline TransitionMatrix identity_channel(std::size_t k) { return build_symmetric(k, 0.0); }

/// Largest symmetric noise level that keeps the Bayes decision: (k - 1) / k.
inline double breakdown_threshold(std::size_t k) {
  detail::require_class_count(k);
  return static_cast<double>(k - 1) / static_cast<double>(k);
}

/// Row vector times matrix: q_j = sum_i p_i A_ij.
inline ProbVec apply_to_posterior(std::span<const double> p, const TransitionMatrix& a) {
  if (p.size() != a.k()) {
    throw ValidationError("posterior has " + std::to_string(p.size()) + " entries, channel has K=" +
                          std::to_string(a.k()));
  }
  require_simplex(p, "posterior");
  const std::size_t k = a.k();
  ProbVec q(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    const auto row = a.row(i);
    for (std::size_t j = 0; j < k; ++j) q[j] += pi * row[j];
  }
  return q;
}

/// Exact inverse of the symmetric channel:
/// p_j = (q_j - alpha/(k-1)) / (1 - alpha - alpha/(k-1)).
/// The result may leave the simplex when q is not an exact image of one.
inline ProbVec invert_symmetric(std::span<const double> q, double alpha, std::size_t k) {
  detail::require_class_count(k);
  detail::require_probability(alpha, "alpha");
  if (alpha >= breakdown_threshold(k)) {
    throw SingularChannelError("symmetric channel with alpha=" + format_number(alpha) +
                               " is singular for K=" + std::to_string(k) +
                               " (threshold " + format_number(breakdown_threshold(k)) + ")");
  }
  if (q.size() != k) throw ValidationError("posterior size does not match K");
  require_simplex(q, "noisy posterior");
  const double off = alpha / static_cast<double>(k - 1);
  const double scale = 1.0 - alpha - off;
  ProbVec p(k);
  for (std::size_t j = 0; j < k; ++j) p[j] = (q[j] - off) / scale;
  return p;
}

inline double determinant(const TransitionMatrix& a) { return detail::determinant(a.data(), a.k()); }

struct InvertibilityCheck {
  bool invertible;
  double determinant;
};

inline InvertibilityCheck is_invertible(const TransitionMatrix& a) {
  const double det = determinant(a);
  return {std::abs(det) > kSingularDeterminant, det};
}

/// Row-major inverse of A. Throws SingularChannelError when |det| <= 1e-12.
inline std::vector<double> inverse(const TransitionMatrix& a) {
  const auto check = is_invertible(a);
  if (!check.invertible) {
    throw SingularChannelError("channel " + a.describe() + " is singular (|det| = " +
                               format_number(std::abs(check.determinant)) + ")");
  }
  return detail::inverse(a.data(), a.k());
}

/// Draws each noisy label independently from row labels[i] of A by inverse
/// CDF over columns in index order. Labels are 0-based.
inline std::vector<std::size_t> corrupt_labels(std::span<const std::size_t> labels,
                                               const TransitionMatrix& a, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= a.k()) {
      throw ValidationError("label " + std::to_string(labels[i] + 1) + " at position " +
                            std::to_string(i + 1) + " outside [1, " + std::to_string(a.k()) + "]");
    }
    out.push_back(sample_categorical(a.row(labels[i]), rng.uniform()));
  }
  return out;
}

/// Text format: a line with K, then K lines of K whitespace-separated
/// decimals. Blank lines and '#' comments are skipped.
inline TransitionMatrix read_transition_matrix(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(0, "empty matrix file");
  std::size_t k = 0;
  {
    std::istringstream ss(line);
    long long value = 0;
    std::string extra;
    if (!(ss >> value) || (ss >> extra) || value < 2) {
      throw ParseError(line_no, "expected class count K >= 2");
    }
    k = static_cast<std::size_t>(value);
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < k; ++i) {
    if (!next_line()) throw ParseError(line_no, "expected " + std::to_string(k) + " matrix rows");
    std::vector<double> row;
    std::istringstream ss(line);
    std::string token;
    while (ss >> token) {
      const auto v = parse_double(token);
      if (!v) throw ParseError(line_no, "not a number: '" + token + "'");
      row.push_back(*v);
    }
    if (row.size() != k) {
      throw ParseError(line_no, "expected " + std::to_string(k) + " entries, got " +
                                    std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
    try {
      // validate each row with its own line number
      double sum = 0.0;
      for (double v : rows.back()) {
        if (v < 0.0 || v > 1.0) throw ValidationError("entry outside [0, 1]");
        sum += v;
      }
      if (std::abs(sum - 1.0) > kGeneralRowSumTol) {
        throw ValidationError("row sums to " + format_short(sum) + ", expected 1");
      }
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (next_line()) throw ParseError(line_no, "unexpected trailing content");
  return build_general(rows);
}

inline void write_transition_matrix(std::ostream& out, const TransitionMatrix& a) {
  out << a.k() << '\n';
  for (std::size_t i = 0; i < a.k(); ++i) {
    for (std::size_t j = 0; j < a.k(); ++j) {
      if (j) out << ' ';
      out << format_number(a(i, j));
    }
    out << '\n';
  }
}

}  // namespace labelnoise
