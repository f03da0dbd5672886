#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace labelnoise {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: probabilities out of range, wrong shapes, bad files.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A noise channel that cannot be inverted (symmetric alpha at or above
/// (K-1)/K, or |det A| <= 1e-12).
class SingularChannelError : public Error {
 public:
  using Error::Error;
};

/// Query outside the domain of an operation, e.g. a posterior lookup at a
/// point that is not in the support of a discrete distribution.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Training diverged.
class TrainingError : public Error {
 public:
  TrainingError(std::size_t epoch, std::size_t batch, const std::string& what)
      : Error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}

  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

/// Config or text-file parse failure. line() is 1-based, 0 when unknown.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace labelnoise
