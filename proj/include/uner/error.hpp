#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uner {

// Invalid numeric argument (non-positive variance, probability outside [0,1]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Data that cannot support the requested computation: too few degrees of
// freedom, rank-deficient design, zero residual sum of squares.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical breakdown inside a sampler block (non-positive-definite system,
// degenerate inverse-gamma rate).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent or out-of-range configuration (chain lengths, prior
// hyperparameters, propriety gate, population specs).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t row, std::size_t column, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(row) + ":" + std::to_string(column) + ": " +
                           what),
        file_(std::move(file)),
        row_(row),
        column_(column) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string file_;
  std::size_t row_;
  std::size_t column_;
};

// A block failure inside a Gibbs sweep. Carries the sweep index and the block
// name so a long run can be diagnosed without re-running it.
class SamplerError : public NumericalError {
 public:
  SamplerError(std::size_t sweep, std::string block, const std::string& what)
      : NumericalError("sweep " + std::to_string(sweep) + ", block " + block + ": " + what),
        sweep_(sweep),
        block_(std::move(block)) {}

  std::size_t sweep() const noexcept { return sweep_; }
  const std::string& block() const noexcept { return block_; }

 private:
  std::size_t sweep_;
  std::string block_;
};

}  // namespace uner
