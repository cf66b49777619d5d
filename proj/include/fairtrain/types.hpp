#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fairtrain {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Engine used for every random draw in the toolkit.
using Rng = std::mt19937_64;

/// Raised when array dimensions disagree with a network or problem layout.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised on malformed CSV input; carries the 1-based data row (0 for header).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

/// Raised for invalid data-level requests (empty cells, bad split fractions).
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an optimizer cannot continue (too many failed subproblems, empty output set).
class OptimizerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fairtrain
