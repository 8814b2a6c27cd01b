#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace robrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Rows are states (or state-action pairs); row-major keeps each row contiguous
// for categorical sampling and feature lookups.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Invalid user input: bad shapes, out-of-range parameters, broken invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not deliver its postcondition.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace robrl
