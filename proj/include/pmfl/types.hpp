#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace pmfl {

// All arithmetic is 64-bit; the solver keeps a single scalar type throughout.
using Scalar = double;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Error taxonomy mirrored by the CLI exit codes (2 / 3 / 4).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pmfl
