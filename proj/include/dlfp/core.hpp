#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlfp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::size_t;
using IndexSet = std::vector<Index>;

/// Raised for degenerate set data (zero normal, nonpositive radius, ...).
class InvalidSetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A caller-supplied subgradient oracle broke its contract.
class OracleContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class InvalidControlError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Test-infrastructure failure: a reference method ran out of budget.
class OracleFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidProblemError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionMismatchError(std::string(what) + ": dimension " + std::to_string(a.size()) +
                                 " vs " + std::to_string(b.size()));
  }
}

inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace dlfp
