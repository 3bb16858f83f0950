#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace netgof {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// An ordered pair of vertex indices. Undirected networks keep i < j.
struct Pair {
  int i = 0;
  int j = 0;

  friend auto operator<=>(const Pair&, const Pair&) = default;
  friend bool operator==(const Pair&, const Pair&) = default;
};

inline Pair make_undirected(int a, int b) { return a < b ? Pair{a, b} : Pair{b, a}; }

inline std::string to_string(const Pair& p) {
  return "(" + std::to_string(p.i) + "," + std::to_string(p.j) + ")";
}

/// Half-open time interval [start, end).
struct Interval {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  bool contains(double t) const { return start <= t && t < end; }
  bool operator==(const Interval&) const = default;
};

// Error hierarchy. The CLI maps these onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct SimulationError : NumericError {
  using NumericError::NumericError;
};
struct NoDataInWindow : NumericError {
  using NumericError::NumericError;
};
struct NonConvergence : NumericError {
  NonConvergence(const std::string& what, Vec last) : NumericError(what), last_iterate(std::move(last)) {}
  Vec last_iterate;
};
struct TestError : NumericError {
  using NumericError::NumericError;
};
struct DegenerateVariance : TestError {
  using TestError::TestError;
};

}  // namespace netgof
