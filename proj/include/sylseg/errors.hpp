#ifndef SYLSEG_ERRORS_HPP
#define SYLSEG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sylseg {

/// Invalid arguments or data violating a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Two mask records tried to write the same loss-matrix cell.
class ConflictError : public std::runtime_error {
 public:
  ConflictError(int row, int col, double existing, double incoming)
      : std::runtime_error("conflicting writes to loss matrix cell (" + std::to_string(row) +
                           ", " + std::to_string(col) + "): " + std::to_string(existing) +
                           " vs " + std::to_string(incoming)),
        row(row),
        col(col) {}
  int row;
  int col;
};

/// Requested group count cannot cover the sequence under the max group length.
class InfeasibleError : public ValidationError {
 public:
  InfeasibleError(int k, int min_k, const std::string& what)
      : ValidationError(what), k(k), min_feasible_k(min_k) {}
  int k;
  int min_feasible_k;
};

/// Calibration target lies outside the achievable rate range.
class BracketError : public std::runtime_error {
 public:
  BracketError(double floor_hz, double ceiling_hz, double target_hz)
      : std::runtime_error("target rate " + std::to_string(target_hz) +
                           " Hz outside achievable bracket [" + std::to_string(floor_hz) +
                           ", " + std::to_string(ceiling_hz) + "] Hz"),
        floor_hz(floor_hz),
        ceiling_hz(ceiling_hz),
        target_hz(target_hz) {}
  double floor_hz;
  double ceiling_hz;
  double target_hz;
};

}  // namespace sylseg

#endif  // SYLSEG_ERRORS_HPP
