#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace embalance {

/// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration, preset name or input file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A state became NaN/Inf or the step size collapsed (finite-time blow-up).
class NonFiniteState : public Error {
 public:
  NonFiniteState(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class StepLimitExceeded : public Error {
 public:
  StepLimitExceeded(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Matrix inversion refused: sigma_max / sigma_min exceeds the configured limit.
class IllConditioned : public Error {
 public:
  IllConditioned(const std::string& what, double condition, double node_time = 0.0)
      : Error(what), condition_(condition), node_time_(node_time) {}
  double condition() const noexcept { return condition_; }
  double node_time() const noexcept { return node_time_; }

 private:
  double condition_;
  double node_time_;
};

class UnstableA : public Error {
 public:
  UnstableA(const std::string& what, double max_real_part)
      : Error(what), max_real_part_(max_real_part) {}
  double max_real_part() const noexcept { return max_real_part_; }

 private:
  double max_real_part_;
};

class RankDeficient : public Error {
 public:
  RankDeficient(const std::string& what, std::size_t available, std::size_t requested)
      : Error(what), available_(available), requested_(requested) {}
  std::size_t available() const noexcept { return available_; }
  std::size_t requested() const noexcept { return requested_; }

 private:
  std::size_t available_;
  std::size_t requested_;
};

class ResidualFailure : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  using Error::Error;
};

class NotNilpotent : public Error {
 public:
  using Error::Error;
};

/// An exponent in the resistor law exceeded the double-precision guard.
class ExponentOverflow : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Error surfaced from a pipeline, tagged with the stage that failed.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& stage, const std::string& what, bool config_error)
      : Error(stage + ": " + what), stage_(stage), config_error_(config_error) {}
  const std::string& stage() const noexcept { return stage_; }
  bool config_error() const noexcept { return config_error_; }

 private:
  std::string stage_;
  bool config_error_;
};

}  // namespace embalance
