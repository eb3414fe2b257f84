#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irsa {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  Ok = 0,
  Validation = 2,
  Numerical = 3,
  Io = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode exit_code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

/// Invalid configuration or input specification.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ExitCode::Validation, what) {}
};

/// Argument outside the domain of an operation (empty part, overlap, K too large...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what)
      : Error(ExitCode::Validation, what) {}
};

/// Offline data does not line up with the design.
class AlignmentError : public Error {
 public:
  explicit AlignmentError(const std::string& what)
      : Error(ExitCode::Validation, what) {}
};

/// Requested problem size exceeds a hard resource guard.
class CapacityError : public Error {
 public:
  explicit CapacityError(const std::string& what)
      : Error(ExitCode::Validation, what) {}
};

/// Membership variance below the degeneracy threshold.
class DegenerateVariance : public Error {
 public:
  explicit DegenerateVariance(const std::string& what)
      : Error(ExitCode::Numerical, what) {}
};

/// No candidate partition satisfied the size constraint with a finite score.
class NoFeasiblePartition : public Error {
 public:
  explicit NoFeasiblePartition(const std::string& what)
      : Error(ExitCode::Numerical, what) {}
};

/// A model returned a non-finite output.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t row)
      : Error(ExitCode::Numerical, what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ExitCode::Io, what) {}
};

}  // namespace irsa
