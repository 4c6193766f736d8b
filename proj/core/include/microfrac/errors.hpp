#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace microfrac {

/// Broad failure categories; the CLI maps each one to its own exit code.
enum class ErrorCategory {
  Mesh = 2,
  Config = 3,
  LocalSolve = 4,
  Convergence = 5,
  LinearSolver = 6,
  Io = 7,
  Internal = 8,
};

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class MeshError : public Error {
 public:
  explicit MeshError(const std::string& what) : Error(ErrorCategory::Mesh, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, what) {}
};

class LocalSolveError : public Error {
 public:
  explicit LocalSolveError(const std::string& what)
      : Error(ErrorCategory::LocalSolve, what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorCategory::Convergence, what) {}
};

class LinearSolverError : public Error {
 public:
  explicit LinearSolverError(const std::string& what)
      : Error(ErrorCategory::LinearSolver, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what)
      : Error(ErrorCategory::Internal, what) {}
};

}  // namespace microfrac
