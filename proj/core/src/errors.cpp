#include "microfrac/errors.hpp"

namespace microfrac {

std::string_view to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Mesh: return "mesh";
    case ErrorCategory::Config: return "config";
    case ErrorCategory::LocalSolve: return "local-solve";
    case ErrorCategory::Convergence: return "convergence";
    case ErrorCategory::LinearSolver: return "linear-solver";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Internal: return "internal";
  }
  return "unknown";
}

}  // namespace microfrac
