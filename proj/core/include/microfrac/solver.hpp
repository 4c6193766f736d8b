#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "microfrac/assembly.hpp"
#include "microfrac/errors.hpp"

namespace microfrac {

enum class LinearSolverKind { IterativeGMRES, Direct };

std::string_view to_string(LinearSolverKind kind) noexcept;
LinearSolverKind linear_solver_from_string(std::string_view name);

struct GmresOptions {
  int restart = 50;
  int max_iters = 500;
  double tol = 1e-10;       // relative residual of the unscaled system
  double drop_tol = 1e-6;   // incomplete LU drop tolerance
  int fill_factor = 20;     // incomplete LU fill per row

  bool operator==(const GmresOptions&) const = default;
};

struct LoadSegment {
  int count = 0;
  double increment = 0.0;  // [mm]

  bool operator==(const LoadSegment&) const = default;
};

struct SolverConfig {
  double tol = 1e-3;
  int max_newton_iters = 25;
  Formulation mode = Formulation::Problem5;
  LinearSolverKind linear_solver = LinearSolverKind::IterativeGMRES;
  GmresOptions gmres;

  bool operator==(const SolverConfig&) const = default;
};

struct LinearSolveResult {
  Eigen::VectorXd x;
  LinearSolverKind used = LinearSolverKind::Direct;
  bool fell_back = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Solves K x = b. The system is symmetrically scaled by its diagonal before
/// factorisation. GMRES failures are retried once with the direct solver;
/// singular or non-finite results raise LinearSolverError.
LinearSolveResult linear_solve(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& b,
                               LinearSolverKind kind, const GmresOptions& gmres = {});

/// Force conjugate to the prescribed motion.
struct ReactionProbe {
  std::string node_set;
  int direction = 1;
  double sign = 1.0;  // +1 when the load acts in +direction
};

/// Prescribed-increment constraints for a given step increment.
using ConstraintBuilder = std::function<std::vector<DirichletConstraint>(double increment)>;

struct StepRecord {
  int step = 0;
  double increment = 0.0;
  double displacement = 0.0;  // accumulated prescribed displacement [mm]
  double load = 0.0;          // [N]
  int iterations = 0;
  double residual_ratio = 0.0;
  std::vector<double> ratio_history;
  int linear_fallbacks = 0;
};

struct NewtonResult {
  StepRecord record;
  std::vector<PointState> points;  // converged point states
  std::vector<double> phi_hat;
};

/// One load step. On convergence the state holds the new (u, d), phi_old is
/// overwritten by the converged phi and the step counters advance. Throws
/// ConvergenceError after `max_newton_iters` iterations without meeting the
/// residual-ratio test; the state is left at the last iterate in that case.
NewtonResult newton_step(State& state, const Assembler& assembler,
                         const std::vector<DirichletConstraint>& constraints,
                         std::span<const double> d_hat, double increment,
                         const ReactionProbe& probe, const SolverConfig& config);

/// History of the micromorphic field for the extrapolation of the next step.
class ExtrapolationHistory {
 public:
  explicit ExtrapolationHistory(const Eigen::VectorXd& d0);

  /// d_hat for a step of size `increment`.
  std::vector<double> predict(double increment) const;
  double ratio(double increment) const;
  void commit(const Eigen::VectorXd& d, double increment);

 private:
  std::vector<double> d_prev_;
  std::vector<double> d_curr_;
  double last_increment_ = 0.0;
  bool has_step_ = false;
};

struct SimulationResult {
  std::vector<StepRecord> series;
  State state;
  std::vector<PointState> points;
  std::vector<double> phi_hat;
  bool completed = false;
  ErrorCategory failure_category = ErrorCategory::Internal;
  std::string failure;
};

/// Called after every converged step.
using StepObserver =
    std::function<void(const StepRecord&, const State&, const std::vector<PointState>&)>;

/// Expands a schedule into individual increments.
std::vector<double> expand_schedule(const std::vector<LoadSegment>& schedule);

/// Runs the schedule from `initial`. A failing step stops the run and is
/// reported in the result; converged steps are kept.
SimulationResult run_load_schedule(const Assembler& assembler, State initial,
                                   const std::vector<double>& increments,
                                   const ConstraintBuilder& constraints, const ReactionProbe& probe,
                                   const SolverConfig& config, const StepObserver& observer = {});

}  // namespace microfrac
