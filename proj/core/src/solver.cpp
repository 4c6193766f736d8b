#include "microfrac/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

namespace microfrac {

namespace {

// Relative residual above which a direct solution is treated as garbage.
constexpr double kDirectResidualLimit = 1e-6;
constexpr int kGmresRefinements = 3;
// Growth of a unit probe through the inverse of the unit-diagonal system. A
// floating body gives ~1e14 and more; broken but supported meshes stay far below.
constexpr double kSingularityLimit = 1e12;

// Fixed pseudo-random unit vector so that solves stay deterministic.
Eigen::VectorXd probe_vector(Eigen::Index n) {
  Eigen::VectorXd r(n);
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (Eigen::Index i = 0; i < n; ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    r(i) = static_cast<double>(state >> 11) * 0x1.0p-53 - 0.5;
  }
  return r.normalized();
}

template <typename Solve>
double inverse_growth(Eigen::Index n, Solve&& solve) {
  const Eigen::VectorXd z = solve(probe_vector(n));
  return z.allFinite() ? z.norm() : std::numeric_limits<double>::infinity();
}

double relative_residual(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& b) {
  const double bn = b.norm();
  const double rn = (K * x - b).norm();
  return bn > 0.0 ? rn / bn : rn;
}

Eigen::VectorXd diagonal_scaling(const Eigen::SparseMatrix<double>& K) {
  Eigen::VectorXd s = Eigen::VectorXd::Ones(K.rows());
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    const double a = std::abs(K.coeff(i, i));
    if (a > 0.0 && std::isfinite(a)) s(i) = 1.0 / std::sqrt(a);
  }
  return s;
}

LinearSolveResult solve_direct(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& b,
                               const Eigen::SparseMatrix<double>& scaled,
                               const Eigen::VectorXd& s) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(scaled);
  if (lu.info() != Eigen::Success) {
    throw LinearSolverError("direct factorisation failed (singular matrix?): " + lu.lastErrorMessage());
  }
  const double growth = inverse_growth(scaled.rows(), [&](const Eigen::VectorXd& r) {
    return Eigen::VectorXd(lu.solve(r));
  });
  if (!(growth <= kSingularityLimit)) {
    std::ostringstream msg;
    msg << "matrix is numerically singular (inverse growth " << growth
        << "); are rigid-body motions constrained?";
    throw LinearSolverError(msg.str());
  }
  const Eigen::VectorXd y = lu.solve(s.cwiseProduct(b));
  if (lu.info() != Eigen::Success) throw LinearSolverError("direct back-substitution failed");

  LinearSolveResult out;
  out.x = s.cwiseProduct(y);
  out.used = LinearSolverKind::Direct;
  out.relative_residual = relative_residual(K, out.x, b);
  if (!out.x.allFinite() || !(out.relative_residual <= kDirectResidualLimit)) {
    std::ostringstream msg;
    msg << "direct solve produced an unusable solution (relative residual "
        << out.relative_residual << "); the system is singular or nearly so";
    throw LinearSolverError(msg.str());
  }
  return out;
}

// Returns false when GMRES does not reach the tolerance.
bool solve_gmres(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& b,
                 const Eigen::SparseMatrix<double>& scaled, const Eigen::VectorXd& s,
                 const GmresOptions& opt, LinearSolveResult& out) {
  Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> gmres;
  gmres.preconditioner().setDroptol(opt.drop_tol);
  gmres.preconditioner().setFillfactor(opt.fill_factor);
  gmres.set_restart(opt.restart);
  gmres.setMaxIterations(opt.max_iters);
  gmres.setTolerance(opt.tol);
  gmres.compute(scaled);
  if (gmres.info() != Eigen::Success) return false;
  // A near-singular preconditioner hands the decision to the direct solver.
  const double growth = inverse_growth(scaled.rows(), [&](const Eigen::VectorXd& r) {
    return Eigen::VectorXd(gmres.preconditioner().solve(r));
  });
  if (!(growth <= kSingularityLimit)) return false;

  const Eigen::VectorXd sb = s.cwiseProduct(b);
  Eigen::VectorXd y = gmres.solve(sb);
  out.iterations = static_cast<int>(gmres.iterations());
  // The Krylov tolerance applies to the preconditioned residual; restart from
  // the current iterate until the true residual meets it.
  for (int k = 0; k < kGmresRefinements; ++k) {
    if (!y.allFinite()) return false;
    out.x = s.cwiseProduct(y);
    out.relative_residual = relative_residual(K, out.x, b);
    if (out.relative_residual <= opt.tol) {
      out.used = LinearSolverKind::IterativeGMRES;
      return true;
    }
    y = gmres.solveWithGuess(sb, y);
    out.iterations += static_cast<int>(gmres.iterations());
  }
  return false;
}

}  // namespace

std::string_view to_string(LinearSolverKind kind) noexcept {
  return kind == LinearSolverKind::Direct ? "direct" : "gmres";
}

LinearSolverKind linear_solver_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "direct") return LinearSolverKind::Direct;
  if (s == "gmres" || s == "iterativegmres" || s == "iterative") {
    return LinearSolverKind::IterativeGMRES;
  }
  throw ConfigError("unknown linear solver '" + std::string(name) + "' (expected gmres or direct)");
}

LinearSolveResult linear_solve(const Eigen::SparseMatrix<double>& K, const Eigen::VectorXd& b,
                               LinearSolverKind kind, const GmresOptions& gmres) {
  if (K.rows() != K.cols() || K.rows() != b.size()) {
    throw InternalError("linear_solve: dimension mismatch");
  }
  if (!b.allFinite()) throw LinearSolverError("linear_solve: right-hand side is not finite");
  if (b.norm() == 0.0) {
    LinearSolveResult out;
    out.x = Eigen::VectorXd::Zero(b.size());
    out.used = kind;
    return out;
  }

  const Eigen::VectorXd s = diagonal_scaling(K);
  Eigen::SparseMatrix<double> scaled = s.asDiagonal() * K * s.asDiagonal();
  scaled.makeCompressed();

  if (kind == LinearSolverKind::IterativeGMRES) {
    LinearSolveResult out;
    if (solve_gmres(K, b, scaled, s, gmres, out)) return out;
    LinearSolveResult direct = solve_direct(K, b, scaled, s);
    direct.fell_back = true;
    direct.iterations = out.iterations;
    return direct;
  }
  return solve_direct(K, b, scaled, s);
}

// ---------------------------------------------------------------------------

NewtonResult newton_step(State& state, const Assembler& assembler,
                         const std::vector<DirichletConstraint>& constraints,
                         std::span<const double> d_hat, double increment,
                         const ReactionProbe& probe, const SolverConfig& config) {
  if (!(config.tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (config.max_newton_iters < 1) throw ConfigError("solver.max_newton_iters must be >= 1");

  NewtonResult result;
  StepRecord& rec = result.record;
  rec.step = state.time_step + 1;
  rec.increment = increment;

  Eigen::VectorXd x = assembler.pack(state);
  double r1 = 0.0;
  for (int it = 1;; ++it) {
    AssembledSystem sys = assembler.assemble(state, d_hat);
    ConstrainedSystem cs = apply_dirichlet(sys, constraints, it == 1);
    const double rnorm = cs.free_norm();
    if (!std::isfinite(rnorm)) {
      throw ConvergenceError("step " + std::to_string(rec.step) + ": residual is not finite at iteration " +
                             std::to_string(it));
    }

    bool converged = false;
    double ratio = 0.0;
    if (it == 1) {
      r1 = rnorm;
      // A prescribed increment with no free coupling still has to be applied.
      if (r1 == 0.0) r1 = cs.rhs.norm();
      converged = (r1 == 0.0);
      ratio = converged ? 0.0 : 1.0;
    } else {
      ratio = rnorm / r1;
      converged = ratio < config.tol;
    }
    rec.ratio_history.push_back(ratio);

    if (converged) {
      rec.iterations = it;
      rec.residual_ratio = ratio;
      for (std::size_t e = 0; e < state.phi_old.size(); ++e) state.phi_old[e] = sys.points[e].phi;
      state.time_step += 1;
      state.applied_displacement += increment;
      rec.displacement = state.applied_displacement;
      rec.load = probe.sign * assembler.reaction_force(sys.internal_force, probe.node_set, probe.direction);
      result.points = std::move(sys.points);
      result.phi_hat = std::move(sys.phi_hat);
      return result;
    }
    if (it > config.max_newton_iters) {
      std::ostringstream msg;
      msg.precision(4);
      msg << "step " << rec.step << " did not converge in " << config.max_newton_iters
          << " iterations (residual ratio " << ratio << ", tol " << config.tol << ")";
      throw ConvergenceError(msg.str());
    }

    const LinearSolveResult lin = linear_solve(cs.K, cs.rhs, config.linear_solver, config.gmres);
    if (lin.fell_back) ++rec.linear_fallbacks;
    x += lin.x;
    assembler.unpack(x, state);
  }
}

// ---------------------------------------------------------------------------

ExtrapolationHistory::ExtrapolationHistory(const Eigen::VectorXd& d0)
    : d_prev_(d0.data(), d0.data() + d0.size()), d_curr_(d_prev_) {}

double ExtrapolationHistory::ratio(double increment) const {
  if (!has_step_ || last_increment_ == 0.0) return 0.0;
  return std::abs(increment) / std::abs(last_increment_);
}

std::vector<double> ExtrapolationHistory::predict(double increment) const {
  return extrapolate_d(d_prev_, d_curr_, ratio(increment));
}

void ExtrapolationHistory::commit(const Eigen::VectorXd& d, double increment) {
  d_prev_ = std::move(d_curr_);
  d_curr_.assign(d.data(), d.data() + d.size());
  last_increment_ = increment;
  has_step_ = true;
}

std::vector<double> expand_schedule(const std::vector<LoadSegment>& schedule) {
  std::vector<double> out;
  for (const LoadSegment& seg : schedule) {
    if (seg.count < 0) throw ConfigError("schedule segment count must be non-negative");
    out.insert(out.end(), static_cast<std::size_t>(seg.count), seg.increment);
  }
  return out;
}

SimulationResult run_load_schedule(const Assembler& assembler, State initial,
                                   const std::vector<double>& increments,
                                   const ConstraintBuilder& constraints, const ReactionProbe& probe,
                                   const SolverConfig& config, const StepObserver& observer) {
  SimulationResult result;
  result.state = std::move(initial);
  ExtrapolationHistory history(result.state.d);

  for (double inc : increments) {
    try {
      const std::vector<DirichletConstraint> bcs = constraints(inc);
      const std::vector<double> d_hat = history.predict(inc);
      NewtonResult step = newton_step(result.state, assembler, bcs, d_hat, inc, probe, config);
      history.commit(result.state.d, inc);
      result.series.push_back(step.record);
      result.points = std::move(step.points);
      result.phi_hat = std::move(step.phi_hat);
      if (observer) observer(result.series.back(), result.state, result.points);
    } catch (const Error& e) {
      result.failure_category = e.category();
      result.failure = e.what();
      return result;
    }
  }
  result.completed = true;
  return result;
}

}  // namespace microfrac
