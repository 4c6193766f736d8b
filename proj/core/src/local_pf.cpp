#include "microfrac/local_pf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "microfrac/errors.hpp"

namespace microfrac {

namespace {

constexpr int kBracketIntervals = 32;
constexpr int kMaxNewtonIterations = 100;
constexpr double kRootTolerance = 1e-12;

void check_inputs(double psi_plus, double d_value, double phi_old, double alpha) {
  if (!(psi_plus >= 0.0) || !std::isfinite(psi_plus)) {
    std::ostringstream msg;
    msg << "local solve: driving energy " << psi_plus << " is negative or not finite";
    throw LocalSolveError(msg.str());
  }
  if (!(phi_old >= 0.0 && phi_old <= 1.0)) {
    std::ostringstream msg;
    msg << "local solve: previous phase-field " << phi_old << " outside [0, 1]";
    throw LocalSolveError(msg.str());
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw LocalSolveError("local solve: alpha must be positive");
  if (!std::isfinite(d_value)) throw LocalSolveError("local solve: micromorphic value is not finite");
}

double residual_derivative(double phi, double psi_plus, const FractureModel& model, double alpha) {
  return degradation(phi, model).d2 * psi_plus +
         model.dissipation_scale() * dissipation(phi, model).d2 + alpha;
}

// Maps the unconstrained root onto [phi_old, 1].
PointState clamp_root(double root, double phi_old) {
  PointState s;
  s.phi_old = phi_old;
  if (root < phi_old) {
    s.phi = phi_old;
    s.clamped = Clamp::Lower;
  } else if (root > 1.0) {
    s.phi = 1.0;
    s.clamped = Clamp::Upper;
  } else {
    s.phi = root;
    s.clamped = Clamp::Interior;
  }
  return s;
}

PointState solve_quasi_brittle(double psi_plus, double d_value, double phi_old,
                               const FractureModel& model, double alpha) {
  const auto residual = [&](double phi) {
    return local_residual(phi, psi_plus, d_value, model, alpha);
  };

  PointState s;
  s.phi_old = phi_old;

  const double r_old = residual(phi_old);
  if (r_old > 0.0) {
    s.phi = phi_old;
    s.clamped = Clamp::Lower;
    return s;
  }
  if (r_old == 0.0) {
    s.phi = phi_old;
    s.clamped = Clamp::Interior;
    return s;
  }

  // First sign change of the residual on a uniform scan of [phi_old, 1].
  double lo = phi_old;
  double hi = phi_old;
  double r_hi = r_old;
  bool bracketed = false;
  for (int k = 1; k <= kBracketIntervals; ++k) {
    hi = (k == kBracketIntervals) ? 1.0 : phi_old + (1.0 - phi_old) * k / kBracketIntervals;
    r_hi = residual(hi);
    if (r_hi >= 0.0) {
      bracketed = true;
      break;
    }
    lo = hi;
  }
  if (!bracketed) {
    s.phi = 1.0;
    s.clamped = Clamp::Upper;
    return s;
  }
  if (r_hi == 0.0) {
    s.phi = hi;
    s.clamped = Clamp::Interior;
    return s;
  }

  double x = std::clamp(std::max(phi_old, d_value), lo, hi);
  if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
  double r = residual(x);
  for (int it = 0; it < kMaxNewtonIterations; ++it) {
    if (r < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    const double jac = residual_derivative(x, psi_plus, model, alpha);
    double next = (jac > 0.0) ? x - r / jac : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    r = residual(x);
    if (r == 0.0 || step < kRootTolerance || hi - lo < kRootTolerance) {
      s.phi = x;
      s.clamped = Clamp::Interior;
      return s;
    }
  }

  std::ostringstream msg;
  msg.precision(6);
  msg << "quasi-brittle local solve did not converge in " << kMaxNewtonIterations
      << " iterations: phi = " << x << ", residual = " << r << ", bracket = [" << lo << ", " << hi
      << "], psi+ = " << psi_plus << ", d = " << d_value << ", phi_old = " << phi_old;
  throw LocalSolveError(msg.str());
}

}  // namespace

std::string_view to_string(Clamp clamp) noexcept {
  switch (clamp) {
    case Clamp::Lower: return "Lower";
    case Clamp::Interior: return "Interior";
    case Clamp::Upper: return "Upper";
  }
  return "?";
}

double local_residual(double phi, double psi_plus, double d_value, const FractureModel& model,
                      double alpha) {
  return degradation(phi, model).d1 * psi_plus +
         model.dissipation_scale() * dissipation(phi, model).d1 + alpha * (phi - d_value);
}

PointState solve_local(double psi_plus, double d_value, double phi_old, const FractureModel& model,
                       double alpha) {
  check_inputs(psi_plus, d_value, phi_old, alpha);
  PointState s;
  switch (model.kind) {
    case ModelKind::AT1: {
      const double root = (2.0 * psi_plus + alpha * d_value - 3.0 * model.Gc / (8.0 * model.l)) /
                          (2.0 * psi_plus + alpha);
      s = clamp_root(root, phi_old);
      break;
    }
    case ModelKind::AT2: {
      const double root =
          (2.0 * psi_plus + alpha * d_value) / (2.0 * psi_plus + alpha + model.Gc / model.l);
      s = clamp_root(root, phi_old);
      break;
    }
    case ModelKind::QuasiBrittle:
      s = solve_quasi_brittle(psi_plus, d_value, phi_old, model, alpha);
      break;
  }
  s.d_local = d_value;
  s.d_hat = d_value;
  s.psi_plus = psi_plus;
  return s;
}

double solve_local_extrapolated(double psi_plus, double d_hat, double phi_old,
                                const FractureModel& model, double alpha) {
  return solve_local(psi_plus, d_hat, phi_old, model, alpha).phi;
}

Sensitivities sensitivities(const PointState& state, const FractureModel& model, double alpha) {
  if (state.clamped != Clamp::Interior) return {};
  const double jac = residual_derivative(state.phi, state.psi_plus, model, alpha);
  if (!(jac > 0.0)) {
    std::ostringstream msg;
    msg << "local phase-field equation lost solvability: dR/dphi = " << jac << " at phi = "
        << state.phi << ", psi+ = " << state.psi_plus;
    throw LocalSolveError(msg.str());
  }
  const double g1 = degradation(state.phi, model).d1;
  return {-g1 / jac, alpha / jac};
}

std::vector<double> extrapolate_d(std::span<const double> d_prev, std::span<const double> d_curr,
                                  double ratio) {
  if (d_prev.size() != d_curr.size()) {
    throw InternalError("extrapolate_d: vector lengths differ (" + std::to_string(d_prev.size()) +
                        " vs " + std::to_string(d_curr.size()) + ")");
  }
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
    throw InternalError("extrapolate_d: step ratio must be non-negative");
  }
  std::vector<double> out(d_curr.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = d_curr[i] + ratio * (d_curr[i] - d_prev[i]);
  }
  return out;
}

}  // namespace microfrac
