#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "microfrac/constitutive.hpp"

namespace microfrac {

/// Which bound of [phi_old, 1] is active at a point.
enum class Clamp { Lower, Interior, Upper };

std::string_view to_string(Clamp clamp) noexcept;

/// Integration-point phase-field state.
struct PointState {
  double phi = 0.0;
  double phi_old = 0.0;
  double d_local = 0.0;
  double d_hat = 0.0;
  double psi_plus = 0.0;
  Clamp clamped = Clamp::Interior;
};

/// Residual of the pointwise stationarity condition
///   g'(phi) psi+ + Gc/(c_w l) w'(phi) + alpha (phi - d).
double local_residual(double phi, double psi_plus, double d_value, const FractureModel& model,
                      double alpha);

/// Pointwise phase-field under the irreversibility bound phi >= phi_old.
///
/// AT1/AT2 use the closed-form root. The quasi-brittle root is the smallest
/// root in [phi_old, 1] of `local_residual`, bracketed on 32 subintervals
/// and polished with safeguarded Newton. Throws LocalSolveError on
/// non-convergence or invalid input.
PointState solve_local(double psi_plus, double d_value, double phi_old, const FractureModel& model,
                       double alpha);

/// Same equation driven by the extrapolated micromorphic value; the result
/// only enters the momentum balance.
double solve_local_extrapolated(double psi_plus, double d_hat, double phi_old,
                                const FractureModel& model, double alpha);

struct Sensitivities {
  double dphi_dpsi = 0.0;
  double dphi_dd = 0.0;
};

/// Implicit derivatives of phi w.r.t. psi+ and d. Zero when a bound is
/// active. Throws LocalSolveError if the local Jacobian is not positive.
Sensitivities sensitivities(const PointState& state, const FractureModel& model, double alpha);

/// d_curr + ratio (d_curr - d_prev), componentwise.
std::vector<double> extrapolate_d(std::span<const double> d_prev, std::span<const double> d_curr,
                                  double ratio);

}  // namespace microfrac
