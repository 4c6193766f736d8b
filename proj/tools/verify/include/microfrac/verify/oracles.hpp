#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "microfrac/assembly.hpp"
#include "microfrac/constitutive.hpp"

// Reference implementations used only to check the solver. They are written
// from the model definitions directly and share no numerics with core.
namespace microfrac::verify {

/// 4 E0 Gc / (pi l ft^2).
double oracle_a1(double E0, double Gc, double l, double ft);

/// (p, a2, a3) of the softening laws, tabulated independently.
struct OracleShape {
  double p, a2, a3;
};
OracleShape oracle_shape(Softening softening);

/// Degradation value and slope. Quasi-brittle uses g = 1 / (1 + P(phi) / (1 - phi)^p).
double oracle_g(double phi, const FractureModel& model);
double oracle_dg(double phi, const FractureModel& model);
/// Slope of the local dissipation function.
double oracle_dw(double phi, const FractureModel& model);

double oracle_local_residual(double phi, double psi_plus, double d, const FractureModel& model,
                             double alpha);

/// Smallest KKT point of the local problem on [phi_old, 1]: phi_old if the
/// residual is non-negative there, 1 if it stays negative, otherwise the first
/// sign change on a fine scan refined by bisection to `tol`.
double oracle_local_phi(double psi_plus, double d, double phi_old, const FractureModel& model,
                        double alpha, double tol = 1e-13, int scan = 1024);

/// Central-difference derivative of a scalar function.
template <typename F>
double central_difference(F&& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Plane-strain stress from the isotropic law, (xx, yy, xy) with engineering shear.
Eigen::Vector3d oracle_plane_stress(double E0, double nu, double exx, double eyy, double gxy);

/// Smooth random state with tensile strains bounded away from zero trace
/// and micromorphic values in (0.1, 0.4). phi_old is zero.
State random_smooth_state(const Assembler& assembler, std::mt19937_64& rng, double strain_scale);

struct TangentError {
  double total = 0.0;     // whole vector
  double momentum = 0.0;  // u rows
  double micro = 0.0;     // d rows
  double worst() const;
};

/// Compares K v with central differences of the internal force along v.
/// Problem5 holds phi_hat fixed at the base state.
TangentError tangent_fd_error(const Assembler& assembler, const State& state,
                              std::span<const double> d_hat, const Eigen::VectorXd& direction,
                              double step);

/// Random direction scaled per block.
Eigen::VectorXd random_direction(const Assembler& assembler, std::mt19937_64& rng, double u_scale,
                                 double d_scale);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Local solves against the bisection oracle on random tuples.
CheckResult check_local_oracle(int samples, std::uint64_t seed);

/// Jacobian-vector products against finite differences on random smooth
/// states, both formulations.
CheckResult check_tangent_consistency(int states, std::uint64_t seed);

/// Energy/stress consistency, projector identities, degradation monotonicity
/// and the a1 values of the two concrete benchmarks.
CheckResult check_constitutive(std::uint64_t seed);

/// Fast oracle and property suite used by `microfrac verify`.
std::vector<CheckResult> run_verify_suite();

}  // namespace microfrac::verify
