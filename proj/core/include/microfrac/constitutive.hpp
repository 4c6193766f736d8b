#pragma once

#include <string_view>

#include <Eigen/Core>

namespace microfrac {

/// 3D Voigt vector (xx, yy, zz, yz, xz, xy). Strain vectors carry engineering
/// shears (gamma = 2 eps_ij); stress vectors carry tensor shears.
using Voigt6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

struct ElasticParams {
  double E0 = 0.0;  // [MPa]
  double nu = 0.0;
  double K = 0.0;   // bulk modulus [MPa]
  double mu = 0.0;  // shear modulus [MPa]

  /// Throws ConfigError for E0 <= 0 or nu outside (-1, 0.5).
  static ElasticParams from_young_poisson(double E0, double nu);

  double lambda() const { return K - 2.0 * mu / 3.0; }
};

enum class ModelKind { AT1, AT2, QuasiBrittle };
enum class Softening { Linear, Exponential, Cornelissen };

std::string_view to_string(ModelKind kind) noexcept;
std::string_view to_string(Softening softening) noexcept;
ModelKind model_kind_from_string(std::string_view name);
Softening softening_from_string(std::string_view name);

/// Shape parameters (p, a2, a3) of the quasi-brittle traction-separation laws.
struct SofteningShape {
  double p;
  double a2;
  double a3;
};
SofteningShape softening_shape(Softening softening);

struct FractureModel {
  ModelKind kind = ModelKind::AT2;
  double Gc = 0.0;   // [N/mm]
  double l = 0.0;    // [mm]
  double c_w = 2.0;
  // Quasi-brittle only.
  Softening softening = Softening::Cornelissen;
  double p = 2.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double ft = 0.0;  // [MPa]

  static FractureModel at1(double Gc, double l);
  static FractureModel at2(double Gc, double l);
  static FractureModel quasi_brittle(const ElasticParams& elas, double Gc, double l, double ft,
                                     Softening softening);

  /// Gc / (c_w l), the prefactor of the local dissipation w(phi).
  double dissipation_scale() const { return Gc / (c_w * l); }
  /// 2 Gc l / c_w, the gradient coefficient of the micromorphic equation.
  double gradient_coefficient() const { return 2.0 * Gc * l / c_w; }
};

/// Plane strain embedded in the 3D Voigt layout: eps_zz = gamma_yz = gamma_xz = 0.
struct StrainState {
  Voigt6 eps = Voigt6::Zero();
  double trace = 0.0;
  Voigt6 dev = Voigt6::Zero();  // engineering shears, like eps

  static StrainState from_voigt(const Voigt6& eps);
  static StrainState from_plane(double eps_xx, double eps_yy, double gamma_xy);
};

struct SplitEnergies {
  double psi_plus = 0.0;   // [MPa]
  double psi_minus = 0.0;  // [MPa]
  Voigt6 sigma_plus = Voigt6::Zero();
  Voigt6 sigma_minus = Voigt6::Zero();
};

/// Volumetric/deviatoric split: positive volumetric plus deviatoric energy
/// drives fracture, negative volumetric energy is residual.
/// The zero trace belongs to the tensile branch.
SplitEnergies amor_split(const StrainState& eps, const ElasticParams& elas);

/// All-ones normal block.
const Matrix6& volumetric_projector();
/// Symmetric deviatoric projector; 1/2 on the shear diagonal for engineering
/// shear strains.
const Matrix6& deviatoric_projector();

/// g(phi_hat) (K H(tr) P_vol + 2 mu P_dev) + K H(-tr) P_vol. A non-zero
/// `residual` is added to g to keep fully broken material from losing all
/// stiffness.
Matrix6 elastic_tangent(const StrainState& eps, double phi_hat, const FractureModel& model,
                        const ElasticParams& elas, double residual = 0.0);

/// Isotropic Hooke matrix in (lambda, mu) form, engineering shear strains.
Matrix6 isotropic_stiffness(const ElasticParams& elas);

/// A scalar function with its first two derivatives.
struct ScalarDerivatives {
  double value;
  double d1;
  double d2;
};

/// Degradation function g and derivatives. Throws for phi outside [0, 1].
ScalarDerivatives degradation(double phi, const FractureModel& model);

/// Local dissipation w and derivatives. Throws for phi outside [0, 1].
ScalarDerivatives dissipation(double phi, const FractureModel& model);

/// 4 E0 Gc / (pi l ft^2).
double compute_a1(const ElasticParams& elas, double Gc, double l, double ft);

}  // namespace microfrac
