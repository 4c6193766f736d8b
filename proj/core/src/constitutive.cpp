#include "microfrac/constitutive.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "microfrac/errors.hpp"

namespace microfrac {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void check_phi(double phi, const char* what) {
  if (!(phi >= 0.0 && phi <= 1.0)) {
    std::ostringstream msg;
    msg << what << ": phase-field " << phi << " outside [0, 1]";
    throw LocalSolveError(msg.str());
  }
}

Voigt6 voigt_identity() {
  Voigt6 i;
  i << 1.0, 1.0, 1.0, 0.0, 0.0, 0.0;
  return i;
}

}  // namespace

ElasticParams ElasticParams::from_young_poisson(double E0, double nu) {
  if (!(E0 > 0.0)) throw ConfigError("Young's modulus must be positive");
  if (!(nu > -1.0 && nu < 0.5)) throw ConfigError("Poisson ratio must lie in (-1, 0.5)");
  ElasticParams p;
  p.E0 = E0;
  p.nu = nu;
  p.K = E0 / (3.0 * (1.0 - 2.0 * nu));
  p.mu = E0 / (2.0 * (1.0 + nu));
  return p;
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::AT1: return "AT1";
    case ModelKind::AT2: return "AT2";
    case ModelKind::QuasiBrittle: return "QuasiBrittle";
  }
  return "?";
}

std::string_view to_string(Softening softening) noexcept {
  switch (softening) {
    case Softening::Linear: return "Linear";
    case Softening::Exponential: return "Exponential";
    case Softening::Cornelissen: return "Cornelissen";
  }
  return "?";
}

ModelKind model_kind_from_string(std::string_view name) {
  const std::string s = lowercase(name);
  if (s == "at1") return ModelKind::AT1;
  if (s == "at2") return ModelKind::AT2;
  if (s == "quasibrittle" || s == "quasi-brittle" || s == "quasi_brittle") {
    return ModelKind::QuasiBrittle;
  }
  throw ConfigError("unknown fracture model '" + std::string(name) +
                    "' (expected AT1, AT2, QuasiBrittle)");
}

Softening softening_from_string(std::string_view name) {
  const std::string s = lowercase(name);
  if (s == "linear") return Softening::Linear;
  if (s == "exponential") return Softening::Exponential;
  if (s == "cornelissen") return Softening::Cornelissen;
  throw ConfigError("unknown softening law '" + std::string(name) +
                    "' (expected Linear, Exponential, Cornelissen)");
}

SofteningShape softening_shape(Softening softening) {
  switch (softening) {
    case Softening::Linear: return {2.0, -0.5, 0.0};
    case Softening::Exponential: return {2.5, std::pow(2.0, 5.0 / 3.0) - 3.0, 0.0};
    case Softening::Cornelissen: return {2.0, 1.3868, 0.6567};
  }
  throw InternalError("unhandled softening law");
}

FractureModel FractureModel::at1(double Gc, double l) {
  if (!(Gc > 0.0) || !(l > 0.0)) throw ConfigError("Gc and l must be positive");
  FractureModel m;
  m.kind = ModelKind::AT1;
  m.Gc = Gc;
  m.l = l;
  m.c_w = 8.0 / 3.0;
  return m;
}

FractureModel FractureModel::at2(double Gc, double l) {
  if (!(Gc > 0.0) || !(l > 0.0)) throw ConfigError("Gc and l must be positive");
  FractureModel m;
  m.kind = ModelKind::AT2;
  m.Gc = Gc;
  m.l = l;
  m.c_w = 2.0;
  return m;
}

FractureModel FractureModel::quasi_brittle(const ElasticParams& elas, double Gc, double l,
                                           double ft, Softening softening) {
  FractureModel m;
  m.kind = ModelKind::QuasiBrittle;
  m.Gc = Gc;
  m.l = l;
  m.c_w = std::numbers::pi;
  m.softening = softening;
  m.ft = ft;
  m.a1 = compute_a1(elas, Gc, l, ft);
  const SofteningShape shape = softening_shape(softening);
  m.p = shape.p;
  m.a2 = shape.a2;
  m.a3 = shape.a3;
  return m;
}

StrainState StrainState::from_voigt(const Voigt6& eps) {
  StrainState s;
  s.eps = eps;
  s.trace = eps(0) + eps(1) + eps(2);
  s.dev = eps;
  for (int i = 0; i < 3; ++i) s.dev(i) -= s.trace / 3.0;
  return s;
}

StrainState StrainState::from_plane(double eps_xx, double eps_yy, double gamma_xy) {
  Voigt6 e;
  e << eps_xx, eps_yy, 0.0, 0.0, 0.0, gamma_xy;
  return from_voigt(e);
}

SplitEnergies amor_split(const StrainState& eps, const ElasticParams& elas) {
  const double tr = eps.trace;
  const bool tensile = tr >= 0.0;
  const Voigt6& dev = eps.dev;

  // Tensor contraction dev:dev with engineering shears gamma = 2 eps_ij.
  const double dev_dev = dev.head<3>().squaredNorm() + 0.5 * dev.tail<3>().squaredNorm();

  SplitEnergies out;
  const double tr_plus = tensile ? tr : 0.0;
  const double tr_minus = tensile ? 0.0 : tr;
  out.psi_plus = 0.5 * elas.K * tr_plus * tr_plus + elas.mu * dev_dev;
  out.psi_minus = 0.5 * elas.K * tr_minus * tr_minus;

  const Voigt6 id = voigt_identity();
  // 2 mu dev as a stress: normal entries 2 mu dev_ii, shear entries mu gamma.
  Voigt6 dev_stress;
  dev_stress.head<3>() = 2.0 * elas.mu * dev.head<3>();
  dev_stress.tail<3>() = elas.mu * dev.tail<3>();
  out.sigma_plus = elas.K * tr_plus * id + dev_stress;
  out.sigma_minus = elas.K * tr_minus * id;
  return out;
}

const Matrix6& volumetric_projector() {
  static const Matrix6 p = [] {
    Matrix6 m = Matrix6::Zero();
    m.topLeftCorner<3, 3>().setOnes();
    return m;
  }();
  return p;
}

const Matrix6& deviatoric_projector() {
  static const Matrix6 p = [] {
    Matrix6 m = Matrix6::Zero();
    m.topLeftCorner<3, 3>().setConstant(-1.0 / 3.0);
    for (int i = 0; i < 3; ++i) m(i, i) = 2.0 / 3.0;
    for (int i = 3; i < 6; ++i) m(i, i) = 0.5;
    return m;
  }();
  return p;
}

Matrix6 elastic_tangent(const StrainState& eps, double phi_hat, const FractureModel& model,
                        const ElasticParams& elas, double residual) {
  const double g = degradation(phi_hat, model).value + residual;
  const bool tensile = eps.trace >= 0.0;
  Matrix6 d = g * (2.0 * elas.mu) * deviatoric_projector();
  if (tensile) {
    d += g * elas.K * volumetric_projector();
  } else {
    d += elas.K * volumetric_projector();
  }
  return d;
}

Matrix6 isotropic_stiffness(const ElasticParams& elas) {
  Matrix6 c = Matrix6::Zero();
  const double lambda = elas.lambda();
  c.topLeftCorner<3, 3>().setConstant(lambda);
  for (int i = 0; i < 3; ++i) c(i, i) = lambda + 2.0 * elas.mu;
  for (int i = 3; i < 6; ++i) c(i, i) = elas.mu;
  return c;
}

ScalarDerivatives degradation(double phi, const FractureModel& model) {
  check_phi(phi, "degradation");
  const double s = 1.0 - phi;
  if (model.kind != ModelKind::QuasiBrittle) return {s * s, -2.0 * s, 2.0};

  // g = N / Q with N = (1 - phi)^p and Q = N + a1 phi + a1 a2 phi^2 + a1 a2 a3 phi^3.
  const double p = model.p;
  const double a1 = model.a1;
  const double a12 = a1 * model.a2;
  const double a123 = a12 * model.a3;
  const double n0 = std::pow(s, p);
  const double n1 = -p * std::pow(s, p - 1.0);
  const double n2 = p * (p - 1.0) * std::pow(s, p - 2.0);
  const double q0 = n0 + a1 * phi + a12 * phi * phi + a123 * phi * phi * phi;
  const double q1 = n1 + a1 + 2.0 * a12 * phi + 3.0 * a123 * phi * phi;
  const double q2 = n2 + 2.0 * a12 + 6.0 * a123 * phi;

  const double g = n0 / q0;
  const double g1 = (n1 * q0 - n0 * q1) / (q0 * q0);
  const double g2 = (n2 * q0 - n0 * q2) / (q0 * q0) - 2.0 * q1 * g1 / q0;
  return {g, g1, g2};
}

ScalarDerivatives dissipation(double phi, const FractureModel& model) {
  check_phi(phi, "dissipation");
  switch (model.kind) {
    case ModelKind::AT1: return {phi, 1.0, 0.0};
    case ModelKind::AT2: return {phi * phi, 2.0 * phi, 2.0};
    case ModelKind::QuasiBrittle: return {2.0 * phi - phi * phi, 2.0 - 2.0 * phi, -2.0};
  }
  throw InternalError("unhandled fracture model");
}

double compute_a1(const ElasticParams& elas, double Gc, double l, double ft) {
  if (!(elas.E0 > 0.0 && Gc > 0.0 && l > 0.0 && ft > 0.0)) {
    throw ConfigError("a1 requires positive E0, Gc, l and ft");
  }
  return 4.0 * elas.E0 * Gc / (std::numbers::pi * l * ft * ft);
}

}  // namespace microfrac
