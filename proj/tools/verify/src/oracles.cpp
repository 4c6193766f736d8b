#include "microfrac/verify/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "microfrac/errors.hpp"
#include "microfrac/local_pf.hpp"
#include "microfrac/mesh.hpp"

namespace microfrac::verify {

namespace {

double oracle_cw(ModelKind kind) {
  switch (kind) {
    case ModelKind::AT1: return 8.0 / 3.0;
    case ModelKind::AT2: return 2.0;
    case ModelKind::QuasiBrittle: return std::numbers::pi;
  }
  return 0.0;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double oracle_a1(double E0, double Gc, double l, double ft) {
  return 4.0 * E0 * Gc / (std::numbers::pi * l * ft * ft);
}

OracleShape oracle_shape(Softening softening) {
  switch (softening) {
    case Softening::Linear: return {2.0, -0.5, 0.0};
    case Softening::Exponential: return {2.5, std::cbrt(32.0) - 3.0, 0.0};
    case Softening::Cornelissen: return {2.0, 1.3868, 0.6567};
  }
  return {0.0, 0.0, 0.0};
}

double oracle_g(double phi, const FractureModel& m) {
  if (m.kind != ModelKind::QuasiBrittle) return (1.0 - phi) * (1.0 - phi);
  if (phi >= 1.0) return 0.0;
  const double P = m.a1 * phi * (1.0 + m.a2 * phi * (1.0 + m.a3 * phi));
  return 1.0 / (1.0 + P / std::pow(1.0 - phi, m.p));
}

double oracle_dg(double phi, const FractureModel& m) {
  if (m.kind != ModelKind::QuasiBrittle) return -2.0 * (1.0 - phi);
  if (phi >= 1.0) return 0.0;
  const double s = 1.0 - phi;
  const double P = m.a1 * phi * (1.0 + m.a2 * phi * (1.0 + m.a3 * phi));
  const double dP = m.a1 * (1.0 + 2.0 * m.a2 * phi + 3.0 * m.a2 * m.a3 * phi * phi);
  const double h = P / std::pow(s, m.p);
  const double dh = dP / std::pow(s, m.p) + m.p * P / std::pow(s, m.p + 1.0);
  return -dh / ((1.0 + h) * (1.0 + h));
}

double oracle_dw(double phi, const FractureModel& m) {
  switch (m.kind) {
    case ModelKind::AT1: return 1.0;
    case ModelKind::AT2: return 2.0 * phi;
    case ModelKind::QuasiBrittle: return 2.0 * (1.0 - phi);
  }
  return 0.0;
}

double oracle_local_residual(double phi, double psi_plus, double d, const FractureModel& m,
                             double alpha) {
  return oracle_dg(phi, m) * psi_plus + m.Gc / (oracle_cw(m.kind) * m.l) * oracle_dw(phi, m) +
         alpha * (phi - d);
}

double oracle_local_phi(double psi_plus, double d, double phi_old, const FractureModel& m,
                        double alpha, double tol, int scan) {
  const auto R = [&](double x) { return oracle_local_residual(x, psi_plus, d, m, alpha); };
  if (R(phi_old) >= 0.0) return phi_old;
  double lo = phi_old;
  for (int k = 1; k <= scan; ++k) {
    const double hi = phi_old + (1.0 - phi_old) * k / scan;
    if (R(hi) >= 0.0) {
      double a = lo;
      double b = hi;
      while (b - a > tol) {
        const double mid = 0.5 * (a + b);
        if (R(mid) < 0.0) {
          a = mid;
        } else {
          b = mid;
        }
      }
      return 0.5 * (a + b);
    }
    lo = hi;
  }
  return 1.0;
}

Eigen::Vector3d oracle_plane_stress(double E0, double nu, double exx, double eyy, double gxy) {
  const double lambda = E0 * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E0 / (2.0 * (1.0 + nu));
  const double tr = exx + eyy;
  return {lambda * tr + 2.0 * mu * exx, lambda * tr + 2.0 * mu * eyy, mu * gxy};
}

State random_smooth_state(const Assembler& assembler, std::mt19937_64& rng, double strain_scale) {
  const Mesh& mesh = assembler.mesh();
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Point2& p : mesh.nodes) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const double L = std::max(xmax - xmin, ymax - ymin);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  // Mean strain with positive trace; the wave adds at most 20% of it.
  const double exx = strain_scale * (1.0 + 0.3 * U(rng));
  const double eyy = strain_scale * (1.0 + 0.3 * U(rng));
  const double gxy = strain_scale * 0.5 * U(rng);
  const double amp = 0.2 * strain_scale * L / (2.0 * std::numbers::pi) / 4.0;
  const double k = 2.0 * std::numbers::pi / L;
  const double p1 = phase(rng), p2 = phase(rng), p3 = phase(rng);
  const double tx = strain_scale * L * U(rng), ty = strain_scale * L * U(rng);

  State s = State::zero(mesh);
  for (Index n = 0; n < mesh.node_count(); ++n) {
    const double x = mesh.nodes[static_cast<std::size_t>(n)].x() - xmin;
    const double y = mesh.nodes[static_cast<std::size_t>(n)].y() - ymin;
    s.u(2 * n) = tx + exx * x + gxy * y + amp * std::sin(k * x + p1) * std::cos(k * y + p2);
    s.u(2 * n + 1) = ty + eyy * y + amp * std::cos(k * x + p2) * std::sin(k * y + p3);
    s.d(n) = 0.25 + 0.1 * std::sin(k * x + p3) * std::cos(k * y + p1);
  }
  return s;
}

double TangentError::worst() const { return std::max({total, momentum, micro}); }

Eigen::VectorXd random_direction(const Assembler& assembler, std::mt19937_64& rng, double u_scale,
                                 double d_scale) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Eigen::VectorXd v(assembler.dof_count());
  const Index nu = 2 * assembler.node_count();
  for (Index i = 0; i < v.size(); ++i) v(i) = U(rng) * (i < nu ? u_scale : d_scale);
  return v;
}

TangentError tangent_fd_error(const Assembler& assembler, const State& state,
                              std::span<const double> d_hat, const Eigen::VectorXd& direction,
                              double step) {
  const AssembledSystem base = assembler.assemble(state, d_hat);
  std::span<const double> frozen;
  if (assembler.formulation() == Formulation::Problem5) frozen = base.phi_hat;

  const Eigen::VectorXd x = assembler.pack(state);
  State plus = state, minus = state;
  assembler.unpack(x + step * direction, plus);
  assembler.unpack(x - step * direction, minus);
  const Eigen::VectorXd fp = assembler.assemble(plus, d_hat, frozen).internal_force;
  const Eigen::VectorXd fm = assembler.assemble(minus, d_hat, frozen).internal_force;
  const Eigen::VectorXd fd = (fp - fm) / (2.0 * step);
  const Eigen::VectorXd kv = base.K * direction;

  const Index nu = 2 * assembler.node_count();
  const Index nd = assembler.node_count();
  const auto rel = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double scale = std::max(a.norm(), b.norm());
    return scale > 0.0 ? (a - b).norm() / scale : 0.0;
  };
  TangentError e;
  e.total = rel(kv, fd);
  e.momentum = rel(kv.head(nu), fd.head(nu));
  e.micro = rel(kv.tail(nd), fd.tail(nd));
  return e;
}

// ---------------------------------------------------------------------------

CheckResult check_local_oracle(int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto log_uniform = [&](double lo, double hi) {
    return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * U(rng));
  };

  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int failures = 0;
  std::string first_failure;
  for (int i = 0; i < samples; ++i) {
    FractureModel model;
    const int family = i % 5;
    if (family == 0) {
      model = FractureModel::at1(log_uniform(0.1, 5.0), log_uniform(0.005, 2.0));
    } else if (family == 1) {
      model = FractureModel::at2(log_uniform(0.1, 5.0), log_uniform(0.005, 2.0));
    } else {
      const Softening soft = family == 2   ? Softening::Linear
                             : family == 3 ? Softening::Exponential
                                           : Softening::Cornelissen;
      const ElasticParams elas = ElasticParams::from_young_poisson(log_uniform(1.5e4, 4e4), 0.2);
      model = FractureModel::quasi_brittle(elas, log_uniform(0.05, 0.3), log_uniform(1.0, 20.0),
                                           log_uniform(1.5, 4.0), soft);
    }
    const double scale = model.Gc / model.l;
    const double alpha = log_uniform(1.0, 500.0) * scale;
    const double psi = (U(rng) < 0.05) ? 0.0 : log_uniform(1e-6, 20.0) * scale;
    const double d = U(rng);
    const double r = U(rng);
    const double phi_old = r < 0.3 ? 0.0 : (r > 0.95 ? 1.0 : U(rng));

    const double got = solve_local(psi, d, phi_old, model, alpha).phi;
    const double want = oracle_local_phi(psi, d, phi_old, model, alpha);
    const double err = std::abs(got - want);
    worst = std::max(worst, err);
    if (!(err <= 1e-8)) {
      if (failures == 0) {
        std::ostringstream s;
        s << " first mismatch: model " << to_string(model.kind) << " psi=" << psi << " d=" << d
          << " phi_old=" << phi_old << " got=" << got << " oracle=" << want;
        first_failure = s.str();
      }
      ++failures;
    }
  }
  const double elapsed = seconds_since(t0);
  CheckResult res;
  res.name = "local solve matches bisection oracle";
  res.pass = failures == 0 && elapsed < 5.0;
  res.detail = std::to_string(samples) + " tuples, max |diff| " + fmt(worst) + ", " +
               std::to_string(failures) + " mismatches, " + fmt(elapsed) + " s" + first_failure;
  return res;
}

CheckResult check_tangent_consistency(int states, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const Mesh mesh = generate_sent_mesh(0.05);
  const ElasticParams steel = ElasticParams::from_young_poisson(210000.0, 0.3);
  const ElasticParams concrete = ElasticParams::from_young_poisson(2e4, 0.18);

  struct Setup {
    MaterialSetup material;
    double strain;
  };
  std::vector<Setup> setups;
  {
    FractureModel m = FractureModel::at2(2.7, 0.015);
    setups.push_back({{steel, m, 100.0 * m.Gc / m.l}, 1e-2});
    m = FractureModel::at1(2.7, 0.015);
    setups.push_back({{steel, m, 100.0 * m.Gc / m.l}, 1e-2});
    m = FractureModel::quasi_brittle(concrete, 0.130, 10.0, 2.5, Softening::Cornelissen);
    setups.push_back({{concrete, m, 100.0 * m.Gc / m.l}, 2e-4});
    m = FractureModel::quasi_brittle(concrete, 0.130, 10.0, 2.5, Softening::Exponential);
    setups.push_back({{concrete, m, 100.0 * m.Gc / m.l}, 2e-4});
  }

  std::mt19937_64 rng(seed);
  double worst4 = 0.0, worst5 = 0.0;
  int checked = 0;
  for (Formulation f : {Formulation::Problem4, Formulation::Problem5}) {
    for (int i = 0; i < states; ++i) {
      const Setup& s = setups[static_cast<std::size_t>(i) % setups.size()];
      Assembler assembler(mesh, s.material, f);
      const State state = random_smooth_state(assembler, rng, s.strain);
      // Extrapolated field a little ahead of d.
      std::vector<double> d_hat(state.d.data(), state.d.data() + state.d.size());
      for (double& v : d_hat) v += 0.05;
      const Eigen::VectorXd dir = random_direction(assembler, rng, s.strain * 0.1, 0.05);
      const TangentError e = tangent_fd_error(assembler, state, d_hat, dir, 1e-4);
      (f == Formulation::Problem4 ? worst4 : worst5) =
          std::max(f == Formulation::Problem4 ? worst4 : worst5, e.worst());
      ++checked;
    }
  }
  const double elapsed = seconds_since(t0);
  CheckResult res;
  res.name = "global tangent matches finite differences";
  res.pass = worst4 < 1e-4 && worst5 < 1e-4 && elapsed < 60.0;
  res.detail = std::to_string(states) + " states per formulation on " +
               std::to_string(mesh.element_count()) + " elements, max rel err problem4 " +
               fmt(worst4) + ", problem5 " + fmt(worst5) + ", " + fmt(elapsed) + " s";
  return res;
}

CheckResult check_constitutive(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<std::string> problems;

  // Energies evaluated tensorially, independent of the Voigt kernel.
  const ElasticParams elas = ElasticParams::from_young_poisson(210000.0, 0.3);
  const auto energies = [&](const Voigt6& v) {
    Eigen::Matrix3d e;
    e << v(0), 0.5 * v(5), 0.5 * v(4), 0.5 * v(5), v(1), 0.5 * v(3), 0.5 * v(4), 0.5 * v(3), v(2);
    const double tr = e.trace();
    const Eigen::Matrix3d dev = e - tr / 3.0 * Eigen::Matrix3d::Identity();
    const double tp = std::max(tr, 0.0), tm = std::min(tr, 0.0);
    return std::pair{0.5 * elas.K * tp * tp + elas.mu * (dev.array() * dev.array()).sum(),
                     0.5 * elas.K * tm * tm};
  };

  double worst_fd = 0.0, worst_add = 0.0, worst_psi = 0.0;
  for (int i = 0; i < 200; ++i) {
    Voigt6 eps;
    for (int k = 0; k < 6; ++k) eps(k) = 1e-2 * U(rng);
    if (std::abs(eps(0) + eps(1) + eps(2)) < 1e-3) continue;
    const SplitEnergies split = amor_split(StrainState::from_voigt(eps), elas);
    const Voigt6 c_eps = isotropic_stiffness(elas) * eps;
    const double scale = c_eps.norm();
    const auto [pp, pm] = energies(eps);
    worst_psi = std::max({worst_psi, std::abs(pp - split.psi_plus) / std::max(pp, 1e-300),
                          std::abs(pm - split.psi_minus) / std::max(pm + pp, 1e-300)});
    for (int k = 0; k < 6; ++k) {
      const auto psi_k = [&](double x, bool plus) {
        Voigt6 e = eps;
        e(k) = x;
        const auto [a, b] = energies(e);
        return plus ? a : b;
      };
      const double dp = central_difference([&](double x) { return psi_k(x, true); }, eps(k), 1e-6);
      const double dm = central_difference([&](double x) { return psi_k(x, false); }, eps(k), 1e-6);
      worst_fd = std::max({worst_fd, std::abs(dp - split.sigma_plus(k)) / scale,
                           std::abs(dm - split.sigma_minus(k)) / scale});
    }
    worst_add = std::max(worst_add, (split.sigma_plus + split.sigma_minus - c_eps).norm() / scale);
  }
  if (!(worst_fd < 1e-5)) problems.push_back("stress/energy FD " + fmt(worst_fd));
  if (!(worst_add < 1e-12)) problems.push_back("stress additivity " + fmt(worst_add));
  if (!(worst_psi < 1e-12)) problems.push_back("energy values " + fmt(worst_psi));

  // Projector identities.
  const Matrix6& pdev = deviatoric_projector();
  const Matrix6& pvol = volumetric_projector();
  Voigt6 id;
  id << 1, 1, 1, 0, 0, 0;
  Matrix6 metric = Matrix6::Identity();
  for (int k = 3; k < 6; ++k) metric(k, k) = 2.0;
  const double idem_metric = (pdev * metric * pdev - pdev).cwiseAbs().maxCoeff();
  const Eigen::Matrix3d nn = pdev.topLeftCorner<3, 3>();
  const double idem_normal = (nn * nn - nn).cwiseAbs().maxCoeff();
  const double annihilate = (pdev * id).cwiseAbs().maxCoeff();
  double vol = 0.0;
  for (int i = 0; i < 20; ++i) {
    Voigt6 eps;
    for (int k = 0; k < 6; ++k) eps(k) = U(rng);
    vol = std::max(vol, (pvol * eps - (eps(0) + eps(1) + eps(2)) * id).cwiseAbs().maxCoeff());
  }
  double tangent_vs_stress = 0.0;
  {
    const FractureModel m = FractureModel::at2(2.7, 0.015);
    for (int i = 0; i < 50; ++i) {
      Voigt6 eps;
      eps << 1e-2 * U(rng), 1e-2 * U(rng), 0, 0, 0, 1e-2 * U(rng);
      const StrainState s = StrainState::from_voigt(eps);
      const double phi = 0.5 * (1.0 + U(rng));
      const SplitEnergies split = amor_split(s, elas);
      const double g = degradation(phi, m).value;
      const Voigt6 lhs = elastic_tangent(s, phi, m, elas) * eps;
      const Voigt6 rhs = g * split.sigma_plus + split.sigma_minus;
      tangent_vs_stress = std::max(tangent_vs_stress, (lhs - rhs).norm() / std::max(rhs.norm(), 1e-300));
    }
  }
  if (!(idem_metric < 1e-12)) problems.push_back("P_dev metric idempotence " + fmt(idem_metric));
  if (!(idem_normal < 1e-12)) problems.push_back("P_dev normal block idempotence " + fmt(idem_normal));
  if (!(annihilate < 1e-12)) problems.push_back("P_dev I != 0: " + fmt(annihilate));
  if (!(vol < 1e-12)) problems.push_back("P_vol trace identity " + fmt(vol));
  if (!(tangent_vs_stress < 1e-12)) problems.push_back("D eps vs stress " + fmt(tangent_vs_stress));

  // Degradation monotonicity and slope against the oracle.
  std::vector<FractureModel> models{FractureModel::at1(2.7, 0.015), FractureModel::at2(2.7, 0.015)};
  for (Softening s : {Softening::Linear, Softening::Exponential, Softening::Cornelissen}) {
    models.push_back(FractureModel::quasi_brittle(ElasticParams::from_young_poisson(2e4, 0.18), 0.130,
                                                  10.0, 2.5, s));
    models.push_back(FractureModel::quasi_brittle(ElasticParams::from_young_poisson(2e4, 0.2), 0.113,
                                                  2.5, 2.4, s));
  }
  double worst_slope = 0.0;
  for (const FractureModel& m : models) {
    double prev = degradation(0.0, m).value;
    bool monotone = std::abs(prev - 1.0) < 1e-15;
    for (int i = 1; i <= 1000; ++i) {
      const double phi = i / 1000.0;
      const ScalarDerivatives g = degradation(phi, m);
      monotone = monotone && g.value < prev;
      prev = g.value;
      const double want = oracle_dg(phi, m);
      worst_slope = std::max(worst_slope, std::abs(g.d1 - want) / std::max(1.0, std::abs(want)));
      if (std::abs(g.value - oracle_g(phi, m)) > 1e-12) monotone = false;
    }
    monotone = monotone && std::abs(prev) < 1e-15;
    if (!monotone) problems.push_back(std::string("g not monotone for ") + std::string(to_string(m.kind)));
    if (m.kind == ModelKind::QuasiBrittle) {
      const OracleShape sh = oracle_shape(m.softening);
      if (std::abs(sh.p - m.p) + std::abs(sh.a2 - m.a2) + std::abs(sh.a3 - m.a3) > 1e-12) {
        problems.push_back("softening parameters differ for " + std::string(to_string(m.softening)));
      }
      if (std::abs(degradation(0.0, m).d1 + m.a1) > 1e-9 * m.a1) problems.push_back("g'(0) != -a1");
    }
  }
  if (!(worst_slope < 1e-9)) problems.push_back("g' vs oracle " + fmt(worst_slope));

  // a1 of the two concrete benchmarks.
  const double a1_l = compute_a1(ElasticParams::from_young_poisson(2e4, 0.18), 0.130, 10.0, 2.5);
  const double a1_t = compute_a1(ElasticParams::from_young_poisson(2e4, 0.2), 0.113, 2.5, 2.4);
  if (std::abs(a1_l - 52.97) > 0.01 || std::abs(a1_l - oracle_a1(2e4, 0.130, 10.0, 2.5)) > 1e-12 * a1_l) {
    problems.push_back("a1 (L-panel) = " + std::to_string(a1_l));
  }
  if (std::abs(a1_t - 199.83) > 0.01 || std::abs(a1_t - oracle_a1(2e4, 0.113, 2.5, 2.4)) > 1e-12 * a1_t) {
    problems.push_back("a1 (TPB) = " + std::to_string(a1_t));
  }

  CheckResult res;
  res.name = "constitutive identities";
  res.pass = problems.empty();
  std::ostringstream d;
  d << "stress FD " << fmt(worst_fd) << ", projector " << fmt(std::max({idem_metric, idem_normal, annihilate, vol}))
    << ", a1 = " << std::fixed << std::setprecision(3) << a1_l << " / " << a1_t;
  for (const auto& p : problems) d << "; " << p;
  res.detail = d.str();
  return res;
}

std::vector<CheckResult> run_verify_suite() {
  return {check_local_oracle(10000, 20240601), check_tangent_consistency(20, 7),
          check_constitutive(11)};
}

}  // namespace microfrac::verify
