#include "microfrac/assembly.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "microfrac/errors.hpp"

namespace microfrac {

namespace {

// Plane components (xx, yy, xy) inside the 3D Voigt layout.
constexpr std::array<int, 3> kPlane{0, 1, 5};

Eigen::Vector3d reduce_vector(const Voigt6& v) { return {v(kPlane[0]), v(kPlane[1]), v(kPlane[2])}; }

Eigen::Matrix3d reduce_matrix(const Matrix6& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r(i, j) = m(kPlane[i], kPlane[j]);
  }
  return r;
}

std::string element_context(const std::exception& e, Index element) {
  return std::string(e.what()) + " (element " + std::to_string(element) + ", centroid point)";
}

struct PointKinematics {
  StrainState strain;
  SplitEnergies split;
  double d_centroid;
  double d_hat_centroid;
};

PointKinematics evaluate_point(const ElementGeometry& geom, const ElementValues& v,
                               const MaterialSetup& material) {
  const Eigen::Vector3d eps = strain_operator(geom) * v.u;
  PointKinematics k;
  k.strain = StrainState::from_plane(eps(0), eps(1), eps(2));
  k.split = amor_split(k.strain, material.elastic);
  const Eigen::Vector3d n(geom.centroid_shape_values.data());
  k.d_centroid = n.dot(v.d);
  k.d_hat_centroid = n.dot(v.d_hat);
  return k;
}

// Blocks shared by both formulations: the micromorphic equation.
void micromorphic_blocks(const ElementGeometry& geom, const ElementValues& v,
                         const MaterialSetup& material, double scale, const PointKinematics& k,
                         const PointState& point, const Sensitivities& sens, ElementBlocks& out) {
  const double alpha = material.alpha;
  const double c = material.fracture.gradient_coefficient();
  const Eigen::Vector3d n(geom.centroid_shape_values.data());
  const GradientOperator bd = gradient_operator(geom);
  const StrainOperator bu = strain_operator(geom);
  const Eigen::Vector3d dphi_deps = sens.dphi_dpsi * reduce_vector(k.split.sigma_plus);

  out.K_du = -scale * alpha * n * (dphi_deps.transpose() * bu);
  out.K_dd = scale * (c * bd.transpose() * bd + alpha * (1.0 - sens.dphi_dd) * n * n.transpose());
  out.f_d = scale * (c * bd.transpose() * (bd * v.d) - alpha * (point.phi - k.d_centroid) * n);
}

}  // namespace

std::string_view to_string(Formulation f) noexcept {
  return f == Formulation::Problem4 ? "problem4" : "problem5";
}

Formulation formulation_from_string(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (s == "problem4" || s == "4") return Formulation::Problem4;
  if (s == "problem5" || s == "5") return Formulation::Problem5;
  throw ConfigError("unknown formulation '" + std::string(name) + "' (expected problem4 or problem5)");
}

State State::zero(const Mesh& mesh) {
  State s;
  s.u = Eigen::VectorXd::Zero(2 * mesh.node_count());
  s.d = Eigen::VectorXd::Zero(mesh.node_count());
  s.phi_old.assign(static_cast<std::size_t>(mesh.element_count()), 0.0);
  return s;
}

StrainOperator strain_operator(const ElementGeometry& geom) {
  StrainOperator b = StrainOperator::Zero();
  for (int i = 0; i < 3; ++i) {
    const double dx = geom.shape_grads[i].x();
    const double dy = geom.shape_grads[i].y();
    b(0, 2 * i) = dx;
    b(1, 2 * i + 1) = dy;
    b(2, 2 * i) = dy;
    b(2, 2 * i + 1) = dx;
  }
  return b;
}

GradientOperator gradient_operator(const ElementGeometry& geom) {
  GradientOperator b;
  for (int i = 0; i < 3; ++i) b.col(i) = geom.shape_grads[i];
  return b;
}

ElementBlocks element_blocks_problem5(const ElementGeometry& geom, const ElementValues& v,
                                      const MaterialSetup& material, double thickness,
                                      std::optional<double> frozen_phi_hat) {
  const double scale = geom.area * thickness;
  const PointKinematics k = evaluate_point(geom, v, material);
  const FractureModel& model = material.fracture;

  ElementBlocks out;
  out.phi_hat = frozen_phi_hat ? *frozen_phi_hat
                               : solve_local_extrapolated(k.split.psi_plus, k.d_hat_centroid,
                                                          v.phi_old, model, material.alpha);
  out.point = solve_local(k.split.psi_plus, k.d_centroid, v.phi_old, model, material.alpha);
  out.point.d_hat = k.d_hat_centroid;
  const Sensitivities sens = sensitivities(out.point, model, material.alpha);

  const StrainOperator bu = strain_operator(geom);
  const double k_res = material.residual_stiffness;
  const Eigen::Matrix3d d =
      reduce_matrix(elastic_tangent(k.strain, out.phi_hat, model, material.elastic, k_res));
  const double g_hat = degradation(out.phi_hat, model).value + k_res;
  const Eigen::Vector3d stress = reduce_vector(g_hat * k.split.sigma_plus + k.split.sigma_minus);

  out.K_uu = scale * bu.transpose() * d * bu;
  out.f_u = scale * bu.transpose() * stress;
  micromorphic_blocks(geom, v, material, scale, k, out.point, sens, out);
  return out;
}

ElementBlocks element_blocks_problem4(const ElementGeometry& geom, const ElementValues& v,
                                      const MaterialSetup& material, double thickness) {
  const double scale = geom.area * thickness;
  const PointKinematics k = evaluate_point(geom, v, material);
  const FractureModel& model = material.fracture;

  ElementBlocks out;
  out.point = solve_local(k.split.psi_plus, k.d_centroid, v.phi_old, model, material.alpha);
  out.point.d_hat = k.d_centroid;
  out.phi_hat = out.point.phi;
  const Sensitivities sens = sensitivities(out.point, model, material.alpha);

  const StrainOperator bu = strain_operator(geom);
  const Eigen::Vector3d n(geom.centroid_shape_values.data());
  const ScalarDerivatives g = degradation(out.point.phi, model);
  const Eigen::Vector3d sigma_plus = reduce_vector(k.split.sigma_plus);
  const Eigen::Vector3d dphi_deps = sens.dphi_dpsi * sigma_plus;
  const double k_res = material.residual_stiffness;
  const Eigen::Matrix3d d =
      reduce_matrix(elastic_tangent(k.strain, out.point.phi, model, material.elastic, k_res));
  const Eigen::Matrix3d tangent = d + g.d1 * sigma_plus * dphi_deps.transpose();
  const Eigen::Vector3d stress =
      reduce_vector((g.value + k_res) * k.split.sigma_plus + k.split.sigma_minus);

  out.K_uu = scale * bu.transpose() * tangent * bu;
  out.K_ud = scale * bu.transpose() * (g.d1 * sens.dphi_dd * sigma_plus) * n.transpose();
  out.f_u = scale * bu.transpose() * stress;
  micromorphic_blocks(geom, v, material, scale, k, out.point, sens, out);
  return out;
}

// ---------------------------------------------------------------------------

double ConstrainedSystem::free_norm() const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < rhs.size(); ++i) {
    if (!fixed[static_cast<std::size_t>(i)]) sum += rhs(i) * rhs(i);
  }
  return std::sqrt(sum);
}

ConstrainedSystem apply_dirichlet(const AssembledSystem& system,
                                  std::span<const DirichletConstraint> constraints,
                                  bool first_iteration) {
  const Eigen::Index n = system.K.rows();
  std::map<Index, double> prescribed;
  for (const DirichletConstraint& c : constraints) {
    if (c.dof < 0 || c.dof >= n) {
      throw ConfigError("Dirichlet constraint on DOF " + std::to_string(c.dof) + " out of range");
    }
    const auto [it, inserted] = prescribed.emplace(c.dof, c.increment);
    if (!inserted && it->second != c.increment) {
      std::ostringstream msg;
      msg << "conflicting Dirichlet constraints on DOF " << c.dof << ": " << it->second << " vs "
          << c.increment;
      throw ConfigError(msg.str());
    }
  }

  ConstrainedSystem out;
  out.fixed.assign(static_cast<std::size_t>(n), 0);
  Eigen::VectorXd values = Eigen::VectorXd::Zero(n);
  for (const auto& [dof, inc] : prescribed) {
    out.fixed[static_cast<std::size_t>(dof)] = 1;
    values(dof) = first_iteration ? inc : 0.0;
  }

  out.rhs = system.residual - system.K * values;
  out.K = system.K;
  if (prescribed.empty()) return out;

  for (Eigen::Index col = 0; col < out.K.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(out.K, col); it; ++it) {
      if (out.fixed[static_cast<std::size_t>(it.row())] || out.fixed[static_cast<std::size_t>(col)]) {
        it.valueRef() = (it.row() == col) ? 1.0 : 0.0;
      }
    }
  }
  for (const auto& [dof, inc] : prescribed) {
    out.rhs(dof) = values(dof);
    // Constrained DOFs without a diagonal entry in the pattern still need one.
    if (out.K.coeff(dof, dof) != 1.0) out.K.coeffRef(dof, dof) = 1.0;
  }
  return out;
}

// ---------------------------------------------------------------------------

int default_thread_count() {
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MICROFRAC_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) threads = std::min(threads, cap);
  }
  return threads;
}

Assembler::Assembler(const Mesh& mesh, MaterialSetup material, Formulation formulation)
    : mesh_(&mesh),
      material_(material),
      formulation_(formulation),
      geometries_(element_geometries(mesh)),
      threads_(default_thread_count()) {
  if (!(material_.alpha > 0.0)) throw ConfigError("interaction parameter alpha must be positive");

  const Index ndof = dof_count();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.element_count()) * 81);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto dofs = element_dofs(e);
    for (Index r : dofs) {
      for (Index c : dofs) triplets.emplace_back(r, c, 1.0);
    }
  }
  pattern_.resize(ndof, ndof);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  // Offsets of every element entry in the compressed value array.
  const auto* outer = pattern_.outerIndexPtr();
  const auto* inner = pattern_.innerIndexPtr();
  value_slots_.resize(static_cast<std::size_t>(mesh.element_count()));
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto dofs = element_dofs(e);
    auto& slots = value_slots_[static_cast<std::size_t>(e)];
    for (int j = 0; j < 9; ++j) {
      const auto* first = inner + outer[dofs[j]];
      const auto* last = inner + outer[dofs[j] + 1];
      for (int i = 0; i < 9; ++i) {
        const auto* pos = std::lower_bound(first, last, static_cast<int>(dofs[i]));
        slots[j * 9 + i] = pos - inner;
      }
    }
  }
}

void Assembler::set_threads(int threads) { threads_ = std::max(1, threads); }

std::array<Index, 9> Assembler::element_dofs(Index element) const {
  const auto& el = mesh_->elements[static_cast<std::size_t>(element)];
  return {u_dof(el[0], 0), u_dof(el[0], 1), u_dof(el[1], 0), u_dof(el[1], 1),
          u_dof(el[2], 0), u_dof(el[2], 1), d_dof(el[0]),    d_dof(el[1]),
          d_dof(el[2])};
}

Eigen::VectorXd Assembler::pack(const State& state) const {
  Eigen::VectorXd x(dof_count());
  x.head(2 * node_count()) = state.u;
  x.tail(node_count()) = state.d;
  return x;
}

void Assembler::unpack(const Eigen::VectorXd& x, State& state) const {
  state.u = x.head(2 * node_count());
  state.d = x.tail(node_count());
}

ElementValues Assembler::gather(Index element, const State& state,
                                std::span<const double> d_hat) const {
  const auto& el = mesh_->elements[static_cast<std::size_t>(element)];
  ElementValues v;
  for (int i = 0; i < 3; ++i) {
    v.u(2 * i) = state.u(2 * el[i]);
    v.u(2 * i + 1) = state.u(2 * el[i] + 1);
    v.d(i) = state.d(el[i]);
    v.d_hat(i) = d_hat.empty() ? v.d(i) : d_hat[static_cast<std::size_t>(el[i])];
  }
  v.phi_old = state.phi_old[static_cast<std::size_t>(element)];
  return v;
}

ElementBlocks Assembler::element_blocks(Index element, const State& state,
                                        std::span<const double> d_hat,
                                        std::optional<double> frozen_phi_hat) const {
  const ElementValues v = gather(element, state, d_hat);
  const ElementGeometry& geom = geometries_[static_cast<std::size_t>(element)];
  try {
    if (formulation_ == Formulation::Problem4) {
      return element_blocks_problem4(geom, v, material_, mesh_->thickness);
    }
    return element_blocks_problem5(geom, v, material_, mesh_->thickness, frozen_phi_hat);
  } catch (const LocalSolveError& e) {
    throw LocalSolveError(element_context(e, element));
  }
}

AssembledSystem Assembler::assemble(const State& state, std::span<const double> d_hat,
                                    std::span<const double> frozen_phi_hat) const {
  const Index ne = mesh_->element_count();
  if (state.u.size() != 2 * node_count() || state.d.size() != node_count() ||
      static_cast<Index>(state.phi_old.size()) != ne) {
    throw InternalError("state vector sizes do not match the mesh");
  }
  if (!d_hat.empty() && static_cast<Index>(d_hat.size()) != node_count()) {
    throw InternalError("extrapolated micromorphic vector has the wrong length");
  }
  if (!frozen_phi_hat.empty() && static_cast<Index>(frozen_phi_hat.size()) != ne) {
    throw InternalError("frozen phi_hat vector has the wrong length");
  }

  std::vector<ElementBlocks> blocks(static_cast<std::size_t>(ne));
  const auto work = [&](Index begin, Index end) {
    for (Index e = begin; e < end; ++e) {
      std::optional<double> frozen;
      if (!frozen_phi_hat.empty()) frozen = frozen_phi_hat[static_cast<std::size_t>(e)];
      blocks[static_cast<std::size_t>(e)] = element_blocks(e, state, d_hat, frozen);
    }
  };

  const int nthreads = static_cast<int>(std::min<Index>(threads_, std::max<Index>(1, ne / 256)));
  if (nthreads <= 1) {
    work(0, ne);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nthreads));
    const Index chunk = (ne + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      pool.emplace_back([&, t] {
        try {
          work(t * chunk, std::min(ne, (t + 1) * chunk));
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  // Serial scatter in element order keeps the sums deterministic.
  AssembledSystem sys;
  sys.K = pattern_;
  double* values = sys.K.valuePtr();
  std::fill(values, values + sys.K.nonZeros(), 0.0);
  sys.internal_force = Eigen::VectorXd::Zero(dof_count());
  sys.points.resize(static_cast<std::size_t>(ne));
  sys.phi_hat.resize(static_cast<std::size_t>(ne));

  Eigen::Matrix<double, 9, 9> ke;
  Eigen::Matrix<double, 9, 1> fe;
  for (Index e = 0; e < ne; ++e) {
    const ElementBlocks& b = blocks[static_cast<std::size_t>(e)];
    ke.topLeftCorner<6, 6>() = b.K_uu;
    ke.topRightCorner<6, 3>() = b.K_ud;
    ke.bottomLeftCorner<3, 6>() = b.K_du;
    ke.bottomRightCorner<3, 3>() = b.K_dd;
    fe.head<6>() = b.f_u;
    fe.tail<3>() = b.f_d;

    const auto& slots = value_slots_[static_cast<std::size_t>(e)];
    for (int j = 0; j < 9; ++j) {
      for (int i = 0; i < 9; ++i) values[slots[j * 9 + i]] += ke(i, j);
    }
    const auto dofs = element_dofs(e);
    for (int i = 0; i < 9; ++i) sys.internal_force(dofs[i]) += fe(i);
    sys.points[static_cast<std::size_t>(e)] = b.point;
    sys.phi_hat[static_cast<std::size_t>(e)] = b.phi_hat;
  }
  sys.residual = -sys.internal_force;
  return sys;
}

double Assembler::reaction_force(const Eigen::VectorXd& internal_force, std::string_view node_set,
                                 int direction) const {
  if (direction != 0 && direction != 1) throw InternalError("reaction direction must be 0 or 1");
  const auto& ids = mesh_->node_set(node_set);
  if (ids.empty()) throw MeshError("node set '" + std::string(node_set) + "' is empty");
  double sum = 0.0;
  for (Index n : ids) sum += internal_force(u_dof(n, direction));
  return sum;
}

}  // namespace microfrac
