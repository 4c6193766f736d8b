#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "microfrac/constitutive.hpp"
#include "microfrac/local_pf.hpp"
#include "microfrac/mesh.hpp"

namespace microfrac {

/// Discrete block structure. Problem4 couples the momentum balance to the
/// current phase-field with its full linearisation; Problem5 drives the
/// momentum balance with the phase-field obtained from the extrapolated
/// micromorphic variable.
enum class Formulation { Problem4, Problem5 };

std::string_view to_string(Formulation f) noexcept;
Formulation formulation_from_string(std::string_view name);

struct MaterialSetup {
  ElasticParams elastic;
  FractureModel fracture;
  double alpha = 0.0;  // interaction parameter [N/mm^2]
  /// Added to g in the momentum balance only.
  double residual_stiffness = 0.0;
};

/// Nodal unknowns plus the per-point phase-field history.
struct State {
  Eigen::VectorXd u;            // (u_x, u_y) per node [mm]
  Eigen::VectorXd d;            // one per node [-]
  std::vector<double> phi_old;  // one per element (centroid point) [-]
  int time_step = 0;
  double applied_displacement = 0.0;  // accumulated prescribed displacement [mm]

  static State zero(const Mesh& mesh);
};

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix66 = Eigen::Matrix<double, 6, 6>;
using Matrix63 = Eigen::Matrix<double, 6, 3>;
using Matrix36 = Eigen::Matrix<double, 3, 6>;
using StrainOperator = Eigen::Matrix<double, 3, 6>;    // (eps_xx, eps_yy, gamma_xy)
using GradientOperator = Eigen::Matrix<double, 2, 3>;

StrainOperator strain_operator(const ElementGeometry& geom);
GradientOperator gradient_operator(const ElementGeometry& geom);

/// Element-local unknowns.
struct ElementValues {
  Vector6 u = Vector6::Zero();
  Eigen::Vector3d d = Eigen::Vector3d::Zero();
  Eigen::Vector3d d_hat = Eigen::Vector3d::Zero();
  double phi_old = 0.0;
};

struct ElementBlocks {
  Matrix66 K_uu = Matrix66::Zero();
  Matrix63 K_ud = Matrix63::Zero();
  Matrix36 K_du = Matrix36::Zero();
  Eigen::Matrix3d K_dd = Eigen::Matrix3d::Zero();
  Vector6 f_u = Vector6::Zero();
  Eigen::Vector3d f_d = Eigen::Vector3d::Zero();
  PointState point;       // phase-field of the micromorphic equation
  double phi_hat = 0.0;   // phase-field seen by the momentum balance
};

/// Blocks with the momentum balance driven by phi_hat. phi_hat's dependence
/// on strain is not linearised into K_uu. `frozen_phi_hat` bypasses the
/// extrapolated local solve.
ElementBlocks element_blocks_problem5(const ElementGeometry& geom, const ElementValues& values,
                                      const MaterialSetup& material, double thickness,
                                      std::optional<double> frozen_phi_hat = std::nullopt);

/// Fully linearised blocks; the same phi enters both equations.
ElementBlocks element_blocks_problem4(const ElementGeometry& geom, const ElementValues& values,
                                      const MaterialSetup& material, double thickness);

struct AssembledSystem {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd residual;        // -f_int
  Eigen::VectorXd internal_force;  // f_int
  std::vector<PointState> points;
  std::vector<double> phi_hat;
};

struct DirichletConstraint {
  Index dof;
  double increment;
};

struct ConstrainedSystem {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd rhs;
  std::vector<char> fixed;

  /// Euclidean norm of the right-hand side over the free DOFs.
  double free_norm() const;
};

/// Row/column elimination. Constrained rows become identity rows whose
/// right-hand side is the prescribed increment in the first iteration of a
/// step and zero afterwards; the eliminated columns move to the right-hand
/// side. Throws ConfigError for conflicting duplicates.
ConstrainedSystem apply_dirichlet(const AssembledSystem& system,
                                  std::span<const DirichletConstraint> constraints,
                                  bool first_iteration);

/// Global assembly over a fixed mesh. DOF layout: all displacements
/// (u_x, u_y interleaved per node) followed by all micromorphic values.
class Assembler {
 public:
  Assembler(const Mesh& mesh, MaterialSetup material, Formulation formulation);

  const Mesh& mesh() const { return *mesh_; }
  const MaterialSetup& material() const { return material_; }
  Formulation formulation() const { return formulation_; }
  const std::vector<ElementGeometry>& geometries() const { return geometries_; }

  Index node_count() const { return mesh_->node_count(); }
  Index dof_count() const { return 3 * node_count(); }
  Index u_dof(Index node, int component) const { return 2 * node + component; }
  Index d_dof(Index node) const { return 2 * node_count() + node; }

  /// Packs (u, d) into one vector in the global DOF layout.
  Eigen::VectorXd pack(const State& state) const;
  void unpack(const Eigen::VectorXd& x, State& state) const;

  /// `d_hat` is ignored for Problem4. Non-empty `frozen_phi_hat` (one per
  /// element) replaces the extrapolated local solve for Problem5.
  AssembledSystem assemble(const State& state, std::span<const double> d_hat,
                           std::span<const double> frozen_phi_hat = {}) const;

  ElementBlocks element_blocks(Index element, const State& state, std::span<const double> d_hat,
                               std::optional<double> frozen_phi_hat = std::nullopt) const;

  /// Sum of internal-force components over a node set in one direction [N].
  double reaction_force(const Eigen::VectorXd& internal_force, std::string_view node_set,
                        int direction) const;

  /// Worker threads used for element computations (MICROFRAC_THREADS caps it).
  int threads() const { return threads_; }
  void set_threads(int threads);

 private:
  ElementValues gather(Index element, const State& state, std::span<const double> d_hat) const;
  std::array<Index, 9> element_dofs(Index element) const;

  const Mesh* mesh_;
  MaterialSetup material_;
  Formulation formulation_;
  std::vector<ElementGeometry> geometries_;
  Eigen::SparseMatrix<double> pattern_;
  std::vector<std::array<Index, 81>> value_slots_;
  int threads_ = 1;
};

/// Thread count from MICROFRAC_THREADS, defaulting to the hardware count.
int default_thread_count();

}  // namespace microfrac
