#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "microfrac/assembly.hpp"
#include "microfrac/driver_io.hpp"
#include "microfrac/solver.hpp"

namespace acceptance {

using namespace microfrac;

/// Called before each Newton step with the constraints and extrapolated field.
using PreStep = std::function<void(int step, const State&, const std::vector<DirichletConstraint>&,
                                   const std::vector<double>& d_hat)>;
/// Called after each converged step; returning false stops the run.
using PostStep = std::function<bool(const StepRecord&, const State&, const std::vector<PointState>&)>;

struct CaseRun {
  std::vector<StepRecord> series;
  State state;
  std::vector<PointState> points;
  bool failed = false;
  std::string failure;
  double seconds = 0.0;
};

/// Owns the mesh and assembler of one configured case.
class Driver {
 public:
  explicit Driver(CaseConfig config);

  const CaseConfig& config() const { return config_; }
  const Mesh& mesh() const { return mesh_; }
  const Assembler& assembler() const { return *assembler_; }

  CaseRun run(const std::vector<double>& increments, const PreStep& pre = {},
              const PostStep& post = {}) const;

 private:
  CaseConfig config_;
  Mesh mesh_;
  std::unique_ptr<Assembler> assembler_;
};

/// Coarse SENT used by the beta studies: uniform h = 0.02, l = 0.03.
CaseConfig coarse_sent(double beta);
std::vector<double> coarse_sent_schedule();

/// Element centroid.
Eigen::Vector2d centroid(const Mesh& mesh, Index e);

/// Reaction per unit prescribed displacement of an undamaged linear elastic
/// solve, assembled here from the plane-strain law without core kernels.
double elastic_slope(const CaseConfig& config, const Mesh& mesh);

}  // namespace acceptance
