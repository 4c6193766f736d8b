#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "microfrac/assembly.hpp"
#include "microfrac/constitutive.hpp"
#include "microfrac/mesh.hpp"
#include "microfrac/solver.hpp"

namespace microfrac {

struct MaterialInput {
  double E0 = 0.0;  // [MPa]
  double nu = 0.0;
  double Gc = 0.0;  // [N/mm]
  double l = 0.0;   // [mm]
  ModelKind model = ModelKind::AT2;
  Softening softening = Softening::Cornelissen;  // quasi-brittle only
  double ft = 0.0;                               // [MPa], quasi-brittle only
  double residual_stiffness = 1e-7;              // added to g in the momentum balance

  bool operator==(const MaterialInput&) const = default;
};

struct MeshInput {
  MeshParams params;
  std::string file;  // non-empty: load instead of generating

  bool operator==(const MeshInput&) const = default;
};

/// Node sets carrying homogeneous and prescribed displacement conditions.
struct BoundarySpec {
  std::vector<std::string> fixed;    // u_x = u_y = 0
  std::vector<std::string> fixed_x;  // u_x = 0
  std::vector<std::string> fixed_y;  // u_y = 0
  std::string load_set;
  int load_direction = 1;  // 0 = x, 1 = y
  double load_sign = 1.0;  // direction of the prescribed motion

  bool operator==(const BoundarySpec&) const = default;
};

struct OutputInput {
  std::string directory = "microfrac_out";
  int snapshot_every = 0;  // 0: final snapshot only

  bool operator==(const OutputInput&) const = default;
};

struct CaseConfig {
  CaseKind kind = CaseKind::SENT;
  MeshInput mesh;
  MaterialInput material;
  BoundarySpec boundary;
  double beta = 100.0;
  double thickness = 1.0;  // [mm]
  std::vector<LoadSegment> schedule;
  SolverConfig solver;
  OutputInput output;

  bool operator==(const CaseConfig&) const = default;

  ElasticParams elastic() const;
  FractureModel fracture() const;
  double alpha() const { return beta * material.Gc / material.l; }
  MaterialSetup material_setup() const;

  /// Checks ranges and model/softening combinations; throws ConfigError.
  void validate() const;
};

/// Benchmark defaults: geometry, material table, boundary conditions and the
/// published load schedule. Custom returns an empty material and schedule.
CaseConfig case_preset(CaseKind kind);
BoundarySpec case_boundary(CaseKind kind);

CaseConfig parse_config_text(const std::string& text);
CaseConfig parse_config(const std::filesystem::path& path);

/// JSON echo including the derived alpha (and a1 for quasi-brittle models).
/// Parsing the echo reproduces the same CaseConfig.
std::string serialize_config(const CaseConfig& config);

Mesh build_mesh(const CaseConfig& config);

/// Dirichlet constraints of one step. Throws MeshError for missing sets.
std::vector<DirichletConstraint> apply_case_bcs(const BoundarySpec& boundary,
                                                const Assembler& assembler, double increment);
ReactionProbe reaction_probe(const BoundarySpec& boundary);

/// Load-displacement CSV written row by row.
class LodiCsvWriter {
 public:
  explicit LodiCsvWriter(const std::filesystem::path& path);
  void append(const StepRecord& record);

 private:
  std::filesystem::path path_;
};

void write_lodi_csv(const std::vector<StepRecord>& series, const std::filesystem::path& path);

/// Legacy ASCII VTK unstructured grid. `points` may be empty, in which case
/// the cell phase-field is taken from the state's history and psi+ is zero.
void write_field_snapshot(const Mesh& mesh, const State& state,
                          const std::vector<PointState>& points,
                          const std::filesystem::path& path);
void write_field_snapshot(const Mesh& mesh, const State& state,
                          const std::vector<PointState>& points, std::ostream& out);

struct RunReport {
  Mesh mesh;
  SimulationResult result;
  std::filesystem::path csv_path;
  std::filesystem::path snapshot_path;
};

/// Builds the mesh, runs the schedule and writes config echo, CSV and
/// snapshots into `config.output.directory`. Progress lines go to `log`
/// when it is non-null.
RunReport run_simulation(const CaseConfig& config, std::ostream* log = nullptr);

}  // namespace microfrac
