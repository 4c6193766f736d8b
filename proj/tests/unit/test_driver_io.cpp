#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "microfrac/driver_io.hpp"
#include "microfrac/errors.hpp"

using namespace microfrac;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("microfrac_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kSent = R"({
  "case": "SENT",
  "material": {"E0": 210000, "nu": 0.3, "Gc": 2.7, "l": 0.015, "model": "AT2"},
  "beta": 250
})";

std::set<Index> dofs_of(const std::vector<DirichletConstraint>& bcs, double value) {
  std::set<Index> out;
  for (const auto& c : bcs) {
    if (c.increment == value) out.insert(c.dof);
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Config, AlphaFromBeta) {
  const CaseConfig c = parse_config_text(kSent);
  EXPECT_NEAR(c.alpha(), 45000.0, 1e-9);
  EXPECT_EQ(c.schedule, case_preset(CaseKind::SENT).schedule);
}

TEST(Config, QuasiBrittleEchoCarriesA1) {
  CaseConfig c = case_preset(CaseKind::LPanel);
  const auto j = nlohmann::json::parse(serialize_config(c));
  EXPECT_NEAR(j["derived"]["a1"].get<double>(), 52.97, 0.01);
  EXPECT_NEAR(j["derived"]["alpha"].get<double>(), c.alpha(), 1e-12);
}

TEST(Config, MissingKeyNamesPath) {
  try {
    parse_config_text(R"({"case": "SENT", "material": {"E0": 1, "nu": 0.3, "l": 0.1, "model": "AT2"}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("material.Gc"), std::string::npos) << e.what();
  }
}

TEST(Config, RejectsUnknownKeysAndBadCombinations) {
  EXPECT_THROW(parse_config_text(R"({"case": "SENT", "material": {"E0": 1, "nu": 0.3, "Gc": 1, "l": 0.1,
      "model": "AT2", "softening": "Linear"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"case": "SENT", "colour": 1, "material": {"E0": 1, "nu": 0.3,
      "Gc": 1, "l": 0.1, "model": "AT2"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"case": "SENT", "beta": -1, "material": {"E0": 1, "nu": 0.3,
      "Gc": 1, "l": 0.1, "model": "AT2"}})"), ConfigError);
  EXPECT_THROW(parse_config_text(R"({"case": "SENT", "schedule": [{"count": 3, "increment": 0}],
      "material": {"E0": 1, "nu": 0.3, "Gc": 1, "l": 0.1, "model": "AT2"}})"), ConfigError);
  EXPECT_THROW(parse_config_text("{"), ConfigError);
  EXPECT_THROW(parse_config("/nonexistent/config.json"), Error);
}

TEST(Config, HoldStepsAllowed) {
  const CaseConfig c = parse_config_text(R"({"case": "SENT",
      "schedule": [{"count": 2, "increment": 1e-4}, {"count": 2, "increment": 0}],
      "material": {"E0": 1, "nu": 0.3, "Gc": 1, "l": 0.1, "model": "AT2"}})");
  EXPECT_EQ(expand_schedule(c.schedule), (std::vector<double>{1e-4, 1e-4, 0.0, 0.0}));
}

TEST(Config, EchoIsLossless) {
  std::vector<CaseConfig> configs;
  for (CaseKind k : {CaseKind::SENT, CaseKind::SENS, CaseKind::LPanel, CaseKind::TPB}) {
    configs.push_back(case_preset(k));
  }
  CaseConfig custom = parse_config_text(kSent);
  custom.solver.mode = Formulation::Problem4;
  custom.solver.linear_solver = LinearSolverKind::Direct;
  custom.solver.gmres.drop_tol = 3.3e-7;
  custom.material.residual_stiffness = 0.0;
  custom.mesh.params.h = 0.1 / 3.0;
  custom.output.snapshot_every = 7;
  configs.push_back(custom);
  for (const auto& c : configs) {
    const CaseConfig back = parse_config_text(serialize_config(c));
    EXPECT_TRUE(back == c) << serialize_config(c);
  }
}

TEST(Config, RelativeMeshFileResolvesAgainstConfig) {
  const fs::path dir = scratch("meshfile");
  write_mesh_file(generate_sent_mesh(0.25), (dir / "m.mesh").string());
  std::ofstream(dir / "c.json") << R"({"case": "Custom", "mesh": {"file": "m.mesh"},
    "material": {"E0": 210000, "nu": 0.3, "Gc": 2.7, "l": 0.015, "model": "AT2"},
    "boundary": {"fixed": ["bottom"], "load_set": "top", "load_direction": "y"},
    "schedule": [{"count": 1, "increment": 1e-4}]})";
  const CaseConfig c = parse_config(dir / "c.json");
  EXPECT_EQ(build_mesh(c).element_count(), generate_sent_mesh(0.25).element_count());
}

TEST(BoundaryConditions, Sent) {
  const CaseConfig c = case_preset(CaseKind::SENT);
  const Mesh mesh = generate_sent_mesh(0.25);
  const Assembler a(mesh, c.material_setup(), Formulation::Problem5);
  const auto bcs = apply_case_bcs(c.boundary, a, 1e-4);
  std::set<Index> want;
  for (Index n : mesh.node_set("top")) want.insert(a.u_dof(n, 1));
  EXPECT_EQ(dofs_of(bcs, 1e-4), want);
  for (const auto& bc : bcs) {
    for (Index n : mesh.node_set("top")) EXPECT_NE(bc.dof, a.u_dof(n, 0));
  }
}

TEST(BoundaryConditions, Sens) {
  const CaseConfig c = case_preset(CaseKind::SENS);
  const Mesh mesh = generate_sens_mesh(0.25);
  const Assembler a(mesh, c.material_setup(), Formulation::Problem5);
  const auto bcs = apply_case_bcs(c.boundary, a, 1e-4);
  std::set<Index> loaded;
  for (Index n : mesh.node_set("top")) loaded.insert(a.u_dof(n, 0));
  EXPECT_EQ(dofs_of(bcs, 1e-4), loaded);
  const std::set<Index> zero = dofs_of(bcs, 0.0);
  for (const char* side : {"left", "right", "top"}) {
    for (Index n : mesh.node_set(side)) EXPECT_TRUE(zero.count(a.u_dof(n, 1))) << side;
  }
}

TEST(BoundaryConditions, LPanelAndTpb) {
  {
    const CaseConfig c = case_preset(CaseKind::LPanel);
    const Mesh mesh = generate_lpanel_mesh(10.0);
    const Assembler a(mesh, c.material_setup(), Formulation::Problem5);
    std::set<Index> want;
    for (Index n : mesh.node_set("load_edge")) want.insert(a.u_dof(n, 1));
    EXPECT_EQ(dofs_of(apply_case_bcs(c.boundary, a, 1e-3), 1e-3), want);
  }
  {
    const CaseConfig c = case_preset(CaseKind::TPB);
    const Mesh mesh = generate_tpb_mesh(5.0);
    const Assembler a(mesh, c.material_setup(), Formulation::Problem5);
    const auto bcs = apply_case_bcs(c.boundary, a, 1e-3);
    const Index load = mesh.node_set("load_point")[0];
    EXPECT_EQ(dofs_of(bcs, -1e-3), (std::set<Index>{a.u_dof(load, 1)}));
  }
}

TEST(BoundaryConditions, MissingSetIsMeshError) {
  CaseConfig c = case_preset(CaseKind::SENT);
  c.boundary.fixed = {"nowhere"};
  const Mesh mesh = generate_sent_mesh(0.25);
  const Assembler a(mesh, c.material_setup(), Formulation::Problem5);
  EXPECT_THROW(apply_case_bcs(c.boundary, a, 1e-4), MeshError);
}

TEST(Output, EmptySeriesRejected) {
  EXPECT_THROW(write_lodi_csv({}, scratch("csv") / "x.csv"), IoError);
}

TEST(Output, CsvLayout) {
  const fs::path dir = scratch("csv2");
  StepRecord r;
  r.step = 1;
  r.increment = 1e-4;
  r.displacement = 1e-4;
  r.load = 1234.5;
  r.iterations = 2;
  write_lodi_csv({r}, dir / "l.csv");
  std::ifstream in(dir / "l.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "step,displacement_mm,load_kN,iterations,residual_ratio");
  EXPECT_EQ(row.substr(0, 2), "1,");
  std::vector<std::string> cols;
  std::stringstream fields(row);
  for (std::string f; std::getline(fields, f, ',');) cols.push_back(f);
  ASSERT_EQ(cols.size(), 5u) << row;
  EXPECT_DOUBLE_EQ(std::stod(cols[2]), 1.2345);
  EXPECT_THROW(write_lodi_csv({r}, "/nonexistent/dir/l.csv"), IoError);
}

TEST(Output, SnapshotOfZeroState) {
  const Mesh mesh = generate_sent_mesh(0.25);
  std::ostringstream out;
  write_field_snapshot(mesh, State::zero(mesh), {}, out);
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> sections;
  bool in_phi = false;
  int phi_values = 0;
  while (std::getline(in, line)) {
    const auto word = line.substr(0, line.find(' '));
    if (word == "POINTS") EXPECT_EQ(std::stoll(line.substr(7)), mesh.node_count());
    if (word == "CELLS" || word == "CELL_TYPES") EXPECT_EQ(std::stoll(line.substr(word.size() + 1)), mesh.element_count());
    if (word == "POINTS" || word == "CELLS" || word == "CELL_TYPES" || word == "POINT_DATA" || word == "CELL_DATA") {
      sections.push_back(word);
    }
    if (line == "SCALARS phi double 1") {
      in_phi = true;
      std::getline(in, line);  // lookup table
      continue;
    }
    if (in_phi) {
      if (line.rfind("SCALARS", 0) == 0) break;
      EXPECT_EQ(std::stod(line), 0.0);
      ++phi_values;
    }
  }
  EXPECT_EQ(sections, (std::vector<std::string>{"POINTS", "CELLS", "CELL_TYPES", "POINT_DATA", "CELL_DATA"}));
  EXPECT_EQ(phi_values, mesh.element_count());
}

TEST(Run, WritesOutputsAndFirstRowIsFirstIncrement) {
  CaseConfig c = parse_config_text(kSent);
  c.mesh.params.h = 0.1;
  c.mesh.params.refine_width = 0.0;
  c.schedule = {{3, 1e-4}};
  c.output.directory = scratch("run").string();
  const RunReport r = run_simulation(c);
  ASSERT_TRUE(r.result.completed) << r.result.failure;
  EXPECT_TRUE(fs::exists(fs::path(c.output.directory) / "config_echo.json"));
  EXPECT_TRUE(fs::exists(r.snapshot_path));
  std::ifstream in(r.csv_path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(std::stod(row.substr(row.find(',') + 1)), 1e-4);
  EXPECT_TRUE(parse_config(fs::path(c.output.directory) / "config_echo.json") == c);
}

TEST(Run, LoadsScaleWithThickness) {
  CaseConfig c = parse_config_text(kSent);
  c.mesh.params.h = 0.1;
  c.mesh.params.refine_width = 0.0;
  c.schedule = {{3, 1e-5}};
  c.solver.linear_solver = LinearSolverKind::Direct;
  c.output.directory = scratch("thick1").string();
  const RunReport a = run_simulation(c);
  c.thickness *= 2.0;
  c.output.directory = scratch("thick2").string();
  const RunReport b = run_simulation(c);
  ASSERT_EQ(a.result.series.size(), b.result.series.size());
  for (std::size_t i = 0; i < a.result.series.size(); ++i) {
    EXPECT_NEAR(b.result.series[i].load, 2.0 * a.result.series[i].load, 1e-9 * std::abs(b.result.series[i].load));
  }
}

TEST(Run, FailureKeepsPartialSeries) {
  CaseConfig c = parse_config_text(kSent);
  c.mesh.params.h = 0.05;
  c.mesh.params.refine_width = 0.0;
  c.material.l = 0.03;
  c.solver.mode = Formulation::Problem4;
  c.solver.max_newton_iters = 3;
  c.solver.linear_solver = LinearSolverKind::Direct;
  c.schedule = {{1, 6e-3}, {1, 2e-3}};
  c.output.directory = scratch("fail").string();
  const RunReport r = run_simulation(c);
  EXPECT_FALSE(r.result.completed);
  EXPECT_EQ(r.result.failure_category, ErrorCategory::Convergence);
  const std::string csv = slurp(r.csv_path);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Run, PostPeakSentHasCrackAlongLigament) {
  CaseConfig c = parse_config_text(kSent);
  c.mesh.params.h = 0.025;
  c.mesh.params.refine_width = 0.0;
  c.material.l = 0.03;
  c.beta = 100.0;
  c.solver.linear_solver = LinearSolverKind::Direct;
  c.solver.max_newton_iters = 100;
  c.schedule = {{30, 2e-4}, {60, 5e-5}};
  c.output.directory = scratch("crack").string();
  const RunReport r = run_simulation(c);
  ASSERT_TRUE(r.result.completed) << r.result.failure;
  const Mesh& mesh = r.mesh;
  double best = 0.0;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto& el = mesh.elements[static_cast<std::size_t>(e)];
    const Point2 x = (mesh.nodes[el[0]] + mesh.nodes[el[1]] + mesh.nodes[el[2]]) / 3.0;
    if (x.x() > 0.5 && std::abs(x.y() - 0.5) < 2.0 * c.material.l) {
      best = std::max(best, r.result.state.phi_old[static_cast<std::size_t>(e)]);
    }
  }
  EXPECT_GT(best, 0.95);
}
