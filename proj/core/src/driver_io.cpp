#include "microfrac/driver_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "microfrac/errors.hpp"

namespace microfrac {

namespace {

using nlohmann::json;

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported with their full path.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected a JSON object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) throw ConfigError("missing required key '" + key_path(key) + "'");
    return *it;
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError("'" + key_path(key) + "' must be a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  int integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError("'" + key_path(key) + "' must be an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError("'" + key_path(key) + "' must be a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }

  std::vector<std::string> string_list(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError("'" + key_path(key) + "' must be an array of strings");
    std::vector<std::string> out;
    for (const json& item : v) {
      if (!item.is_string()) throw ConfigError("'" + key_path(key) + "' must be an array of strings");
      out.push_back(item.get<std::string>());
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + key_path(it.key()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Wraps library-level ConfigErrors (e.g. an unknown enum name) with the key.
template <typename F>
auto with_key(const std::string& key_path, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError("'" + key_path + "': " + e.what());
  }
}

void parse_mesh(ObjectReader r, MeshInput& mesh) {
  MeshParams& p = mesh.params;
  p.h = r.number("h", p.h);
  p.refine_width = r.number("refine_width", p.refine_width);
  p.fine_factor = r.number("fine_factor", p.fine_factor);
  p.lpanel_load_edge = r.number("lpanel_load_edge", p.lpanel_load_edge);
  p.tpb_support_inset = r.number("tpb_support_inset", p.tpb_support_inset);
  mesh.file = r.string("file", mesh.file);
  r.finish();
}

MaterialInput parse_material(ObjectReader r) {
  MaterialInput m;
  m.E0 = r.number("E0");
  m.nu = r.number("nu");
  m.Gc = r.number("Gc");
  m.l = r.number("l");
  const std::string model = r.string("model");
  m.model = with_key(r.key_path("model"), [&] { return model_kind_from_string(model); });
  if (m.model == ModelKind::QuasiBrittle) {
    const std::string softening = r.string("softening");
    m.softening = with_key(r.key_path("softening"), [&] { return softening_from_string(softening); });
    m.ft = r.number("ft");
  } else {
    if (r.has("softening")) {
      throw ConfigError("'" + r.key_path("softening") + "' is only valid for the QuasiBrittle model");
    }
    if (r.has("ft")) throw ConfigError("'" + r.key_path("ft") + "' is only valid for the QuasiBrittle model");
  }
  m.residual_stiffness = r.number("residual_stiffness", m.residual_stiffness);
  r.finish();
  return m;
}

BoundarySpec parse_boundary(ObjectReader r, const BoundarySpec& fallback) {
  BoundarySpec b = fallback;
  if (r.has("fixed")) b.fixed = r.string_list("fixed");
  if (r.has("fixed_x")) b.fixed_x = r.string_list("fixed_x");
  if (r.has("fixed_y")) b.fixed_y = r.string_list("fixed_y");
  b.load_set = r.string("load_set", b.load_set);
  if (r.has("load_direction")) {
    const std::string dir = r.string("load_direction");
    if (dir == "x") {
      b.load_direction = 0;
    } else if (dir == "y") {
      b.load_direction = 1;
    } else {
      throw ConfigError("'" + r.key_path("load_direction") + "' must be \"x\" or \"y\"");
    }
  }
  b.load_sign = r.number("load_sign", b.load_sign);
  r.finish();
  return b;
}

std::vector<LoadSegment> parse_schedule(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError("'" + path + "' must be a non-empty array");
  std::vector<LoadSegment> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    ObjectReader r(j[i], path + "[" + std::to_string(i) + "]");
    LoadSegment seg;
    seg.count = r.integer("count");
    seg.increment = r.number("increment");
    r.finish();
    out.push_back(seg);
  }
  return out;
}

void parse_solver(ObjectReader r, SolverConfig& s) {
  s.tol = r.number("tol", s.tol);
  s.max_newton_iters = r.integer("max_newton_iters", s.max_newton_iters);
  if (r.has("mode")) {
    const std::string mode = r.string("mode");
    s.mode = with_key(r.key_path("mode"), [&] { return formulation_from_string(mode); });
  }
  if (r.has("linear_solver")) {
    const std::string ls = r.string("linear_solver");
    s.linear_solver = with_key(r.key_path("linear_solver"), [&] { return linear_solver_from_string(ls); });
  }
  if (r.has("gmres")) {
    ObjectReader g(r.raw("gmres"), r.key_path("gmres"));
    s.gmres.restart = g.integer("restart", s.gmres.restart);
    s.gmres.max_iters = g.integer("max_iters", s.gmres.max_iters);
    s.gmres.tol = g.number("tol", s.gmres.tol);
    s.gmres.drop_tol = g.number("drop_tol", s.gmres.drop_tol);
    s.gmres.fill_factor = g.integer("fill_factor", s.gmres.fill_factor);
    g.finish();
  }
  r.finish();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::string format_double(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

}  // namespace

// ---------------------------------------------------------------------------

ElasticParams CaseConfig::elastic() const {
  return ElasticParams::from_young_poisson(material.E0, material.nu);
}

FractureModel CaseConfig::fracture() const {
  switch (material.model) {
    case ModelKind::AT1: return FractureModel::at1(material.Gc, material.l);
    case ModelKind::AT2: return FractureModel::at2(material.Gc, material.l);
    case ModelKind::QuasiBrittle:
      return FractureModel::quasi_brittle(elastic(), material.Gc, material.l, material.ft,
                                          material.softening);
  }
  throw InternalError("unhandled fracture model");
}

MaterialSetup CaseConfig::material_setup() const {
  return {elastic(), fracture(), alpha(), material.residual_stiffness};
}

void CaseConfig::validate() const {
  require(material.E0 > 0.0, "'material.E0' must be positive");
  require(material.nu > -1.0 && material.nu < 0.5, "'material.nu' must lie in (-1, 0.5)");
  require(material.Gc > 0.0, "'material.Gc' must be positive");
  require(material.l > 0.0, "'material.l' must be positive");
  if (material.model == ModelKind::QuasiBrittle) require(material.ft > 0.0, "'material.ft' must be positive");
  require(material.residual_stiffness >= 0.0 && material.residual_stiffness < 1.0,
          "'material.residual_stiffness' must lie in [0, 1)");
  require(beta > 0.0 && std::isfinite(beta), "'beta' must be positive");
  require(thickness > 0.0, "'thickness' must be positive");
  require(!schedule.empty(), "'schedule' must contain at least one segment");
  // Zero increments are hold steps; the schedule as a whole must move the load.
  bool moves = false;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const std::string p = "'schedule[" + std::to_string(i) + "]";
    require(schedule[i].count >= 0, p + ".count' must be non-negative");
    require(std::isfinite(schedule[i].increment), p + ".increment' must be finite");
    moves = moves || (schedule[i].count > 0 && schedule[i].increment != 0.0);
  }
  require(moves, "'schedule' must contain at least one non-zero increment");
  require(solver.tol > 0.0, "'solver.tol' must be positive");
  require(solver.max_newton_iters >= 1, "'solver.max_newton_iters' must be at least 1");
  require(solver.gmres.restart >= 1, "'solver.gmres.restart' must be at least 1");
  require(solver.gmres.max_iters >= 1, "'solver.gmres.max_iters' must be at least 1");
  require(solver.gmres.tol > 0.0, "'solver.gmres.tol' must be positive");
  require(solver.gmres.drop_tol >= 0.0, "'solver.gmres.drop_tol' must be non-negative");
  require(solver.gmres.fill_factor >= 1, "'solver.gmres.fill_factor' must be at least 1");
  require(output.snapshot_every >= 0, "'output.snapshot_every' must be non-negative");
  require(!output.directory.empty(), "'output.directory' must not be empty");
  require(!boundary.load_set.empty(), "'boundary.load_set' must name a node set");
  require(boundary.load_direction == 0 || boundary.load_direction == 1,
          "'boundary.load_direction' must be x or y");
  require(boundary.load_sign == 1.0 || boundary.load_sign == -1.0, "'boundary.load_sign' must be 1 or -1");
  if (mesh.file.empty()) {
    require(kind != CaseKind::Custom, "'mesh.file' is required for a Custom case");
    require(mesh.params.h > 0.0, "'mesh.h' must be positive");
    require(mesh.params.refine_width >= 0.0, "'mesh.refine_width' must be non-negative");
    require(mesh.params.fine_factor > 0.0 && mesh.params.fine_factor <= 1.0,
            "'mesh.fine_factor' must lie in (0, 1]");
  }
  // Model constructors check the remaining combinations.
  with_key("material", [&] { return fracture(); });
}

BoundarySpec case_boundary(CaseKind kind) {
  BoundarySpec b;
  switch (kind) {
    case CaseKind::SENT:
      b.fixed = {"bottom"};
      b.load_set = "top";
      b.load_direction = 1;
      break;
    case CaseKind::SENS:
      b.fixed = {"bottom"};
      b.fixed_y = {"top", "left", "right"};
      b.load_set = "top";
      b.load_direction = 0;
      break;
    case CaseKind::LPanel:
      b.fixed = {"fixed_bottom"};
      b.load_set = "load_edge";
      b.load_direction = 1;
      break;
    case CaseKind::TPB:
      b.fixed = {"support_left"};
      b.fixed_y = {"support_right"};
      b.load_set = "load_point";
      b.load_direction = 1;
      b.load_sign = -1.0;
      break;
    case CaseKind::Custom:
      break;
  }
  return b;
}

CaseConfig case_preset(CaseKind kind) {
  CaseConfig c;
  c.kind = kind;
  c.boundary = case_boundary(kind);
  c.thickness = default_thickness(kind);
  switch (kind) {
    case CaseKind::SENT:
    case CaseKind::SENS:
      c.material = {210000.0, 0.3, 2.7, 0.015, ModelKind::AT2, Softening::Cornelissen, 0.0, 1e-7};
      c.mesh.params.h = 0.02;
      c.mesh.params.refine_width = 0.06;
      c.schedule = kind == CaseKind::SENT ? std::vector<LoadSegment>{{55, 1e-4}, {1000, 1e-6}}
                                          : std::vector<LoadSegment>{{85, 1e-4}, {900, 5e-6}};
      break;
    case CaseKind::LPanel:
      c.material = {2e4, 0.18, 0.130, 10.0, ModelKind::QuasiBrittle, Softening::Cornelissen, 2.5, 1e-7};
      c.mesh.params.h = 10.0;
      c.mesh.params.refine_width = 30.0;
      c.mesh.params.fine_factor = 0.5;
      c.schedule = {{1000, 1e-3}};
      break;
    case CaseKind::TPB:
      c.material = {2e4, 0.2, 0.113, 2.5, ModelKind::QuasiBrittle, Softening::Cornelissen, 2.4, 1e-7};
      c.mesh.params.h = 5.0;
      c.mesh.params.refine_width = 20.0;
      c.schedule = {{1000, 1e-3}};
      break;
    case CaseKind::Custom:
      break;
  }
  return c;
}

CaseConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }

  ObjectReader root(j, "");
  const std::string case_name = root.string("case");
  const CaseKind kind = with_key("case", [&] { return case_kind_from_string(case_name); });
  CaseConfig c = case_preset(kind);

  if (root.has("mesh")) {
    parse_mesh(ObjectReader(root.raw("mesh"), "mesh"), c.mesh);
  } else if (kind == CaseKind::Custom) {
    throw ConfigError("missing required key 'mesh'");
  }
  c.material = parse_material(ObjectReader(root.raw("material"), "material"));
  if (root.has("boundary")) {
    c.boundary = parse_boundary(ObjectReader(root.raw("boundary"), "boundary"), c.boundary);
  } else if (kind == CaseKind::Custom) {
    throw ConfigError("missing required key 'boundary'");
  }
  c.beta = root.number("beta", c.beta);
  c.thickness = root.number("thickness", c.thickness);
  if (root.has("schedule") || kind == CaseKind::Custom) {
    c.schedule = parse_schedule(root.raw("schedule"), "schedule");
  }
  if (root.has("solver")) parse_solver(ObjectReader(root.raw("solver"), "solver"), c.solver);
  if (root.has("output")) {
    ObjectReader o(root.raw("output"), "output");
    c.output.directory = o.string("directory", c.output.directory);
    c.output.snapshot_every = o.integer("snapshot_every", c.output.snapshot_every);
    o.finish();
  }
  // Derived values are recomputed; the echo carries them for the reader only.
  if (root.has("derived")) root.raw("derived");
  root.finish();

  c.validate();
  return c;
}

CaseConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  CaseConfig c = parse_config_text(buf.str());
  if (!c.mesh.file.empty()) {
    const std::filesystem::path mesh_path(c.mesh.file);
    if (mesh_path.is_relative()) c.mesh.file = (path.parent_path() / mesh_path).lexically_normal().string();
  }
  return c;
}

std::string serialize_config(const CaseConfig& c) {
  json j;
  j["case"] = std::string(to_string(c.kind));

  json mesh;
  mesh["h"] = c.mesh.params.h;
  mesh["refine_width"] = c.mesh.params.refine_width;
  mesh["fine_factor"] = c.mesh.params.fine_factor;
  mesh["lpanel_load_edge"] = c.mesh.params.lpanel_load_edge;
  mesh["tpb_support_inset"] = c.mesh.params.tpb_support_inset;
  if (!c.mesh.file.empty()) mesh["file"] = c.mesh.file;
  j["mesh"] = mesh;

  json mat;
  mat["E0"] = c.material.E0;
  mat["nu"] = c.material.nu;
  mat["Gc"] = c.material.Gc;
  mat["l"] = c.material.l;
  mat["model"] = std::string(to_string(c.material.model));
  if (c.material.model == ModelKind::QuasiBrittle) {
    mat["softening"] = std::string(to_string(c.material.softening));
    mat["ft"] = c.material.ft;
  }
  mat["residual_stiffness"] = c.material.residual_stiffness;
  j["material"] = mat;

  json bc;
  bc["fixed"] = c.boundary.fixed;
  bc["fixed_x"] = c.boundary.fixed_x;
  bc["fixed_y"] = c.boundary.fixed_y;
  bc["load_set"] = c.boundary.load_set;
  bc["load_direction"] = c.boundary.load_direction == 0 ? "x" : "y";
  bc["load_sign"] = c.boundary.load_sign;
  j["boundary"] = bc;

  j["beta"] = c.beta;
  j["thickness"] = c.thickness;

  json sched = json::array();
  for (const LoadSegment& s : c.schedule) sched.push_back({{"count", s.count}, {"increment", s.increment}});
  j["schedule"] = sched;

  json solver;
  solver["tol"] = c.solver.tol;
  solver["max_newton_iters"] = c.solver.max_newton_iters;
  solver["mode"] = std::string(to_string(c.solver.mode));
  solver["linear_solver"] = std::string(to_string(c.solver.linear_solver));
  solver["gmres"] = {{"restart", c.solver.gmres.restart},
                     {"max_iters", c.solver.gmres.max_iters},
                     {"tol", c.solver.gmres.tol},
                     {"drop_tol", c.solver.gmres.drop_tol},
                     {"fill_factor", c.solver.gmres.fill_factor}};
  j["solver"] = solver;

  j["output"] = {{"directory", c.output.directory}, {"snapshot_every", c.output.snapshot_every}};

  json derived;
  derived["alpha"] = c.alpha();
  if (c.material.model == ModelKind::QuasiBrittle) derived["a1"] = c.fracture().a1;
  j["derived"] = derived;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

Mesh build_mesh(const CaseConfig& config) {
  Mesh mesh = config.mesh.file.empty() ? generate_case_mesh(config.kind, config.mesh.params)
                                       : read_mesh_file(config.mesh.file);
  mesh.thickness = config.thickness;
  mesh.validate();
  return mesh;
}

std::vector<DirichletConstraint> apply_case_bcs(const BoundarySpec& boundary,
                                                const Assembler& assembler, double increment) {
  const Mesh& mesh = assembler.mesh();
  std::vector<DirichletConstraint> out;
  const auto add = [&](const std::string& set, int component, double value) {
    for (Index n : mesh.node_set(set)) out.push_back({assembler.u_dof(n, component), value});
  };
  for (const auto& s : boundary.fixed) {
    add(s, 0, 0.0);
    add(s, 1, 0.0);
  }
  for (const auto& s : boundary.fixed_x) add(s, 0, 0.0);
  for (const auto& s : boundary.fixed_y) add(s, 1, 0.0);
  if (mesh.node_set(boundary.load_set).empty()) {
    throw MeshError("load node set '" + boundary.load_set + "' is empty");
  }
  add(boundary.load_set, boundary.load_direction, boundary.load_sign * increment);
  return out;
}

ReactionProbe reaction_probe(const BoundarySpec& boundary) {
  return {boundary.load_set, boundary.load_direction, boundary.load_sign};
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kCsvHeader = "step,displacement_mm,load_kN,iterations,residual_ratio";

void write_csv_row(std::ostream& out, const StepRecord& r) {
  out << r.step << ',' << format_double(r.displacement) << ',' << format_double(r.load / 1000.0)
      << ',' << r.iterations << ',' << format_double(r.residual_ratio) << '\n';
}

}  // namespace

LodiCsvWriter::LodiCsvWriter(const std::filesystem::path& path) : path_(path) {
  std::ofstream out(path_, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path_.string() + "'");
  out << kCsvHeader << '\n';
}

void LodiCsvWriter::append(const StepRecord& record) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to '" + path_.string() + "'");
  write_csv_row(out, record);
}

void write_lodi_csv(const std::vector<StepRecord>& series, const std::filesystem::path& path) {
  if (series.empty()) throw IoError("refusing to write an empty load-displacement series");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << kCsvHeader << '\n';
  for (const StepRecord& r : series) write_csv_row(out, r);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_field_snapshot(const Mesh& mesh, const State& state,
                          const std::vector<PointState>& points, std::ostream& out) {
  const Index nn = mesh.node_count();
  const Index ne = mesh.element_count();
  if (state.u.size() != 2 * nn || state.d.size() != nn ||
      static_cast<Index>(state.phi_old.size()) != ne) {
    throw InternalError("snapshot state does not match the mesh");
  }
  if (!points.empty() && static_cast<Index>(points.size()) != ne) {
    throw InternalError("snapshot point states do not match the mesh");
  }

  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "# vtk DataFile Version 3.0\n"
      << "microfrac field snapshot step " << state.time_step << "\n"
      << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nn << " double\n";
  for (const Point2& p : mesh.nodes) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << ne << ' ' << 4 * ne << '\n';
  for (const auto& el : mesh.elements) out << "3 " << el[0] << ' ' << el[1] << ' ' << el[2] << '\n';
  out << "CELL_TYPES " << ne << '\n';
  for (Index e = 0; e < ne; ++e) out << "5\n";

  out << "POINT_DATA " << nn << '\n';
  out << "VECTORS u double\n";
  for (Index n = 0; n < nn; ++n) out << state.u(2 * n) << ' ' << state.u(2 * n + 1) << " 0\n";
  out << "SCALARS d double 1\nLOOKUP_TABLE default\n";
  for (Index n = 0; n < nn; ++n) out << state.d(n) << '\n';

  out << "CELL_DATA " << ne << '\n';
  out << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  for (Index e = 0; e < ne; ++e) {
    out << (points.empty() ? state.phi_old[static_cast<std::size_t>(e)]
                           : points[static_cast<std::size_t>(e)].phi)
        << '\n';
  }
  out << "SCALARS psi_plus double 1\nLOOKUP_TABLE default\n";
  for (Index e = 0; e < ne; ++e) {
    out << (points.empty() ? 0.0 : points[static_cast<std::size_t>(e)].psi_plus) << '\n';
  }
}

void write_field_snapshot(const Mesh& mesh, const State& state,
                          const std::vector<PointState>& points,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_field_snapshot(mesh, state, points, out);
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------

RunReport run_simulation(const CaseConfig& config, std::ostream* log) {
  config.validate();
  const std::filesystem::path dir(config.output.directory);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  {
    std::ofstream echo(dir / "config_echo.json", std::ios::trunc);
    if (!echo) throw IoError("cannot write '" + (dir / "config_echo.json").string() + "'");
    echo << serialize_config(config);
  }

  RunReport report;
  report.mesh = build_mesh(config);
  report.csv_path = dir / "lodi.csv";
  report.snapshot_path = dir / "final.vtk";

  const Assembler assembler(report.mesh, config.material_setup(), config.solver.mode);
  const BoundarySpec& boundary = config.boundary;
  const ReactionProbe probe = reaction_probe(boundary);
  // Resolve node sets before the first step so a bad set fails early.
  apply_case_bcs(boundary, assembler, 0.0);

  LodiCsvWriter csv(report.csv_path);
  State last_state = State::zero(report.mesh);
  std::vector<PointState> last_points;

  const auto observer = [&](const StepRecord& rec, const State& state,
                            const std::vector<PointState>& points) {
    csv.append(rec);
    last_state = state;
    last_points = points;
    if (log) {
      *log << "step=" << rec.step << " iters=" << rec.iterations << " ratio=" << std::setprecision(3)
           << std::scientific << rec.residual_ratio << std::defaultfloat << std::setprecision(6)
           << " u=" << rec.displacement << " P=" << rec.load / 1000.0 << '\n';
    }
    if (config.output.snapshot_every > 0 && rec.step % config.output.snapshot_every == 0) {
      std::ostringstream name;
      name << "snapshot_" << std::setw(5) << std::setfill('0') << rec.step << ".vtk";
      write_field_snapshot(report.mesh, state, points, dir / name.str());
    }
  };

  report.result = run_load_schedule(
      assembler, State::zero(report.mesh), expand_schedule(config.schedule),
      [&](double inc) { return apply_case_bcs(boundary, assembler, inc); }, probe, config.solver,
      observer);

  write_field_snapshot(report.mesh, last_state, last_points, report.snapshot_path);
  return report;
}

}  // namespace microfrac
