#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "microfrac/driver_io.hpp"
#include "microfrac/errors.hpp"
#include "microfrac/verify/oracles.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kVerifyFailed = 9;

int fail(const microfrac::Error& e) {
  std::cerr << "error[" << microfrac::to_string(e.category()) << "]: " << e.what() << '\n';
  return static_cast<int>(e.category());
}

struct RunArgs {
  std::string config;
  std::string out;
  std::string mode;
  std::optional<double> beta;
  std::optional<double> mesh_h;
  bool direct = false;
};

int cmd_run(const RunArgs& args) {
  using namespace microfrac;
  CaseConfig config = parse_config(args.config);
  if (!args.out.empty()) config.output.directory = args.out;
  if (!args.mode.empty()) config.solver.mode = formulation_from_string(args.mode);
  if (args.beta) config.beta = *args.beta;
  if (args.mesh_h) {
    if (!config.mesh.file.empty()) throw ConfigError("--mesh-h cannot be combined with mesh.file");
    config.mesh.params.h = *args.mesh_h;
  }
  if (args.direct) config.solver.linear_solver = LinearSolverKind::Direct;
  config.validate();

  const FractureModel model = config.fracture();
  std::cout << "case=" << to_string(config.kind) << " model=" << to_string(model.kind)
            << " mode=" << to_string(config.solver.mode) << " beta=" << config.beta
            << " alpha=" << config.alpha();
  if (model.kind == ModelKind::QuasiBrittle) std::cout << " a1=" << model.a1;
  std::cout << '\n';

  const RunReport report = run_simulation(config, &std::cout);
  std::cout << "elements=" << report.mesh.element_count() << " steps=" << report.result.series.size()
            << " csv=" << report.csv_path.string() << " snapshot=" << report.snapshot_path.string()
            << '\n';
  if (!report.result.completed) {
    std::cerr << "error[" << to_string(report.result.failure_category)
              << "]: " << report.result.failure << " (partial series kept in "
              << report.csv_path.string() << ")\n";
    return static_cast<int>(report.result.failure_category);
  }
  return 0;
}

int cmd_mesh(const std::string& case_name, double h, const std::string& out) {
  using namespace microfrac;
  const CaseKind kind = case_kind_from_string(case_name);
  if (kind == CaseKind::Custom) throw ConfigError("the Custom case has no generator");
  MeshParams params = case_preset(kind).mesh.params;
  params.h = h;
  Mesh mesh = generate_case_mesh(kind, params);
  write_mesh_file(mesh, out);
  std::cout << "nodes=" << mesh.node_count() << " elements=" << mesh.element_count()
            << " area=" << mesh.total_area() << " file=" << out << '\n';
  return 0;
}

int cmd_verify() {
  bool ok = true;
  for (const auto& r : microfrac::verify::run_verify_suite()) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
    ok = ok && r.pass;
  }
  return ok ? 0 : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Micromorphic phase-field fracture solver"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a case from a JSON config");
  run_cmd->add_option("config", run.config, "Config file")->required();
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--mode", run.mode, "problem4 or problem5");
  run_cmd->add_option("--beta", run.beta, "Interaction scalar beta");
  run_cmd->add_option("--mesh-h", run.mesh_h, "Generator element size [mm]");
  run_cmd->add_flag("--direct", run.direct, "Use the direct linear solver");

  std::string mesh_case, mesh_out;
  double mesh_h = 0.0;
  auto* mesh_cmd = app.add_subcommand("mesh", "Generate a benchmark mesh");
  mesh_cmd->set_help_flag("--help", "Print this help message and exit");
  mesh_cmd->add_option("case", mesh_case, "SENT, SENS, LPanel or TPB")->required();
  mesh_cmd->add_option("--h", mesh_h, "Element size [mm]")->required();
  mesh_cmd->add_option("--out", mesh_out, "Output mesh file")->required();

  auto* verify_cmd = app.add_subcommand("verify", "Run the oracle and property checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run);
    if (mesh_cmd->parsed()) return cmd_mesh(mesh_case, mesh_h, mesh_out);
    if (verify_cmd->parsed()) return cmd_verify();
  } catch (const microfrac::Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return static_cast<int>(microfrac::ErrorCategory::Internal);
  }
  return kUsageError;
}
