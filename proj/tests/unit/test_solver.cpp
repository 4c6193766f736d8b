#include <gtest/gtest.h>

#include <random>

#include "microfrac/driver_io.hpp"
#include "microfrac/errors.hpp"
#include "microfrac/solver.hpp"

using namespace microfrac;

namespace {

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::SparseMatrix<double> laplacian_1d(int n, double shift) {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0 + shift);
    if (i > 0) t.emplace_back(i, i - 1, -1.0);
    if (i + 1 < n) t.emplace_back(i, i + 1, -1.0);
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

CaseConfig small_sent(double h = 0.05) {
  CaseConfig c = case_preset(CaseKind::SENT);
  c.mesh.params.h = h;
  c.mesh.params.refine_width = 0.0;
  c.material.l = 0.03;
  c.solver.linear_solver = LinearSolverKind::Direct;
  return c;
}

struct SentRun {
  CaseConfig config;
  Mesh mesh;
  Assembler assembler;
  explicit SentRun(CaseConfig c)
      : config(std::move(c)), mesh(build_mesh(config)),
        assembler(mesh, config.material_setup(), config.solver.mode) {}
  SimulationResult run(const std::vector<double>& increments) const {
    return run_load_schedule(
        assembler, State::zero(mesh), increments,
        [&](double inc) { return apply_case_bcs(config.boundary, assembler, inc); },
        reaction_probe(config.boundary), config.solver);
  }
};

}  // namespace

TEST(LinearSolve, IdentityReturnsRhs) {
  Eigen::SparseMatrix<double> I(5, 5);
  I.setIdentity();
  const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(5, 1.0, 5.0);
  for (LinearSolverKind k : {LinearSolverKind::Direct, LinearSolverKind::IterativeGMRES}) {
    EXPECT_LE((linear_solve(I, b, k).x - b).norm(), 1e-14);
  }
}

TEST(LinearSolve, GmresAgreesWithDirectOnSpdSystem) {
  const auto K = laplacian_1d(400, 1e-3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N;
  Eigen::VectorXd b(400);
  for (int i = 0; i < 400; ++i) b(i) = N(rng);
  const auto direct = linear_solve(K, b, LinearSolverKind::Direct);
  const auto gmres = linear_solve(K, b, LinearSolverKind::IterativeGMRES);
  EXPECT_EQ(gmres.used, LinearSolverKind::IterativeGMRES);
  EXPECT_FALSE(gmres.fell_back);
  EXPECT_LE((gmres.x - direct.x).norm(), 1e-8 * direct.x.norm());
}

TEST(LinearSolve, FloatingMeshIsAnError) {
  const CaseConfig c = small_sent(0.25);
  const Mesh mesh = build_mesh(c);
  const Assembler a(mesh, c.material_setup(), Formulation::Problem5);
  State s = State::zero(mesh);
  for (Index n = 0; n < a.node_count(); ++n) s.u(2 * n + 1) = 1e-3 * mesh.nodes[n].y();
  const AssembledSystem sys = a.assemble(s, as_vector(s.d));
  for (LinearSolverKind k : {LinearSolverKind::Direct, LinearSolverKind::IterativeGMRES}) {
    EXPECT_THROW(linear_solve(sys.K, sys.residual, k), LinearSolverError) << to_string(k);
  }
}

TEST(LinearSolve, Names) {
  EXPECT_EQ(linear_solver_from_string("direct"), LinearSolverKind::Direct);
  EXPECT_EQ(linear_solver_from_string("IterativeGMRES"), LinearSolverKind::IterativeGMRES);
  EXPECT_THROW(linear_solver_from_string("cg"), ConfigError);
}

TEST(Schedule, ExpansionAndExtrapolationRatios) {
  const auto sent = expand_schedule(case_preset(CaseKind::SENT).schedule);
  ASSERT_GT(sent.size(), 56u);
  EXPECT_EQ(sent[54], 1e-4);
  EXPECT_EQ(sent[55], 1e-6);
  ExtrapolationHistory h(Eigen::VectorXd::Zero(3));
  EXPECT_EQ(h.ratio(1e-4), 0.0);
  h.commit(Eigen::VectorXd::Constant(3, 0.1), 1e-4);
  EXPECT_NEAR(h.ratio(1e-6), 0.01, 1e-15);
  EXPECT_NEAR(h.ratio(5e-6), 0.05, 1e-15);
  const auto sens = expand_schedule(case_preset(CaseKind::SENS).schedule);
  EXPECT_EQ(sens[84], 1e-4);
  EXPECT_EQ(sens[85], 5e-6);
  for (CaseKind k : {CaseKind::LPanel, CaseKind::TPB}) {
    for (double inc : expand_schedule(case_preset(k).schedule)) ASSERT_EQ(inc, 1e-3);
  }
}

TEST(Schedule, PredictionExtrapolatesLinearly) {
  ExtrapolationHistory h(Eigen::VectorXd::Constant(2, 0.2));
  h.commit(Eigen::VectorXd::Constant(2, 0.3), 1e-4);
  const auto p = h.predict(1e-6);
  EXPECT_NEAR(p[0], 0.301, 1e-15);
  h.commit(Eigen::VectorXd::Constant(2, 0.3), 0.0);
  EXPECT_EQ(h.ratio(1e-4), 0.0);
}

TEST(Newton, ZeroIncrementFromExactEquilibriumTakesOneIteration) {
  const SentRun s(small_sent());
  const SimulationResult r = s.run({0.0});
  ASSERT_TRUE(r.completed) << r.failure;
  EXPECT_EQ(r.series[0].iterations, 1);
  EXPECT_EQ(r.series[0].load, 0.0);
}

TEST(Newton, HoldStepKeepsDisplacement) {
  // A converged step keeps a residual below tol, so a hold may need one correction.
  const SentRun s(small_sent());
  const SimulationResult r = s.run({1e-4, 0.0});
  ASSERT_TRUE(r.completed) << r.failure;
  EXPECT_LE(r.series[1].iterations, 2);
  EXPECT_EQ(r.series[1].displacement, r.series[0].displacement);
  EXPECT_NEAR(r.series[1].load, r.series[0].load, 1e-3 * r.series[0].load);
}

TEST(Newton, NearLinearPatchConvergesQuickly) {
  Mesh mesh;
  mesh.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  mesh.elements = {{0, 1, 2}, {0, 2, 3}};
  mesh.node_sets["bottom"] = {0, 1};
  mesh.node_sets["top"] = {2, 3};
  const ElasticParams steel = ElasticParams::from_young_poisson(210000.0, 0.3);
  const FractureModel m = FractureModel::at2(2.7, 0.015);
  const Assembler a(mesh, {steel, m, 100.0 * m.Gc / m.l}, Formulation::Problem5);
  std::vector<DirichletConstraint> bcs{{0, 0.0}, {1, 0.0}, {2, 0.0}, {3, 0.0}, {5, 1e-7}, {7, 1e-7}};
  State st = State::zero(mesh);
  const NewtonResult r = newton_step(st, a, bcs, as_vector(st.d), 1e-7, {"top", 1, 1.0}, SolverConfig{});
  EXPECT_LE(r.record.iterations, 2);
  EXPECT_GT(r.record.load, 0.0);
  EXPECT_EQ(st.time_step, 1);
  EXPECT_DOUBLE_EQ(st.applied_displacement, 1e-7);
}

TEST(Newton, ElasticPhaseIsLinear) {
  const SentRun s(small_sent());
  const SimulationResult r = s.run(std::vector<double>(5, 1e-4));
  ASSERT_TRUE(r.completed) << r.failure;
  const double slope = r.series[0].load / r.series[0].displacement;
  for (const auto& rec : r.series) {
    EXPECT_NEAR(rec.load / (slope * rec.displacement), 1.0, 0.01);
    EXPECT_LT(rec.residual_ratio, s.config.solver.tol);
  }
}

TEST(Newton, ReactionsBalance) {
  const SentRun s(small_sent());
  SimulationResult r = s.run(std::vector<double>(3, 1e-4));
  ASSERT_TRUE(r.completed);
  std::vector<double> d_hat = as_vector(r.state.d);
  const AssembledSystem sys = s.assembler.assemble(r.state, d_hat);
  const double top = s.assembler.reaction_force(sys.internal_force, "top", 1);
  const double bottom = s.assembler.reaction_force(sys.internal_force, "bottom", 1);
  EXPECT_LT(std::abs(top + bottom), 1e-3 * std::abs(top));
}

TEST(Newton, IterationCapRaisesConvergenceError) {
  CaseConfig c = small_sent();
  c.solver.max_newton_iters = 3;
  c.solver.mode = Formulation::Problem4;
  const SentRun s(c);
  // The second jump crosses the peak of the fully coupled form in one step.
  const SimulationResult r = s.run({6e-3, 2e-3, 1e-4});
  EXPECT_FALSE(r.completed);
  EXPECT_EQ(r.failure_category, ErrorCategory::Convergence);
  EXPECT_EQ(r.series.size(), 1u);
}

TEST(Newton, DirectRunsAreDeterministic) {
  const SentRun s(small_sent());
  const std::vector<double> inc(8, 2e-4);
  const SimulationResult a = s.run(inc);
  const SimulationResult b = s.run(inc);
  ASSERT_EQ(a.series.size(), b.series.size());
  for (std::size_t i = 0; i < a.series.size(); ++i) {
    EXPECT_EQ(a.series[i].load, b.series[i].load);
    EXPECT_EQ(a.series[i].residual_ratio, b.series[i].residual_ratio);
  }
  EXPECT_EQ((a.state.u - b.state.u).norm(), 0.0);
}

TEST(Newton, CommittedPhaseFieldNeverDecreases) {
  const SentRun s(small_sent());
  std::vector<double> inc(10, 5e-4);
  inc.insert(inc.end(), 3, 0.0);
  inc.insert(inc.end(), 3, -2e-4);
  std::vector<double> prev(static_cast<std::size_t>(s.mesh.element_count()), 0.0);
  const auto r = run_load_schedule(
      s.assembler, State::zero(s.mesh), inc,
      [&](double i) { return apply_case_bcs(s.config.boundary, s.assembler, i); },
      reaction_probe(s.config.boundary), s.config.solver,
      [&](const StepRecord&, const State& st, const std::vector<PointState>&) {
        for (std::size_t e = 0; e < prev.size(); ++e) {
          ASSERT_GE(st.phi_old[e], prev[e]);
          prev[e] = st.phi_old[e];
        }
      });
  EXPECT_TRUE(r.completed) << r.failure;
}
