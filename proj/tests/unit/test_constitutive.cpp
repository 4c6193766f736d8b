#include <gtest/gtest.h>

#include <random>

#include "microfrac/constitutive.hpp"
#include "microfrac/errors.hpp"

using namespace microfrac;

namespace {

ElasticParams unit_moduli() {
  ElasticParams e;
  e.K = 1.0;
  e.mu = 1.0;
  return e;
}

const ElasticParams kConcrete = ElasticParams::from_young_poisson(2e4, 0.18);

}  // namespace

TEST(AmorSplit, ZeroStrain) {
  const SplitEnergies s = amor_split(StrainState::from_plane(0, 0, 0), unit_moduli());
  EXPECT_EQ(s.psi_plus, 0.0);
  EXPECT_EQ(s.psi_minus, 0.0);
  EXPECT_EQ(s.sigma_plus.norm(), 0.0);
  EXPECT_EQ(s.sigma_minus.norm(), 0.0);
}

TEST(AmorSplit, CompressiveHandValues) {
  const SplitEnergies s = amor_split(StrainState::from_plane(-0.1, -0.1, 0), unit_moduli());
  EXPECT_NEAR(s.psi_minus, 0.02, 1e-15);
  EXPECT_NEAR(s.psi_plus, 2.0 / 300.0, 1e-15);
}

TEST(AmorSplit, PureShear) {
  // Tensor shear 0.1 is engineering shear 0.2.
  const SplitEnergies s = amor_split(StrainState::from_plane(0, 0, 0.2), unit_moduli());
  EXPECT_EQ(s.psi_minus, 0.0);
  EXPECT_NEAR(s.psi_plus, 0.02, 1e-15);
}

TEST(AmorSplit, AdditivityMatchesIsotropicLaw) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1e-3, 1e-3);
  const Matrix6 C = isotropic_stiffness(kConcrete);
  for (int i = 0; i < 200; ++i) {
    Voigt6 eps;
    for (int k = 0; k < 6; ++k) eps(k) = U(rng);
    const SplitEnergies s = amor_split(StrainState::from_voigt(eps), kConcrete);
    const Voigt6 expected = C * eps;
    EXPECT_LE((s.sigma_plus + s.sigma_minus - expected).norm(), 1e-12 * expected.norm());
  }
}

TEST(AmorSplit, StressIsEnergyGradient) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> U(-1e-2, 1e-2);
  int checked = 0;
  while (checked < 100) {
    Voigt6 eps;
    for (int k = 0; k < 6; ++k) eps(k) = U(rng);
    if (std::abs(eps(0) + eps(1) + eps(2)) < 1e-3) continue;
    ++checked;
    const SplitEnergies s = amor_split(StrainState::from_voigt(eps), kConcrete);
    for (int k = 0; k < 6; ++k) {
      Voigt6 ep = eps, em = eps;
      const double h = 1e-6;
      ep(k) += h;
      em(k) -= h;
      const SplitEnergies sp = amor_split(StrainState::from_voigt(ep), kConcrete);
      const SplitEnergies sm = amor_split(StrainState::from_voigt(em), kConcrete);
      // Engineering shear strains pair with tensor shear stresses.
      EXPECT_NEAR((sp.psi_plus - sm.psi_plus) / (2 * h), s.sigma_plus(k), 1e-5 * (s.sigma_plus.norm() + 1.0));
      EXPECT_NEAR((sp.psi_minus - sm.psi_minus) / (2 * h), s.sigma_minus(k), 1e-5 * (s.sigma_minus.norm() + 1.0));
    }
  }
}

TEST(Projectors, Identities) {
  const Matrix6& Pv = volumetric_projector();
  const Matrix6& Pd = deviatoric_projector();
  Voigt6 one;
  one << 1, 1, 1, 0, 0, 0;
  EXPECT_LE((Pd * one).norm(), 1e-12);
  Voigt6 eps;
  eps << 0.3, -0.2, 0.1, 0.05, -0.04, 0.02;
  EXPECT_LE((Pv * eps - (eps(0) + eps(1) + eps(2)) * one).norm(), 1e-12);
  EXPECT_LE((Pd - Pd.transpose()).norm(), 1e-12);
  EXPECT_NEAR(Pd(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(Pd(0, 1), -1.0 / 3.0, 1e-15);
  // Idempotent in the metric that maps engineering strains to tensor shears.
  Matrix6 W = Matrix6::Identity();
  for (int k = 3; k < 6; ++k) W(k, k) = 2.0;
  EXPECT_LE((Pd * W * Pd - Pd).norm(), 1e-12);
  EXPECT_LE((Pd.topLeftCorner<3, 3>() * Pd.topLeftCorner<3, 3>() - Pd.topLeftCorner<3, 3>()).norm(), 1e-12);
}

TEST(ElasticTangent, IntactTensileIsIsotropic) {
  const StrainState eps = StrainState::from_plane(1e-4, 2e-4, 1e-5);
  const FractureModel m = FractureModel::at2(2.7, 0.015);
  const Matrix6 D = elastic_tangent(eps, 0.0, m, kConcrete);
  const Matrix6 C = isotropic_stiffness(kConcrete);
  EXPECT_LE((D - C).norm(), 1e-12 * C.norm());
}

TEST(ElasticTangent, BrokenTensileIsZero) {
  const StrainState eps = StrainState::from_plane(1e-4, 2e-4, 1e-5);
  const FractureModel m = FractureModel::at2(2.7, 0.015);
  EXPECT_EQ(elastic_tangent(eps, 1.0, m, kConcrete).norm(), 0.0);
  const Matrix6 residual = elastic_tangent(eps, 1.0, m, kConcrete, 1e-6);
  EXPECT_NEAR(residual.norm(), 1e-6 * isotropic_stiffness(kConcrete).norm(), 1e-9);
}

TEST(ElasticTangent, ConsistentWithSplitStress) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(-1e-3, 1e-3);
  std::uniform_real_distribution<double> P(0.0, 1.0);
  const FractureModel m = FractureModel::quasi_brittle(kConcrete, 0.13, 10.0, 2.5, Softening::Cornelissen);
  for (int i = 0; i < 100; ++i) {
    const StrainState eps = StrainState::from_plane(U(rng), U(rng), U(rng));
    const double phi = P(rng);
    const SplitEnergies s = amor_split(eps, kConcrete);
    const double g = degradation(phi, m).value;
    const Voigt6 expected = g * s.sigma_plus + s.sigma_minus;
    const Voigt6 got = elastic_tangent(eps, phi, m, kConcrete) * eps.eps;
    EXPECT_LE((got - expected).norm(), 1e-12 * (expected.norm() + 1e-300));
  }
}

TEST(Degradation, Endpoints) {
  const FractureModel models[] = {
      FractureModel::at1(2.7, 0.015), FractureModel::at2(2.7, 0.015),
      FractureModel::quasi_brittle(kConcrete, 0.13, 10.0, 2.5, Softening::Linear),
      FractureModel::quasi_brittle(kConcrete, 0.13, 10.0, 2.5, Softening::Exponential),
      FractureModel::quasi_brittle(kConcrete, 0.13, 10.0, 2.5, Softening::Cornelissen)};
  for (const auto& m : models) {
    EXPECT_DOUBLE_EQ(degradation(0.0, m).value, 1.0);
    EXPECT_DOUBLE_EQ(degradation(1.0, m).value, 0.0);
    double prev = 2.0;
    for (int i = 0; i <= 1000; ++i) {
      const double g = degradation(i / 1000.0, m).value;
      EXPECT_LT(g, prev);
      prev = g;
    }
    EXPECT_THROW(degradation(-0.1, m), Error);
    EXPECT_THROW(degradation(1.1, m), Error);
  }
}

TEST(Degradation, CornelissenHandValue) {
  const FractureModel m = FractureModel::quasi_brittle(kConcrete, 0.13, 10.0, 2.5, Softening::Cornelissen);
  FractureModel fixed = m;
  fixed.a1 = 52.97;
  EXPECT_NEAR(degradation(0.5, fixed).value, 0.25 / (0.25 + 26.485 + 18.365 + 6.031), 2e-6);
}

TEST(Degradation, DerivativesMatchDifferences) {
  const FractureModel m = FractureModel::quasi_brittle(kConcrete, 0.13, 10.0, 2.5, Softening::Exponential);
  for (double phi : {0.1, 0.3, 0.5, 0.9}) {
    const double h = 1e-6;
    const auto g = degradation(phi, m);
    EXPECT_NEAR(g.d1, (degradation(phi + h, m).value - degradation(phi - h, m).value) / (2 * h), 1e-6 * std::abs(g.d1) + 1e-9);
    EXPECT_NEAR(g.d2, (degradation(phi + h, m).d1 - degradation(phi - h, m).d1) / (2 * h), 1e-5 * std::abs(g.d2) + 1e-6);
  }
}

TEST(Dissipation, Forms) {
  const auto at1 = dissipation(0.3, FractureModel::at1(1, 1));
  EXPECT_DOUBLE_EQ(at1.value, 0.3);
  EXPECT_DOUBLE_EQ(at1.d1, 1.0);
  const auto at2 = dissipation(0.5, FractureModel::at2(1, 1));
  EXPECT_DOUBLE_EQ(at2.value, 0.25);
  EXPECT_DOUBLE_EQ(at2.d1, 1.0);
  const auto qb = dissipation(1.0, FractureModel::quasi_brittle(kConcrete, 0.13, 10.0, 2.5, Softening::Linear));
  EXPECT_DOUBLE_EQ(qb.value, 1.0);
  EXPECT_DOUBLE_EQ(qb.d1, 0.0);
}

TEST(A1, BenchmarkValuesAndScaling) {
  const auto e = ElasticParams::from_young_poisson(2e4, 0.2);
  EXPECT_NEAR(compute_a1(e, 0.130, 10.0, 2.5), 52.97, 0.01);
  EXPECT_NEAR(compute_a1(e, 0.113, 2.5, 2.4), 199.83, 0.01);
  EXPECT_NEAR(compute_a1(e, 0.130, 10.0, 5.0), compute_a1(e, 0.130, 10.0, 2.5) / 4.0, 1e-12);
  EXPECT_THROW(compute_a1(e, 0.0, 10.0, 2.5), ConfigError);
  EXPECT_THROW(compute_a1(e, 0.13, 10.0, -1.0), ConfigError);
}

TEST(Elastic, InvalidParametersRejected) {
  EXPECT_THROW(ElasticParams::from_young_poisson(-1.0, 0.2), ConfigError);
  EXPECT_THROW(ElasticParams::from_young_poisson(1.0, 0.5), ConfigError);
  EXPECT_THROW(model_kind_from_string("AT3"), ConfigError);
}
