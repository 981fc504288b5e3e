#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "optent/fock.hpp"

using namespace optent;

namespace {

constexpr double kPi = std::numbers::pi;

ControlProfile case_b() {
  return ControlProfile::from_boundaries({0.5205577020419371, 0.8714067263450243, 1.336448580489315}, kPi / 2,
                                         {2.0, -2.0, 0.0, 2.0}, 2.0);
}

FockState random_state(std::mt19937_64& rng, std::size_t na, std::size_t nb) {
  std::normal_distribution<double> d;
  FockState s(na, nb);
  for (auto& z : s.c) z = {d(rng), d(rng)};
  const double n = std::sqrt(s.norm_sq());
  for (auto& z : s.c) z /= n;
  return s;
}

}  // namespace

TEST(Fock, HamiltonianOnVacuum) {
  const auto v = FockState::vacuum(6, 6);
  const auto h0 = apply_hamiltonian(v, 0.0);
  EXPECT_EQ(h0.norm_sq(), 0.0);
  const auto h1 = apply_hamiltonian(v, 1.0);
  EXPECT_EQ(h1.at(1, 1), cplx(1.0, 0.0));
  EXPECT_NEAR(h1.norm_sq(), 1.0, 1e-15);
}

TEST(Fock, HamiltonianIsHermitian) {
  std::mt19937_64 rng(4);
  const auto phi = random_state(rng, 7, 9), psi = random_state(rng, 7, 9);
  const cplx a = inner(phi, apply_hamiltonian(psi, 0.8));
  const cplx b = std::conj(inner(psi, apply_hamiltonian(phi, 0.8)));
  EXPECT_NEAR(std::abs(a - b), 0.0, 1e-13);
}

TEST(Fock, VacuumIsStationaryAtZeroCoupling) {
  const auto out = evolve(FockState::vacuum(10, 10), ControlProfile({{2.0, 0.0}}, 1.0));
  EXPECT_EQ(out.at(0, 0), cplx(1.0, 0.0));
  EXPECT_NEAR(out.norm_sq(), 1.0, 1e-15);
}

TEST(Fock, VacuumMoments) {
  const auto est = moments(FockState::vacuum(5, 5));
  const auto m = est.moments.as_array();
  const Vec10 want{0, 0, 0, 1, 0, 0, 0, 0, 0, 0};
  for (int k = 0; k < 10; ++k) EXPECT_EQ(m[k], want[k]) << k;
}

TEST(Fock, ReferenceStateMoments) {
  for (double r : {0.3, 0.8336}) {
    const auto phased = moments(two_mode_squeezed_reference(r, true, 60, 60));
    EXPECT_NEAR(phased.moments.q1, -std::sinh(2 * r), 1e-12);
    EXPECT_NEAR(phased.moments.q2, 0.0, 1e-12);
    EXPECT_NEAR(phased.moments.q3, 0.0, 1e-12);
    EXPECT_NEAR(phased.moments.j0, std::cosh(2 * r), 1e-12);
    EXPECT_LE(phased.moments.six_block_max(), 1e-12);
    EXPECT_LE(phased.max_imag, 1e-10);
    EXPECT_NEAR(phased.moments.hyperbolic_block().invariant_defect(), 0.0, 1e-11);
    const auto plain = moments(two_mode_squeezed_reference(r, false, 60, 60));
    EXPECT_NEAR(plain.moments.q1, 0.0, 1e-12);
  }
}

TEST(Fock, ReferenceStateShape) {
  const auto v = two_mode_squeezed_reference(0.0, true, 5, 5);
  EXPECT_EQ(v.at(0, 0), cplx(1.0, 0.0));
  EXPECT_NEAR(v.norm_sq(), 1.0, 1e-15);
  const auto s = two_mode_squeezed_reference(1.0, false, 60, 60);
  double sum = 0.0;
  for (std::size_t n = 0; n < 60; ++n) sum += std::norm(s.at(n, n));
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_NEAR(std::norm(s.at(3, 3)), std::pow(std::tanh(1.0), 6) / std::pow(std::cosh(1.0), 2), 1e-12);
}

TEST(Fock, ReferenceStateGuardsTruncation) {
  try {
    two_mode_squeezed_reference(0.8336, true, 40, 40);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncationBreach);
  }
  EXPECT_NO_THROW(two_mode_squeezed_reference(0.8336, true, 45, 45));
}

TEST(Fock, ReducedEntropy) {
  EXPECT_NEAR(reduced_entropy(FockState::vacuum(6, 6)), 0.0, 1e-14);
  EXPECT_NEAR(reduced_entropy(two_mode_squeezed_reference(1.0, false, 80, 80)), entropy_of_squeezing(1.0), 1e-10);
}

TEST(Fock, QuadratureVariances) {
  const auto v = squeezed_quadrature_variances(FockState::vacuum(5, 5));
  EXPECT_NEAR(v.var_x, 0.5, 1e-15);
  EXPECT_NEAR(v.var_p, 0.5, 1e-15);
  const double r = 0.8336;
  const auto s = squeezed_quadrature_variances(two_mode_squeezed_reference(r, true, 60, 60));
  EXPECT_NEAR(s.var_x, std::exp(-1.6672) / 2, 1e-8);
  EXPECT_NEAR(s.var_p, std::exp(-1.6672) / 2, 1e-8);
}

TEST(Fock, CaseBOracleEquivalence) {
  const auto rep = run_oracle(case_b(), 40, 40, kDefaultMaxStep, 20);
  EXPECT_LE(rep.max_moment_error, 1e-6);
  EXPECT_LE(rep.norm_drift, 1e-8);
  EXPECT_LE(rep.max_imag, 1e-10);
  EXPECT_LE(rep.max_six_block, 1e-8);
  EXPECT_LE(rep.entropy_error, 1e-4);
  EXPECT_LE(rep.variance_error, 1e-3);
}

TEST(Fock, CaseBEvolvedStateMatchesTarget) {
  const auto psi = evolve(FockState::vacuum(40, 40), case_b());
  const double r = 0.8346281777148953;
  EXPECT_NEAR(reduced_entropy(psi), entropy_of_squeezing(r), 1e-4);
  const auto v = squeezed_quadrature_variances(psi);
  EXPECT_NEAR(v.var_x, std::exp(-2 * r) / 2, 1e-3);
  EXPECT_NEAR(v.var_p, std::exp(-2 * r) / 2, 1e-3);
}

TEST(Fock, TruncationConvergence) {
  // Doubling the cutoffs changes the final moments by at most 1e-8 once the tail is negligible.
  const auto profile = case_b();
  const auto a = moments(evolve(FockState::vacuum(60, 60), profile)).moments.as_array();
  const auto b = moments(evolve(FockState::vacuum(120, 120), profile)).moments.as_array();
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(a[k], b[k], 1e-8) << k;
}

TEST(Fock, ZeroControlOracleIsExact) {
  const auto rep = run_oracle(ControlProfile({{1.0, 0.0}}, 1.0), 10, 10);
  EXPECT_LE(rep.max_moment_error, 1e-12);
  EXPECT_LE(rep.entropy_error, 1e-12);
  EXPECT_LE(rep.variance_error, 1e-12);
}

TEST(Fock, TruncationBreachIsReported) {
  try {
    evolve(FockState::vacuum(8, 8), ControlProfile({{1.0, 2.0}}, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TruncationBreach);
    EXPECT_NE(std::string(e.what()).find("larger cutoffs"), std::string::npos);
  }
}
