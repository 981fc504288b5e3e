#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gaussian_oracle.hpp"
#include "optent/hyperbolic.hpp"

using namespace optent;

namespace {

constexpr double kPi = std::numbers::pi;

ControlProfile case_a_bbb() {
  return ControlProfile::from_boundaries({2.177982686444309, 2.625040496682126}, kPi, {1.0, -1.0, 1.0}, 1.0);
}

ControlProfile case_b_bbsb() {
  return ControlProfile::from_boundaries({0.5205577020419371, 0.8714067263450243, 1.336448580489315}, kPi / 2, {2.0, -2.0, 0.0, 2.0}, 2.0);
}

}  // namespace

TEST(Hyperbolic, LiftSitsOnUpperSheet) {
  const ReducedState s{0.3, -1.2, 2.5};
  const auto p = lift(s);
  EXPECT_NEAR(p.invariant_defect(), 0.0, 1e-14);
  EXPECT_GT(p.j0, 0.0);
  EXPECT_TRUE(on_hyperboloid(p));
  EXPECT_FALSE(on_hyperboloid({0.0, 0.0, 0.0, 2.0}));
}

TEST(Hyperbolic, MinkowskiDotOfPointWithItselfIsMinusOne) {
  const auto p = lift({1.0, 2.0, -0.5});
  EXPECT_NEAR(minkowski_dot(p, p), -1.0, 1e-12);
}

TEST(Hyperbolic, DistanceFromVacuumToTargetIsTwiceR) {
  const HyperboloidPoint origin{};
  for (double r : {0.0, 0.1, 0.8336, 1.899, 4.0}) {
    const HyperboloidPoint target{-std::sinh(2 * r), 0.0, 0.0, std::cosh(2 * r)};
    EXPECT_NEAR(geodesic_distance(origin, target), 2 * r, 1e-12) << r;
    EXPECT_NEAR(r_from_final(target, 1e-12), r, 1e-12);
  }
}

TEST(Hyperbolic, DistanceRejectsOffSheetPoints) {
  EXPECT_THROW(geodesic_distance({}, {0.0, 0.0, 0.0, 3.0}), Error);
}

TEST(Hyperbolic, RFromFinalChecksTargetManifold) {
  try {
    r_from_final({-1.0, 0.1, 0.0, std::sqrt(2.01)}, 1e-8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotOnTargetManifold);
  }
  try {
    r_from_final({1.0, 0.0, 0.0, std::sqrt(2.0)}, 1e-8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeSqueezing);
  }
}

TEST(Hyperbolic, ZeroCouplingRotatesAboutQ1) {
  // g = 0: (q2, q3) rotates at angular rate 2 and q1 is frozen.
  const ReducedState s0{0.7, 1.0, 0.0};
  const double t = 0.4;
  const auto q = propagate_reduced(ControlProfile({{t, 0.0}}, 1.0), s0);
  EXPECT_NEAR(q.q1, 0.7, 1e-14);
  EXPECT_NEAR(q.q2, std::cos(2 * t), 1e-12);
  EXPECT_NEAR(q.q3, -std::sin(2 * t), 1e-12);
}

TEST(Hyperbolic, ReducedDynamicsMatchesGaussianPropagation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> g(-2.0, 2.0), d(0.05, 0.6);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Segment> segs;
    std::vector<std::pair<double, double>> pieces;
    for (int k = 0; k < 6; ++k) {
      segs.push_back({d(rng), g(rng)});
      pieces.emplace_back(segs.back().duration, segs.back().g);
    }
    const auto q = propagate_reduced(ControlProfile(segs, 2.0));
    const auto ref = oracle::moments(oracle::covariance(pieces));
    const double scale = 1.0 + std::abs(ref.j0);
    EXPECT_NEAR(q.q1, ref.q1, 1e-9 * scale);
    EXPECT_NEAR(q.q2, ref.q2, 1e-9 * scale);
    EXPECT_NEAR(q.q3, ref.q3, 1e-9 * scale);
    EXPECT_NEAR(lift(q).j0, ref.j0, 1e-9 * scale);
  }
}

TEST(Hyperbolic, FullMomentsAgreeWithReducedSystem) {
  const auto profile = case_b_bbsb();
  const auto full = integrate_full(profile);
  const auto red = integrate_reduced(profile);
  const auto& m = full.states.back();
  const auto& q = red.final_state();
  EXPECT_NEAR(m.q1, q.q1, 1e-10);
  EXPECT_NEAR(m.q2, q.q2, 1e-10);
  EXPECT_NEAR(m.q3, q.q3, 1e-10);
}

TEST(Hyperbolic, ConservationAlongCaseTrajectories) {
  for (const auto& profile : {case_a_bbb(), case_b_bbsb()}) {
    const auto full = integrate_full(profile);
    EXPECT_LE(max_hyperboloid_drift(full), 1e-10);
    EXPECT_LE(max_six_block(full), 1e-12);
  }
}

TEST(Hyperbolic, SpeedConstantUnderConstantCoupling) {
  for (double g : {-1.5, 0.0, 0.3, 2.0}) {
    const auto traj = integrate_reduced(ControlProfile({{1.3, g}}, 2.0));
    const double v0 = speed_sq(lift(traj.states.front()), g);
    for (const auto& s : traj.states) EXPECT_NEAR(speed_sq(lift(s), g), v0, 1e-8 * std::max(1.0, v0));
  }
}

TEST(Hyperbolic, EntropyOfTargetMatchesSqueezingFormula) {
  for (double r : {0.0, 0.3, 0.8336, 1.899}) {
    const HyperboloidPoint p{-std::sinh(2 * r), 0.0, 0.0, std::cosh(2 * r)};
    EXPECT_NEAR(entanglement_entropy(p), entropy_of_squeezing(r), 1e-12);
  }
  // Values computed independently: cosh^2 r ln cosh^2 r - sinh^2 r ln sinh^2 r.
  EXPECT_NEAR(entropy_of_squeezing(0.8336), 1.292827060913578, 1e-12);
  EXPECT_THROW(entropy_of_squeezing(-0.1), Error);
}

TEST(Hyperbolic, SegmentsSteppedExactly) {
  const auto traj = integrate_reduced(case_b_bbsb());
  ASSERT_EQ(traj.boundaries.size(), 5u);
  EXPECT_NEAR(traj.times[traj.boundaries[1]], 0.5205577020419371, 1e-15);
  EXPECT_NEAR(traj.times[traj.boundaries[3]], 1.336448580489315, 1e-15);
  EXPECT_NEAR(traj.horizon(), kPi / 2, 1e-15);
}

TEST(Hyperbolic, ProfileRejectsBadInput) {
  EXPECT_THROW(ControlProfile({{1.0, 1.5}}, 1.0), Error);
  EXPECT_THROW(ControlProfile({{-1.0, 0.5}}, 1.0), Error);
  EXPECT_THROW(ControlProfile({{1.0, 0.5}}, 0.0), Error);
  EXPECT_THROW(ControlProfile::from_boundaries({1.0, 0.5}, 2.0, {1, -1, 1}, 1.0), Error);
}

TEST(Hyperbolic, TrajectoryCsvHasHeaderAndRows) {
  std::ostringstream os;
  write_trajectory_csv(os, integrate_reduced(ControlProfile({{0.01, 1.0}}, 1.0)));
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("t,g,q1,q2,q3,j0,entropy\n", 0), 0u);
  EXPECT_GT(std::count(s.begin(), s.end(), '\n'), 10);
}

TEST(Hyperbolic, ReducedRhsExamples) {
  EXPECT_EQ(reduced_rhs({0, 0, 0}, 1.0), (Vec3{-2, 0, 0}));
  EXPECT_EQ(reduced_rhs({0, 0.3, -0.4}, 0.0), (Vec3{0, -0.8, -0.6}));
  const auto d = reduced_rhs({1, 1, 1}, 2.0);
  EXPECT_NEAR(d[0], -4.0, 1e-15);
  EXPECT_NEAR(d[1], 2.0, 1e-15);
  EXPECT_NEAR(d[2], -6.0, 1e-15);
}

TEST(Hyperbolic, FullMomentRhsExamples) {
  const auto d = full_moment_rhs(MomentVector::vacuum(), 1.0);
  EXPECT_EQ(d.q1, -2.0);
  for (double v : {d.q2, d.q3, d.j0, d.k1, d.k2, d.k3, d.j1, d.j2, d.j3}) EXPECT_EQ(v, 0.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    MomentVector m;
    m.q1 = u(rng), m.q2 = u(rng), m.q3 = u(rng), m.j0 = u(rng);
    const double g = u(rng);
    const auto dm = full_moment_rhs(m, g);
    const double dinv = 2 * (m.q1 * dm.q1 + m.q2 * dm.q2 + m.q3 * dm.q3 - m.j0 * dm.j0);
    EXPECT_NEAR(dinv, 0.0, 1e-12);
    const auto z = full_moment_rhs(m, 0.0);
    EXPECT_EQ(z.q1, 0.0);
    EXPECT_EQ(z.j0, 0.0);
  }
}

TEST(Hyperbolic, LiftExamples) {
  EXPECT_EQ(lift({0, 0, 0}), (HyperboloidPoint{0, 0, 0, 1}));
  const auto p = lift({3, 0, 4});
  EXPECT_NEAR(p.j0, std::sqrt(26.0), 1e-15);
  const double r = 0.8336;
  EXPECT_NEAR(lift({-std::sinh(2 * r), 0, 0}).j0, std::cosh(2 * r), 1e-14);
}

TEST(Hyperbolic, MinkowskiExamples) {
  const HyperboloidPoint x0{};
  EXPECT_EQ(minkowski_dot(x0, x0), -1.0);
  const double r = 1.899;
  EXPECT_NEAR(minkowski_dot(x0, {-std::sinh(2 * r), 0, 0, std::cosh(2 * r)}), -std::cosh(2 * r), 1e-12);
  EXPECT_NEAR(minkowski_dot(x0, lift({0, 0.5, -2.0})), -std::sqrt(1 + 0.25 + 4.0), 1e-15);
  EXPECT_THROW(minkowski_dot(x0, {1.0, 0.0, 0.0, 1.0}), Error);
}

TEST(Hyperbolic, DistanceProperties) {
  const auto a = lift({0.3, -0.2, 1.1});
  const auto b = lift({-1.5, 0.4, 0.2});
  EXPECT_EQ(geodesic_distance(a, a), 0.0);
  EXPECT_NEAR(geodesic_distance(a, b), geodesic_distance(b, a), 1e-14);
  // Common rotation of (q2, q3) is an isometry.
  const double c = std::cos(0.7), s = std::sin(0.7);
  const auto rot = [&](const HyperboloidPoint& p) {
    return lift({p.q1, c * p.q2 - s * p.q3, s * p.q2 + c * p.q3});
  };
  EXPECT_NEAR(geodesic_distance(rot(a), rot(b)), geodesic_distance(a, b), 1e-12);
  // Near-coincident points, against an extended-precision evaluation.
  const auto e = lift({0.3 + 1e-4, -0.2, 1.1});
  const long double dot = -(long double)a.j0 * e.j0 + (long double)a.q1 * e.q1 + (long double)a.q2 * e.q2 +
                          (long double)a.q3 * e.q3;
  EXPECT_NEAR(geodesic_distance(a, e), static_cast<double>(std::acosh(-dot)), 1e-11);
}

TEST(Hyperbolic, SpeedExamples) {
  EXPECT_NEAR(speed_sq({}, 1.7), 4 * 1.7 * 1.7, 1e-14);
  const double r = 0.8336, g = 2.0;
  EXPECT_NEAR(speed_sq({-std::sinh(2 * r), 0, 0, std::cosh(2 * r)}, g),
              4 * g * g * std::cosh(2 * r) * std::cosh(2 * r), 1e-12);
  EXPECT_NEAR(speed_sq(lift({0.4, 0.3, -0.5}), 0.0), 4 * (0.09 + 0.25), 1e-14);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) EXPECT_GE(speed_sq(lift({u(rng), u(rng), u(rng)}), u(rng)), 0.0);
}

TEST(Hyperbolic, IntegrateReducedExamples) {
  const auto q = propagate_reduced(ControlProfile({{kPi / 4, 0.0}}, 1.0), {0, 1, 0});
  EXPECT_NEAR(q.q1, 0.0, 1e-9);
  EXPECT_NEAR(q.q2, 0.0, 1e-9);
  EXPECT_NEAR(q.q3, -1.0, 1e-9);
  EXPECT_EQ(propagate_reduced(ControlProfile({{2.3, 0.0}}, 1.0)), (ReducedState{}));
  const auto traj = integrate_reduced(ControlProfile({{1.0, 0.5}}, 1.0));
  for (std::size_t i = 1; i < traj.size(); ++i) EXPECT_LT(traj.states[i].q1, 0.0);
}

TEST(Hyperbolic, FourthOrderConvergence) {
  // Error ratio under exact step halving on each constant piece, against a much finer reference.
  for (const auto& profile : {case_a_bbb(), case_b_bbsb()}) {
    ReducedState entry{};
    for (const auto& seg : profile.segments()) {
      const ControlProfile piece({seg}, profile.bound());
      const auto ref = propagate_reduced(piece, entry, seg.duration / 1024);
      const auto e = [&](int n) {
        const auto q = propagate_reduced(piece, entry, seg.duration / n);
        return std::hypot(q.q1 - ref.q1, q.q2 - ref.q2, q.q3 - ref.q3);
      };
      EXPECT_NEAR(e(32) / e(64), 16.0, 2.0) << seg.duration << " " << seg.g;
      entry = propagate_reduced(piece, entry);
    }
  }
}

TEST(Hyperbolic, EntropyExamples) {
  EXPECT_EQ(entropy_of_squeezing(0.0), 0.0);
  // High-precision closed form, confirmed by summing -p ln p over the Schmidt spectrum.
  EXPECT_NEAR(entropy_of_squeezing(1.0), 1.6198220928977023, 1e-12);
  EXPECT_EQ(entanglement_entropy({}), 0.0);
  EXPECT_NEAR(entanglement_entropy({-std::sinh(2.0), 0, 0, std::cosh(2.0)}), entropy_of_squeezing(1.0), 1e-12);
  double prev = 0.0;
  for (double r = 0.05; r < 4.0; r += 0.05) {
    const double s = entropy_of_squeezing(r);
    EXPECT_GT(s, prev);
    prev = s;
  }
}

TEST(Hyperbolic, RFromFinalExamples) {
  EXPECT_EQ(r_from_final({}, 1e-12), 0.0);
  EXPECT_NEAR(r_from_final({-std::sinh(2.0), 0, 0, std::cosh(2.0)}, 1e-12), 1.0, 1e-14);
  EXPECT_NEAR(r_from_final(lift({-std::sinh(2 * 0.8336), 0, 0}), 1e-12), 0.8336, 1e-14);
}
