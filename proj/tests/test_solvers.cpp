#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "optent/solvers.hpp"

using namespace optent;

namespace {

constexpr double kPi = std::numbers::pi;

SolveResult fake(double q1, std::size_t segments, double first_switch) {
  SolveResult r;
  r.objective_q1T = q1;
  std::vector<Segment> segs;
  segs.push_back({first_switch, 1.0});
  for (std::size_t k = 1; k < segments; ++k) segs.push_back({1.0, k % 2 ? -1.0 : 1.0});
  r.profile = ControlProfile(segs, 1.0);
  r.switch_times = {first_switch};
  return r;
}

}  // namespace

TEST(Solvers, MethodNames) {
  for (auto m : {Method::Direct, Method::Switch, Method::Enumerate}) EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_THROW(method_from_string("newton"), Error);
}

TEST(Solvers, TieBreakRule) {
  EXPECT_TRUE(better_candidate(fake(-2.0, 4, 0.5), fake(-1.0, 3, 0.5)));
  // Equal within 1e-7 relative: fewer segments win, then the earlier first switch.
  EXPECT_TRUE(better_candidate(fake(-2.0, 3, 0.5), fake(-2.0 - 1e-9, 4, 0.5)));
  EXPECT_TRUE(better_candidate(fake(-2.0, 3, 0.4), fake(-2.0, 3, 0.5)));
  EXPECT_FALSE(better_candidate(fake(-2.0, 3, 0.5), fake(-2.0, 3, 0.4)));
}

TEST(Solvers, ZeroHorizon) {
  for (auto m : {Method::Direct, Method::Switch, Method::Enumerate}) {
    const auto res = solve(m, 1.0, 0.0);
    EXPECT_EQ(res.r, 0.0);
    EXPECT_TRUE(res.profile.empty());
    EXPECT_TRUE(res.feasible());
  }
}

TEST(Solvers, ZeroPaddingLeavesEndpointUnchanged) {
  // Padding with g = 0 after reaching the target manifold rotates about Q1, which fixes the point.
  const auto prof = ControlProfile::from_boundaries({0.5205577020419371, 0.8714067263450243, 1.336448580489315},
                                                    kPi / 2, {2.0, -2.0, 0.0, 2.0}, 2.0);
  const auto a = propagate_reduced(prof);
  const auto b = propagate_reduced(prof.padded(0.7));
  EXPECT_NEAR(a.q1, b.q1, 1e-12);
  EXPECT_NEAR(b.q2, 0.0, 1e-9);
  EXPECT_NEAR(b.q3, 0.0, 1e-9);
}

TEST(Solvers, SwitchMethodCaseB) {
  const auto res = solve(Method::Switch, 2.0, kPi / 2);
  EXPECT_EQ(res.structure, Structure::BBSB);
  EXPECT_NEAR(res.r, 0.8346281777148953, 1e-8);
  // Every structure/sign pair is logged, plus the zero baseline.
  EXPECT_EQ(res.candidates.size(), 5u);
  for (const auto& c : res.candidates) EXPECT_LE(c.r, res.r + 1e-12);
}

TEST(Solvers, SweepPoints) {
  EXPECT_EQ(sweep_points(1.0, 3.0, 0.5), (std::vector<double>{1.0, 1.5, 2.0, 2.5, 3.0}));
  EXPECT_EQ(sweep_points(1.0, 1.0, 0.5), (std::vector<double>{1.0}));
  EXPECT_EQ(sweep_points(1.0, 3.0, 0.1).size(), 21u);
  EXPECT_THROW(sweep_points(3.0, 1.0, 0.5), Error);
  EXPECT_THROW(sweep_points(1.0, 3.0, 0.0), Error);
  EXPECT_THROW(sweep_points(1.0, 3.0, -1.0), Error);
}

TEST(Solvers, SweepRecordsFailuresAndContinues) {
  SweepOptions opt;
  opt.axis = SweepAxis::G;
  opt.from = -1.0;  // G <= 0 fails
  opt.to = 1.0;
  opt.step = 1.0;
  opt.fixed = 0.5;
  opt.method = Method::Switch;
  const auto rows = sweep(opt);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[0].status, "ok");
  EXPECT_FALSE(rows[0].result);
  EXPECT_NE(rows[1].status, "ok");
  EXPECT_EQ(rows[2].status, "ok");
  ASSERT_TRUE(rows[2].result);
  EXPECT_GE(rows[2].result->r, 0.0);
}

TEST(Solvers, ShortHorizonFallsBackToZero) {
  // Too short for three pulses to return to q2 = q3 = 0 with nonzero squeezing.
  const auto res = solve(Method::Switch, 0.5, 0.2);
  EXPECT_TRUE(res.feasible());
  EXPECT_GE(res.r, 0.0);
}
