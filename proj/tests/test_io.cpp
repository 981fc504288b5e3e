#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "optent/io.hpp"

using namespace optent;

namespace {

constexpr double kPi = std::numbers::pi;

SolveResult case_b_result() {
  SolveResult r;
  r.g_max = 2.0;
  r.horizon = kPi / 2;
  r.method = "switch";
  r.structure = Structure::BBSB;
  r.first_sign = 1;
  r.switch_times = {0.5205577020419371, 0.8714067263450243, 1.336448580489315};
  r.piece_values = {2.0, -2.0, 0.0, 2.0};
  r.profile = ControlProfile::from_boundaries(r.switch_times, r.horizon, r.piece_values, r.g_max);
  finalize_from_profile(r);
  return r;
}

}  // namespace

TEST(Io, ResultJsonHasStableKeys) {
  const auto j = optent::to_json(case_b_result(), json{{"grid", 4000}});
  for (const char* key : {"g_max", "T", "method", "structure", "first_sign", "switch_times", "r", "q_final",
                          "residual_q2", "residual_q3", "objective_q1T", "pmp", "stats", "config"})
    EXPECT_TRUE(j.contains(key)) << key;
  for (const char* key : {"iterations", "rho_final", "wall_ms"}) EXPECT_TRUE(j["stats"].contains(key)) << key;
  EXPECT_EQ(j["structure"], "BBSB");
  EXPECT_EQ(j["q_final"].size(), 3u);
}

TEST(Io, PmpJsonKeys) {
  auto r = case_b_result();
  r.pmp = verify_candidate(integrate_reduced(r.profile));
  const auto j = to_json(*r.pmp);
  for (const char* key : {"mu2", "mu3", "switch_phi_residuals", "bang_sign_ok", "max_abs_phi_singular",
                          "max_lc_singular", "pass"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Io, StoredResultRoundTrip) {
  const auto j = to_json(case_b_result());
  const auto s = stored_result_from_json(json::parse(j.dump()));
  EXPECT_EQ(s.structure, Structure::BBSB);
  EXPECT_EQ(s.switch_times.size(), 3u);
  EXPECT_EQ(s.switch_times[1], 0.8714067263450243);
  const auto out = verify_stored(s);
  EXPECT_TRUE(out.pass());
  EXPECT_FALSE(out.infeasible);
}

TEST(Io, MalformedResultRejected) {
  EXPECT_THROW(stored_result_from_json(json{{"g_max", 1.0}}), Error);
  auto j = to_json(case_b_result());
  j["piece_values"] = {1.0};
  EXPECT_THROW(stored_result_from_json(j), Error);
}

TEST(Io, PerturbedSwitchNamesSegment) {
  auto j = to_json(case_b_result());
  j["switch_times"][0] = 0.5205577020419371 + 0.05;
  const auto out = verify_stored(stored_result_from_json(j));
  EXPECT_TRUE(out.infeasible);
  EXPECT_FALSE(out.pass());
  ASSERT_TRUE(out.report);
  ASSERT_FALSE(out.report->violations.empty());
  EXPECT_NE(out.report->violations.front().find("segment"), std::string::npos) << out.report->violations.front();
}

TEST(Io, ZeroControlIsUnderdetermined) {
  const auto j = to_json(zero_control_result(1.0, 2.0, "zero"));
  const auto out = verify_stored(stored_result_from_json(j));
  EXPECT_TRUE(out.underdetermined);
  EXPECT_FALSE(out.infeasible);
}

TEST(Io, SweepCsvSchema) {
  std::vector<SweepRow> rows(2);
  rows[0].axis_value = 1.0;
  rows[0].result = case_b_result();
  rows[1].axis_value = 2.0;
  rows[1].status = "error: bad, input";
  std::ostringstream os;
  write_sweep_csv(os, rows, json{{"vary", "g"}});
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "axis_value,r,structure,residual_q2,residual_q3,singular_fraction,status");
  std::getline(is, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  EXPECT_NE(line.find("BBSB"), std::string::npos);
  std::getline(is, line);
  EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  std::getline(is, line);
  EXPECT_EQ(line.rfind("# config ", 0), 0u);
}

TEST(Io, OracleJsonKeys) {
  const auto rep = run_oracle(ControlProfile({{0.2, 0.5}}, 1.0), 12, 12);
  const auto j = to_json(rep);
  for (const char* key : {"na", "nb", "step", "max_moment_error", "entropy_error", "norm_drift", "tail_mass"})
    EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Io, SvgPlotIsWellFormed) {
  std::ostringstream os;
  write_svg_plot(os, {1, 2, 3}, {0.1, 0.5, 0.4}, "T", "r");
  const auto s = os.str();
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("<polyline"), std::string::npos);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
}
