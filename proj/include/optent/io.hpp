#pragma once

// Result files: SolveResult JSON, sweep CSV, oracle report JSON and a small SVG line plot.

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "optent/fock.hpp"
#include "optent/result.hpp"
#include "optent/solvers.hpp"

namespace optent {

using json = nlohmann::ordered_json;

namespace detail {

/// Non-finite numbers are written as null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

inline json to_json(const PmpReport& p) {
  json j;
  j["status"] = to_string(p.status);
  j["mu2"] = detail::num(p.mu2);
  j["mu3"] = detail::num(p.mu3);
  j["switch_phi_residuals"] = json::array();
  for (double v : p.switch_phi_residuals) j["switch_phi_residuals"].push_back(detail::num(v));
  j["bang_sign_ok"] = json::array();
  for (bool b : p.bang_sign_ok) j["bang_sign_ok"].push_back(b);
  j["max_abs_phi_singular"] = detail::num(p.max_abs_phi_singular);
  j["max_lc_singular"] = detail::num(p.max_lc_singular);
  j["max_abs_q1_singular"] = detail::num(p.max_abs_q1_singular);
  j["pass"] = p.pass;
  j["violations"] = p.violations;
  return j;
}

/// SolveResult in the stable schema; `config` is echoed under "config" when non-null.
inline json to_json(const SolveResult& r, const json& config = nullptr) {
  json j;
  j["g_max"] = r.g_max;
  j["T"] = r.horizon;
  j["method"] = r.method;
  j["structure"] = to_string(r.structure);
  j["first_sign"] = r.first_sign;
  j["switch_times"] = r.switch_times;
  j["piece_values"] = r.piece_values;
  j["r"] = detail::num(r.r);
  j["q_final"] = {r.q_final.q1, r.q_final.q2, r.q_final.q3};
  j["residual_q2"] = r.residual_q2;
  j["residual_q3"] = r.residual_q3;
  j["objective_q1T"] = r.objective_q1T;
  j["singular_fraction"] = r.singular_fraction;
  j["pmp"] = r.pmp ? to_json(*r.pmp) : json(nullptr);
  j["stats"] = {{"iterations", r.stats.iterations},
                {"evaluations", r.stats.evaluations},
                {"rho_final", r.stats.rho_final},
                {"wall_ms", r.stats.wall_ms}};
  j["candidates"] = json::array();
  for (const auto& c : r.candidates) {
    j["candidates"].push_back({{"method", c.method},
                               {"structure", to_string(c.structure)},
                               {"first_sign", c.first_sign},
                               {"feasible", c.feasible},
                               {"r", detail::num(c.r)},
                               {"objective_q1T", detail::num(c.objective_q1T)},
                               {"note", c.note}});
  }
  if (!config.is_null()) j["config"] = config;
  return j;
}

/// What `verify` needs from a result file.
struct StoredResult {
  double g_max = 0.0;
  double horizon = 0.0;
  std::string method;
  Structure structure = Structure::OtherGrid;
  std::vector<double> switch_times;
  std::vector<double> piece_values;
  /// Grid size the result came from (0 when not grid-based).
  std::size_t intervals = 0;
};

inline StoredResult stored_result_from_json(const json& j) {
  StoredResult s;
  try {
    s.g_max = j.at("g_max").get<double>();
    s.horizon = j.at("T").get<double>();
    s.method = j.at("method").get<std::string>();
    s.structure = structure_from_string(j.at("structure").get<std::string>());
    s.switch_times = j.at("switch_times").get<std::vector<double>>();
    s.piece_values = j.at("piece_values").get<std::vector<double>>();
    if (j.contains("config") && j["config"].contains("grid")) s.intervals = j["config"]["grid"].get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed result file: ") + e.what());
  }
  if (!(s.g_max > 0.0) || !(s.horizon >= 0.0))
    throw Error(ErrorKind::InvalidArgument, "malformed result file: g_max and T out of range");
  if (!s.piece_values.empty() && s.piece_values.size() != s.switch_times.size() + 1)
    throw Error(ErrorKind::InvalidArgument, "malformed result file: need one piece value per piece");
  return s;
}

inline ControlProfile stored_profile(const StoredResult& s) {
  if (s.horizon == 0.0 || s.piece_values.empty()) return ControlProfile({}, s.g_max);
  return ControlProfile::from_boundaries(s.switch_times, s.horizon, s.piece_values, s.g_max);
}

struct VerifyOutcome {
  std::optional<PmpReport> report;
  /// No switch conditions to certify (zero-control or single-piece result).
  bool underdetermined = false;
  /// The re-simulated endpoint misses q2 = q3 = 0; the report was then computed without the
  /// feasibility precondition so the offending segment can be named.
  bool infeasible = false;
  std::string endpoint_message;
  ReducedState q_final;

  bool pass() const { return !infeasible && report && report->pass; }
};

/// Re-simulates a stored result and re-runs the minimum-principle check on it.
inline VerifyOutcome verify_stored(const StoredResult& s, double tol_feas = kFeasibilityTol) {
  VerifyOutcome out;
  const auto profile = stored_profile(s);
  if (profile.empty() || s.switch_times.empty()) {
    out.underdetermined = true;
    if (!profile.empty()) out.q_final = propagate_reduced(profile);
    return out;
  }
  const auto traj = integrate_reduced(profile);
  out.q_final = traj.final_state();
  VerifyTolerances tol;
  tol.feasibility = tol_feas;
  if (s.method == "direct" && s.intervals > 0) {
    // Switches read off a grid are located to about one interval.
    const double width = s.horizon / static_cast<double>(s.intervals);
    tol.feasibility = std::numeric_limits<double>::infinity();
    tol.boundary_guard = 2.0 * width;
    tol.phi_singular = std::max(tol.phi_singular, 1e-2 * (1.0 + std::abs(out.q_final.q1)));
  }
  try {
    out.report = verify_candidate(traj, tol);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InfeasibleEndpoint) throw;
    out.infeasible = true;
    out.endpoint_message = e.what();
    tol.feasibility = std::numeric_limits<double>::infinity();
    out.report = verify_candidate(traj, tol);
  }
  out.underdetermined = out.report->status == PmpReport::Status::Underdetermined;
  return out;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, const json& config = nullptr) {
  os << "axis_value,r,structure,residual_q2,residual_q3,singular_fraction,status\n";
  os << std::setprecision(17);
  for (const auto& row : rows) {
    os << row.axis_value << ',';
    if (row.result) {
      const auto& r = *row.result;
      os << r.r << ',' << to_string(r.structure) << ',' << r.residual_q2 << ',' << r.residual_q3 << ','
         << r.singular_fraction;
    } else {
      os << ",,,,";
    }
    std::string status = row.status;
    for (auto& ch : status)
      if (ch == ',' || ch == '\n') ch = ';';
    os << ',' << status << '\n';
  }
  if (!config.is_null()) os << "# config " << config.dump() << '\n';
}

inline json to_json(const OracleReport& r, const json& config = nullptr) {
  json j;
  j["na"] = r.na;
  j["nb"] = r.nb;
  j["step"] = r.step;
  j["max_moment_error"] = r.max_moment_error;
  j["entropy_error"] = r.entropy_error;
  j["norm_drift"] = r.norm_drift;
  j["tail_mass"] = r.tail_mass;
  j["variance_error"] = r.variance_error;
  j["variances"] = {r.variances.var_x, r.variances.var_p};
  j["max_imag"] = r.max_imag;
  j["max_six_block"] = r.max_six_block;
  j["r"] = r.r;
  j["checkpoints"] = r.checkpoints;
  if (!config.is_null()) j["config"] = config;
  return j;
}

/// Line plot of y against x with axes, ticks and labels.
inline void write_svg_plot(std::ostream& os, const std::vector<double>& x, const std::vector<double>& y,
                           const std::string& x_label, const std::string& y_label) {
  const double w = 640, h = 420, ml = 70, mr = 20, mt = 20, mb = 55;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    x0 = std::min(x0, x[i]);
    x1 = std::max(x1, x[i]);
    y0 = std::min(y0, y[i]);
    y1 = std::max(y1, y[i]);
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * (w - ml - mr); };
  const auto py = [&](double v) { return h - mb - (v - y0) / (y1 - y0) * (h - mt - mb); };
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
       << xv << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << yv
       << "</text>\n";
  }
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12 << "\" font-size=\"13\" text-anchor=\"middle\">"
     << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + h - mb) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << (mt + h - mb) / 2 << ")\">" << y_label << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i)
    if (std::isfinite(x[i]) && std::isfinite(y[i])) os << px(x[i]) << ',' << py(y[i]) << ' ';
  os << "\"/>\n</svg>\n";
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  f << contents;
  if (!f) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "malformed JSON in '" + path + "': " + e.what());
  }
}

}  // namespace optent
