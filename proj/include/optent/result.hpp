#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "optent/hyperbolic.hpp"
#include "optent/pmp.hpp"
#include "optent/types.hpp"

namespace optent {

inline constexpr double kFeasibilityTol = 1e-8;

enum class Structure { BBB, BBSB, BB, OtherGrid };

inline const char* to_string(Structure s) {
  switch (s) {
    case Structure::BBB: return "BBB";
    case Structure::BBSB: return "BBSB";
    case Structure::BB: return "BB";
    case Structure::OtherGrid: return "other-grid";
  }
  return "?";
}

inline Structure structure_from_string(const std::string& s) {
  if (s == "BBB") return Structure::BBB;
  if (s == "BBSB") return Structure::BBSB;
  if (s == "BB") return Structure::BB;
  if (s == "other-grid") return Structure::OtherGrid;
  throw Error(ErrorKind::InvalidArgument, "unknown structure label '" + s + "'");
}

struct SolverStats {
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double rho_final = 0.0;
  double wall_ms = 0.0;
};

/// One entry of an enumeration: which structure/sign was tried and what it produced.
struct CandidateSummary {
  std::string method;
  Structure structure = Structure::OtherGrid;
  int first_sign = 0;
  bool feasible = false;
  double r = 0.0;
  double objective_q1T = 0.0;
  std::string note;
};

struct SolveResult {
  double g_max = 0.0;
  double horizon = 0.0;
  std::string method;
  Structure structure = Structure::OtherGrid;
  int first_sign = 0;
  std::vector<double> switch_times;
  /// Values of the classified pieces between consecutive switch times.
  std::vector<double> piece_values;
  ControlProfile profile;
  double r = 0.0;
  ReducedState q_final;
  double residual_q2 = 0.0;
  double residual_q3 = 0.0;
  double objective_q1T = 0.0;
  /// Fraction of the horizon spent on g = 0 pieces of the classified structure.
  double singular_fraction = 0.0;
  std::optional<PmpReport> pmp;
  SolverStats stats;
  std::vector<CandidateSummary> candidates;

  bool feasible(double tol = kFeasibilityTol) const {
    return residual_q2 <= tol && residual_q3 <= tol;
  }
  /// Number of constant pieces in the classified structure.
  std::size_t piece_count() const { return switch_times.size() + 1; }
};

/// Fills final state, residuals, objective and r from a simulation of `res.profile`.
inline void finalize_from_profile(SolveResult& res) {
  const ReducedState q = res.profile.empty() ? ReducedState{} : propagate_reduced(res.profile);
  res.q_final = q;
  res.residual_q2 = std::abs(q.q2);
  res.residual_q3 = std::abs(q.q3);
  res.objective_q1T = q.q1;
  res.r = r_from_q1(q.q1);
}

inline SolveResult zero_control_result(double g_max, double horizon, const std::string& method) {
  SolveResult res;
  res.g_max = g_max;
  res.horizon = horizon;
  res.method = method;
  res.structure = Structure::OtherGrid;
  res.piece_values = {0.0};
  res.singular_fraction = horizon > 0.0 ? 1.0 : 0.0;
  res.profile = horizon > 0.0 ? ControlProfile({{horizon, 0.0}}, g_max) : ControlProfile({}, g_max);
  finalize_from_profile(res);
  return res;
}

/// Label for a run-length encoded piece sequence (values are exactly -G, 0 or +G).
inline Structure label_pieces(const std::vector<double>& values) {
  const auto bang = [](double v) { return v != 0.0; };
  const std::size_t n = values.size();
  if (n == 2 && bang(values[0]) && values[1] == -values[0]) return Structure::BB;
  if (n == 3 && bang(values[0]) && values[1] == -values[0] && values[2] == values[0])
    return Structure::BBB;
  if (n == 4 && bang(values[0]) && values[1] == -values[0] && values[2] == 0.0 && bang(values[3]))
    return Structure::BBSB;
  return Structure::OtherGrid;
}

struct GridClassification {
  std::vector<double> values;
  std::vector<double> switch_times;
  Structure structure = Structure::OtherGrid;
  int first_sign = 0;
  double singular_fraction = 0.0;
  /// Fraction of interval controls within `level_tol * G` of {-G, 0, +G}.
  double near_level_fraction = 0.0;
};

/// Clusters interval controls to {-G, 0, +G} (threshold `cluster * G`) and run-length
/// encodes them. Intervals outside every cluster are treated as transitions: each one places
/// the switch between its neighbouring runs so that the integral of g is preserved.
inline GridClassification classify_grid(const std::vector<double>& controls, double bound,
                                        double horizon, double cluster = 0.05,
                                        double level_tol = 1e-3) {
  GridClassification out;
  const std::size_t n = controls.size();
  if (n == 0) return out;
  const double width = horizon / static_cast<double>(n);
  std::vector<int> level(n, 2);  // 2 = transition
  std::size_t near = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = controls[i];
    for (int l : {-1, 0, 1}) {
      const double d = std::abs(u - l * bound);
      if (d <= level_tol * bound) ++near;
      if (d <= cluster * bound) level[i] = l;
    }
  }
  out.near_level_fraction = static_cast<double>(near) / static_cast<double>(n);

  struct Run {
    int level;
    std::size_t first, last;  // inclusive interval indices
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < n; ++i) {
    if (level[i] == 2) continue;
    if (!runs.empty() && runs.back().level == level[i] && runs.back().last + 1 == i) {
      runs.back().last = i;
    } else if (!runs.empty() && runs.back().level == level[i]) {
      // Same level across transition intervals: absorb them.
      runs.back().last = i;
    } else {
      runs.push_back({level[i], i, i});
    }
  }
  if (runs.empty()) return out;

  for (const auto& r : runs) out.values.push_back(r.level * bound);
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const double a = runs[k].level * bound;
    const double b = runs[k + 1].level * bound;
    // Transition intervals between runs[k] and runs[k+1].
    double t = static_cast<double>(runs[k].last + 1) * width;
    for (std::size_t i = runs[k].last + 1; i < runs[k + 1].first; ++i) {
      const double theta = std::clamp((controls[i] - b) / (a - b), 0.0, 1.0);
      t += theta * width;
    }
    out.switch_times.push_back(t);
  }
  out.structure = label_pieces(out.values);
  out.first_sign = out.values.front() > 0.0 ? 1 : (out.values.front() < 0.0 ? -1 : 0);
  double prev = 0.0;
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    const double end = k < out.switch_times.size() ? out.switch_times[k] : horizon;
    if (out.values[k] == 0.0) out.singular_fraction += (end - prev) / horizon;
    prev = end;
  }
  return out;
}

/// Deterministic ordering: smaller q1(T) wins; within `rel_tie` the candidate whose control
/// profile has fewer segments, then the earlier first switch, wins.
inline bool better_candidate(const SolveResult& a, const SolveResult& b, double rel_tie = 1e-7) {
  const double scale = std::max(1.0, std::max(std::abs(a.objective_q1T), std::abs(b.objective_q1T)));
  if (std::abs(a.objective_q1T - b.objective_q1T) > rel_tie * scale)
    return a.objective_q1T < b.objective_q1T;
  const std::size_t na = a.profile.segments().size();
  const std::size_t nb = b.profile.segments().size();
  if (na != nb) return na < nb;
  const double ta = a.switch_times.empty() ? a.horizon : a.switch_times.front();
  const double tb = b.switch_times.empty() ? b.horizon : b.switch_times.front();
  return ta < tb;
}

}  // namespace optent
