#pragma once

// Candidate enumeration over pulse structures and parameter sweeps.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "optent/direct.hpp"
#include "optent/result.hpp"
#include "optent/switching.hpp"

namespace optent {

enum class Method { Direct, Switch, Enumerate };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Direct: return "direct";
    case Method::Switch: return "switch";
    case Method::Enumerate: return "enumerate";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "direct") return Method::Direct;
  if (s == "switch") return Method::Switch;
  if (s == "enumerate") return Method::Enumerate;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + s + "'");
}

struct EnumerateOptions {
  DirectOptions direct;
  SwitchOptions switching;
  /// Run the direct solver as referee alongside the switch-time candidates.
  bool run_direct = true;
};

namespace detail {

inline CandidateSummary summarize(const SolveResult& r, double tol, std::string note = {}) {
  return {r.method, r.structure, r.first_sign, r.feasible(tol), r.r, r.objective_q1T, std::move(note)};
}

}  // namespace detail

/// Switch-time candidates over {BBB, BBSB} x {+, -} plus the direct solver; returns the
/// feasible candidate with minimal q1(T) and records every attempt.
inline SolveResult enumerate_candidates(double g_max, double horizon, const EnumerateOptions& opt = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  if (!(g_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "G must be positive");
  if (!(horizon >= 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be nonnegative");
  const double tol = opt.direct.feasibility_tol;
  SolveResult best = zero_control_result(g_max, horizon, "zero");
  if (horizon == 0.0) {
    best.method = "enumerate";
    return best;
  }
  std::vector<CandidateSummary> log{detail::summarize(best, tol, "baseline")};
  SolverStats stats;
  const auto consider = [&](SolveResult cand) {
    stats.iterations += cand.stats.iterations;
    stats.evaluations += cand.stats.evaluations;
    stats.rho_final = std::max(stats.rho_final, cand.stats.rho_final);
    log.push_back(detail::summarize(cand, tol));
    if (cand.feasible(tol) && better_candidate(cand, best)) best = std::move(cand);
  };
  for (Structure s : {Structure::BBB, Structure::BBSB}) {
    for (int sign : {1, -1}) {
      try {
        consider(solve_switch_times(g_max, horizon, s, sign, opt.switching));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoRootFound) throw;
        CandidateSummary c;
        c.method = "switch";
        c.structure = s;
        c.first_sign = sign;
        c.note = e.what();
        log.push_back(std::move(c));
      }
    }
  }
  if (opt.run_direct) consider(solve_direct(g_max, horizon, opt.direct));
  best.candidates = std::move(log);
  best.stats = stats;
  best.stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  return best;
}

/// Single solve with the chosen method.
inline SolveResult solve(Method method, double g_max, double horizon, const EnumerateOptions& opt = {}) {
  if (horizon == 0.0) {
    if (!(g_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "G must be positive");
    auto res = zero_control_result(g_max, 0.0, to_string(method));
    return res;
  }
  switch (method) {
    case Method::Direct: return solve_direct(g_max, horizon, opt.direct);
    case Method::Switch: {
      // Best switch-time candidate; the zero profile when no structure has a root.
      EnumerateOptions o = opt;
      o.run_direct = false;
      auto res = enumerate_candidates(g_max, horizon, o);
      if (res.method == "zero") res.method = "switch";
      return res;
    }
    case Method::Enumerate: return enumerate_candidates(g_max, horizon, opt);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown method");
}

enum class SweepAxis { G, T };

struct SweepOptions {
  SweepAxis axis = SweepAxis::T;
  double from = 0.0;
  double to = 0.0;
  double step = 0.0;
  /// Value of the parameter that is not swept.
  double fixed = 0.0;
  Method method = Method::Enumerate;
  EnumerateOptions solver;
};

struct SweepRow {
  double axis_value = 0.0;
  std::optional<SolveResult> result;
  std::string status = "ok";
};

/// Inclusive grid from..to with the given step (the end point is kept when it lands within
/// 1e-9 of a step).
inline std::vector<double> sweep_points(double from, double to, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
  if (!std::isfinite(from) || !std::isfinite(to) || to < from)
    throw Error(ErrorKind::InvalidArgument, "empty sweep range");
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-9));
  std::vector<double> pts;
  for (std::size_t i = 0; i <= n; ++i) pts.push_back(from + static_cast<double>(i) * step);
  return pts;
}

/// One solve per grid point, each warm-started from the previous point's solution. Failures
/// are recorded per row and the sweep continues.
inline std::vector<SweepRow> sweep(const SweepOptions& opt) {
  const auto pts = sweep_points(opt.from, opt.to, opt.step);
  std::vector<SweepRow> rows;
  std::optional<SolveResult> prev;
  for (double v : pts) {
    SweepRow row;
    row.axis_value = v;
    const double G = opt.axis == SweepAxis::G ? v : opt.fixed;
    const double T = opt.axis == SweepAxis::T ? v : opt.fixed;
    EnumerateOptions o = opt.solver;
    if (prev) {
      if (prev->method == "direct" || prev->profile.segments().size() == o.direct.intervals) {
        std::vector<double> u = grid_controls(*prev);
        for (auto& x : u) x *= G / prev->g_max;
        o.direct.warm_start = std::move(u);
      }
      if (!prev->switch_times.empty() && prev->horizon > 0.0) {
        std::vector<double> seed = prev->switch_times;
        for (auto& t : seed) t *= T / prev->horizon;
        o.switching.extra_seeds.insert(o.switching.extra_seeds.begin(), seed);
      }
    }
    try {
      row.result = solve(opt.method, G, T, o);
      if (!row.result->feasible(o.direct.feasibility_tol)) row.status = "infeasible";
      prev = row.result;
    } catch (const Error& e) {
      row.status = std::string("error: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace optent
