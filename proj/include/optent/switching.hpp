#pragma once

// Switch-time solver: for a fixed bang/singular structure the only unknowns are the switch
// times, found by damped Newton iterations on the terminal (and singular-entry) conditions.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "optent/hyperbolic.hpp"
#include "optent/pmp.hpp"
#include "optent/result.hpp"
#include "optent/types.hpp"

namespace optent {

struct StructureSimulation {
  ReducedState q_final;
  /// State at the singular entry (BBSB only, otherwise equal to q_final).
  ReducedState q_entry;
  /// Rows (q1T, q2T, q3T), one column per switch time.
  Eigen::MatrixXd sensitivities;
  /// d q1(t2) / d t_k for BBSB; empty otherwise.
  Eigen::RowVectorXd entry_sensitivities;
};

/// Piece values of a structure. `final_sign` only matters for BBSB.
inline std::vector<double> structure_values(Structure s, double g_max, int first_sign, int final_sign) {
  const double a = first_sign * g_max;
  switch (s) {
    case Structure::BB: return {a, -a};
    case Structure::BBB: return {a, -a, a};
    case Structure::BBSB: return {a, -a, 0.0, final_sign * g_max};
    case Structure::OtherGrid: break;
  }
  throw Error(ErrorKind::InvalidArgument, "structure has no fixed piece sequence");
}

inline std::size_t structure_switch_count(Structure s) {
  switch (s) {
    case Structure::BB: return 1;
    case Structure::BBB: return 2;
    case Structure::BBSB: return 3;
    case Structure::OtherGrid: break;
  }
  throw Error(ErrorKind::InvalidArgument, "structure has no fixed piece sequence");
}

namespace detail {

inline void check_switch_times(double horizon, const std::vector<double>& t, std::size_t expected) {
  if (t.size() != expected)
    throw Error(ErrorKind::InvalidArgument, "wrong number of switch times for structure");
  double prev = 0.0;
  for (double v : t) {
    if (!std::isfinite(v) || v < prev)
      throw Error(ErrorKind::InvalidArgument, "switch times must be nondecreasing");
    prev = v;
  }
  if (prev > horizon) throw Error(ErrorKind::InvalidArgument, "switch time beyond horizon");
}

struct PieceStates {
  ReducedState q_final;
  ReducedState q_entry;
};

inline PieceStates simulate_pieces(double g_max, double horizon, const std::vector<double>& t,
                                   const std::vector<double>& values, double max_step,
                                   std::size_t entry_index) {
  PieceStates out;
  ReducedState q{};
  double prev = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double end = i < t.size() ? t[i] : horizon;
    if (end > prev) q = propagate_reduced(ControlProfile({{end - prev, values[i]}}, g_max), q, max_step);
    if (i + 1 == entry_index) out.q_entry = q;
    prev = end;
  }
  out.q_final = q;
  if (entry_index == 0) out.q_entry = q;
  return out;
}

}  // namespace detail

/// Final state of a structure with the given switch times, with central finite-difference
/// sensitivities (step 1e-7 T) to every switch time.
inline StructureSimulation simulate_structure(double g_max, double horizon, Structure structure,
                                              int first_sign, const std::vector<double>& switch_times,
                                              int final_sign = 0, double max_step = kDefaultMaxStep) {
  if (!(g_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "G must be positive");
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be positive");
  if (first_sign != 1 && first_sign != -1)
    throw Error(ErrorKind::InvalidArgument, "first sign must be +1 or -1");
  if (final_sign == 0) final_sign = first_sign;
  const std::size_t k = structure_switch_count(structure);
  detail::check_switch_times(horizon, switch_times, k);
  const auto values = structure_values(structure, g_max, first_sign, final_sign);
  const std::size_t entry = structure == Structure::BBSB ? 2 : 0;

  StructureSimulation out;
  const auto base = detail::simulate_pieces(g_max, horizon, switch_times, values, max_step, entry);
  out.q_final = base.q_final;
  out.q_entry = base.q_entry;
  out.sensitivities.resize(3, static_cast<Eigen::Index>(k));
  if (entry) out.entry_sensitivities.resize(static_cast<Eigen::Index>(k));
  const double h = 1e-7 * horizon;
  for (std::size_t j = 0; j < k; ++j) {
    // Shifted times are clamped to their neighbours, so one-sided steps occur at collapses.
    auto tp = switch_times, tm = switch_times;
    const double lo = j == 0 ? 0.0 : switch_times[j - 1];
    const double hi = j + 1 == k ? horizon : switch_times[j + 1];
    tp[j] = std::min(hi, switch_times[j] + h);
    tm[j] = std::max(lo, switch_times[j] - h);
    const double span = tp[j] - tm[j];
    const auto col = static_cast<Eigen::Index>(j);
    if (!(span > 0.0)) {
      out.sensitivities.col(col).setZero();
      if (entry) out.entry_sensitivities(col) = 0.0;
      continue;
    }
    const auto p = detail::simulate_pieces(g_max, horizon, tp, values, max_step, entry);
    const auto m = detail::simulate_pieces(g_max, horizon, tm, values, max_step, entry);
    out.sensitivities(0, col) = (p.q_final.q1 - m.q_final.q1) / span;
    out.sensitivities(1, col) = (p.q_final.q2 - m.q_final.q2) / span;
    out.sensitivities(2, col) = (p.q_final.q3 - m.q_final.q3) / span;
    if (entry) out.entry_sensitivities(col) = (p.q_entry.q1 - m.q_entry.q1) / span;
  }
  return out;
}

struct SwitchOptions {
  /// Integrator step during the seed search; converged roots are polished at the reference step.
  double search_step = 5e-3;
  double search_tol = 1e-7;
  double residual_tol = 1e-10;
  std::size_t max_newton = 25;
  /// Seed lattices: fractions of T used for every switch time (ordered combinations).
  std::vector<double> bbb_fractions = {0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95};
  std::vector<double> bbsb_fractions = {0.08, 0.2, 0.35, 0.5, 0.65, 0.8, 0.92};
  /// Extra seeds tried first (e.g. from a neighbouring sweep point).
  std::vector<std::vector<double>> extra_seeds;
  /// Roots whose pieces are shorter than this fraction of T are treated as collapsed.
  double min_piece_fraction = 1e-6;
};

namespace detail {

struct NewtonOutcome {
  std::vector<double> times;
  ReducedState q_final;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

inline Eigen::VectorXd switch_residual(const StructureSimulation& sim, Structure s) {
  if (s == Structure::BBSB) return Eigen::Vector3d(sim.q_entry.q1, sim.q_final.q2, sim.q_final.q3);
  return Eigen::Vector2d(sim.q_final.q2, sim.q_final.q3);
}

inline Eigen::MatrixXd switch_jacobian(const StructureSimulation& sim, Structure s) {
  if (s == Structure::BBSB) {
    Eigen::MatrixXd j(3, 3);
    j.row(0) = sim.entry_sensitivities;
    j.row(1) = sim.sensitivities.row(1);
    j.row(2) = sim.sensitivities.row(2);
    return j;
  }
  return sim.sensitivities.bottomRows(2);
}

/// Damped Newton on the structure conditions, keeping 0 <= t_1 <= ... <= T.
inline NewtonOutcome newton_switch(double g_max, double horizon, Structure s, int first_sign,
                                   int final_sign, std::vector<double> t, double step, double tol,
                                   std::size_t max_iterations) {
  NewtonOutcome out;
  auto sim = simulate_structure(g_max, horizon, s, first_sign, t, final_sign, step);
  Eigen::VectorXd f = switch_residual(sim, s);
  for (; out.iterations < max_iterations; ++out.iterations) {
    if (f.lpNorm<Eigen::Infinity>() <= tol) break;
    const Eigen::MatrixXd jac = switch_jacobian(sim, s);
    const Eigen::VectorXd dx = jac.colPivHouseholderQr().solve(-f);
    if (!dx.allFinite()) break;
    double lambda = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 16; ++bt, lambda *= 0.5) {
      std::vector<double> trial = t;
      bool ordered = true;
      double prev = 0.0;
      for (std::size_t j = 0; j < t.size(); ++j) {
        trial[j] = t[j] + lambda * dx(static_cast<Eigen::Index>(j));
        if (!(trial[j] >= prev)) ordered = false;
        prev = trial[j];
      }
      if (!ordered || prev > horizon) continue;
      StructureSimulation trial_sim;
      try {
        trial_sim = simulate_structure(g_max, horizon, s, first_sign, trial, final_sign, step);
      } catch (const Error&) {
        continue;
      }
      const Eigen::VectorXd trial_f = switch_residual(trial_sim, s);
      if (trial_f.lpNorm<Eigen::Infinity>() < f.lpNorm<Eigen::Infinity>()) {
        t = std::move(trial);
        sim = std::move(trial_sim);
        f = trial_f;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.times = std::move(t);
  out.q_final = sim.q_final;
  out.residual = f.lpNorm<Eigen::Infinity>();
  out.converged = out.residual <= tol;
  return out;
}

inline std::vector<std::vector<double>> seed_lattice(const std::vector<double>& fractions,
                                                     std::size_t k, double horizon) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> idx(k);
  const std::size_t m = fractions.size();
  if (m < k) return out;
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    std::vector<double> t(k);
    for (std::size_t i = 0; i < k; ++i) t[i] = fractions[idx[i]] * horizon;
    out.push_back(std::move(t));
    std::size_t i = k;
    while (i-- > 0) {
      if (idx[i] < m - k + i) break;
      if (i == 0) return out;
    }
    ++idx[i];
    for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace detail

/// Optimal switch times for a fixed structure: BBB solves (q2T, q3T) = 0 over (t1, t2);
/// BBSB solves (q1(t2), q2T, q3T) = 0 over (t1, t2, t3) for both final-bang signs. Returns
/// the root with minimal q1T.
inline SolveResult solve_switch_times(double g_max, double horizon, Structure structure, int first_sign,
                                      const SwitchOptions& opt = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  if (!(g_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "G must be positive");
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be positive");
  if (structure != Structure::BBB && structure != Structure::BBSB)
    throw Error(ErrorKind::InvalidArgument, "switch-time solver handles BBB and BBSB");
  if (first_sign != 1 && first_sign != -1)
    throw Error(ErrorKind::InvalidArgument, "first sign must be +1 or -1");

  const std::size_t k = structure_switch_count(structure);
  auto seeds = opt.extra_seeds;
  for (auto& s : detail::seed_lattice(
           structure == Structure::BBB ? opt.bbb_fractions : opt.bbsb_fractions, k, horizon)) seeds.push_back(std::move(s));
  const std::vector<int> final_signs =
      structure == Structure::BBSB ? std::vector<int>{first_sign, -first_sign} : std::vector<int>{first_sign};
  const double min_piece = opt.min_piece_fraction * horizon;

  struct Root {
    std::vector<double> times;
    int final_sign;
    ReducedState q;
  };
  std::vector<Root> roots;
  SolverStats stats;
  for (int fs : final_signs) {
    for (const auto& seed : seeds) {
      if (seed.size() != k) continue;
      auto coarse = detail::newton_switch(g_max, horizon, structure, first_sign, fs, seed,
                                          opt.search_step, opt.search_tol, opt.max_newton);
      stats.iterations += coarse.iterations;
      if (!coarse.converged) continue;
      const bool known = std::any_of(roots.begin(), roots.end(), [&](const Root& r) {
        if (r.final_sign != fs) return false;
        for (std::size_t j = 0; j < k; ++j)
          if (std::abs(r.times[j] - coarse.times[j]) > 1e-5 * horizon) return false;
        return true;
      });
      if (known) continue;
      auto fine = detail::newton_switch(g_max, horizon, structure, first_sign, fs, coarse.times,
                                        kDefaultMaxStep, 0.1 * opt.residual_tol, opt.max_newton);
      stats.iterations += fine.iterations;
      if (fine.residual > opt.residual_tol) continue;
      double prev = 0.0;
      bool proper = true;
      for (std::size_t j = 0; j <= k; ++j) {
        const double end = j < k ? fine.times[j] : horizon;
        if (end - prev < min_piece) proper = false;
        prev = end;
      }
      if (!proper) continue;
      roots.push_back({fine.times, fs, fine.q_final});
    }
  }
  if (roots.empty()) throw Error(ErrorKind::NoRootFound, std::string("no root found for structure ") +
                                                             to_string(structure));
  const auto best = std::min_element(roots.begin(), roots.end(),
                                     [](const Root& a, const Root& b) { return a.q.q1 < b.q.q1; });

  SolveResult res;
  res.g_max = g_max;
  res.horizon = horizon;
  res.method = "switch";
  res.structure = structure;
  res.first_sign = first_sign;
  res.switch_times = best->times;
  res.piece_values = structure_values(structure, g_max, first_sign, best->final_sign);
  res.profile = ControlProfile::from_boundaries(res.switch_times, horizon, res.piece_values, g_max);
  finalize_from_profile(res);
  if (structure == Structure::BBSB) res.singular_fraction = (res.switch_times[2] - res.switch_times[1]) / horizon;
  try {
    res.pmp = verify_candidate(integrate_reduced(res.profile));
  } catch (const Error&) {
    res.pmp.reset();
  }
  stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  res.stats = stats;
  return res;
}

}  // namespace optent
