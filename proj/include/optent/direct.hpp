#pragma once

// Direct-transcription solver: augmented Lagrangian on the terminal constraints
// q2(T) = q3(T) = 0 with projected L-BFGS inner solves over the interval controls. Seeds are
// solved on a coarse grid, the best one is refined on the full grid, polished on its active
// set, and made feasible on the reference discretization by Gauss-Newton restoration.

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "optent/lbfgs.hpp"
#include "optent/pmp.hpp"
#include "optent/result.hpp"
#include "optent/transcription.hpp"

namespace optent {

struct DirectOptions {
  std::size_t intervals = 4000;
  /// RK4 steps per interval during the optimization phase. Restoration and reporting always
  /// use the reference step rule.
  std::size_t optimization_substeps = 1;
  std::size_t max_outer = 30;
  std::size_t max_inner = 600;
  double feasibility_tol = kFeasibilityTol;
  double rho_initial = 10.0;
  double rho_growth = 10.0;
  double rho_max = 1e3;
  std::size_t random_starts = 3;
  std::uint64_t seed = 20161001;
  /// Optional extra initial guess (interval values), tried first.
  std::optional<std::vector<double>> warm_start;
  /// Seeds are solved on intervals/coarse_factor intervals (0 or 1 disables).
  std::size_t coarse_factor = 8;
  /// Inner iteration cap per outer iteration on the full grid after coarse-to-fine.
  std::size_t refine_max_inner = 50;
  /// Active-set polish of the refined solution.
  bool polish = true;
  std::size_t polish_margin = 2;
  std::size_t polish_max_inner = 600;
  /// Relative objective degradation accepted from the polish.
  double polish_tolerance = 1e-8;
};

namespace detail {

inline std::vector<double> pattern_controls(std::size_t n, double horizon,
                                            const std::vector<double>& switches,
                                            const std::vector<double>& values) {
  std::vector<double> u(n);
  const double w = horizon / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) + 0.5) * w;
    std::size_t k = 0;
    while (k < switches.size() && t > switches[k]) ++k;
    u[i] = values[k];
  }
  return u;
}

/// Resamples interval values onto a grid with n intervals (piecewise-constant).
inline std::vector<double> resample(const std::vector<double>& src, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const auto j = std::min(src.size() - 1, static_cast<std::size_t>(pos * static_cast<double>(src.size())));
    out[i] = src[j];
  }
  return out;
}

struct AlOutcome {
  std::vector<double> controls;
  ReducedState final_state;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double rho = 0.0;
  AugmentedWeights weights;
};

/// Augmented Lagrangian over per-interval bounds [lo, hi]; inner tolerance tightens each
/// outer iteration.
inline AlOutcome augmented_lagrangian(TranscriptionGrid grid, const DirectOptions& opt,
                                      AugmentedWeights w, double constraint_target,
                                      const std::vector<double>& lo, const std::vector<double>& hi) {
  const std::size_t n = grid.size();
  // Gradients are rescaled to densities in time so tolerances do not depend on the grid.
  const double gscale = 1.0 / grid.width();
  AlOutcome out;
  double prev_norm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) grid.controls[i] = std::clamp(grid.controls[i], lo[i], hi[i]);
  ReducedState q = objective_and_constraints(grid);
  double inner_tol = 1e-4 * grid.bound;
  for (std::size_t outer = 0; outer < opt.max_outer; ++outer) {
    auto fg = [&](const std::vector<double>& x, std::vector<double>& g) {
      grid.controls = x;
      const auto v = adjoint_gradient(grid, w);
      for (std::size_t i = 0; i < n; ++i) g[i] = v.gradient[i] * gscale;
      return v.value * gscale;
    };
    BoxLbfgsOptions lopt;
    lopt.max_iterations = opt.max_inner;
    lopt.projected_gradient_tol = inner_tol;
    auto res = minimize_box(fg, grid.controls, lo, hi, lopt);
    grid.controls = res.x;
    out.iterations += res.iterations;
    out.evaluations += res.evaluations;
    q = objective_and_constraints(grid);
    const double cnorm = std::max(std::abs(q.q2), std::abs(q.q3));
    if (cnorm <= constraint_target && inner_tol <= 1e-8 * grid.bound) break;
    w.mu2 += w.rho * q.q2;
    w.mu3 += w.rho * q.q3;
    if (cnorm > 0.25 * prev_norm) w.rho = std::min(opt.rho_max, w.rho * opt.rho_growth);
    prev_norm = cnorm;
    inner_tol = std::max(1e-9 * grid.bound, 0.1 * inner_tol);
  }
  out.controls = grid.controls;
  out.final_state = q;
  out.rho = w.rho;
  out.weights = w;
  return out;
}

inline AlOutcome augmented_lagrangian(const TranscriptionGrid& grid, const DirectOptions& opt,
                                      AugmentedWeights w, double constraint_target) {
  const std::vector<double> lo(grid.size(), -grid.bound), hi(grid.size(), grid.bound);
  return augmented_lagrangian(grid, opt, w, constraint_target, lo, hi);
}

/// Per-interval bounds that pin every interval clustered at -G, 0 or +G to its level, and
/// leave free the unclustered intervals plus `margin` intervals on each side of every level
/// change.
inline void active_set_bounds(const std::vector<double>& u, double bound, double cluster,
                              std::size_t margin, std::vector<double>& lo, std::vector<double>& hi) {
  const std::size_t n = u.size();
  std::vector<int> level(n, 2);
  for (std::size_t i = 0; i < n; ++i)
    for (int l : {-1, 0, 1})
      if (std::abs(u[i] - l * bound) <= cluster * bound) level[i] = l;
  std::vector<char> free(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const bool change = level[i] == 2 || (i + 1 < n && level[i + 1] != level[i]);
    if (!change) continue;
    const std::size_t a = i >= margin ? i - margin : 0;
    const std::size_t b = std::min(n - 1, i + 1 + margin);
    for (std::size_t j = a; j <= b; ++j) free[j] = 1;
  }
  lo.assign(n, -bound);
  hi.assign(n, bound);
  for (std::size_t i = 0; i < n; ++i) {
    if (free[i]) continue;
    lo[i] = hi[i] = level[i] * bound;
  }
}

}  // namespace detail

/// Gauss-Newton minimal-norm correction of the controls that are strictly inside the bounds
/// until |q2(T)|, |q3(T)| <= tol. Returns the final state.
inline ReducedState restore_feasibility(TranscriptionGrid& grid, double tol,
                                        const std::vector<double>& lo, const std::vector<double>& hi,
                                        std::size_t max_iterations = 12) {
  std::vector<Vec3> tape;
  ReducedState q = propagate_grid(grid, &tape);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    if (std::abs(q.q2) <= 0.1 * tol && std::abs(q.q3) <= 0.1 * tol) break;
    const auto g2 = terminal_vjp(grid, tape, {0.0, 1.0, 0.0});
    const auto g3 = terminal_vjp(grid, tape, {0.0, 0.0, 1.0});
    const std::size_t n = grid.size();
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i)
      if (lo[i] < hi[i] && grid.controls[i] > lo[i] + 1e-9 * grid.bound &&
          grid.controls[i] < hi[i] - 1e-9 * grid.bound)
        free.push_back(i);
    if (free.size() < 2) {
      free.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (lo[i] < hi[i]) free.push_back(i);
    }
    Eigen::MatrixXd jac(2, static_cast<Eigen::Index>(free.size()));
    for (std::size_t k = 0; k < free.size(); ++k) {
      jac(0, static_cast<Eigen::Index>(k)) = g2[free[k]];
      jac(1, static_cast<Eigen::Index>(k)) = g3[free[k]];
    }
    const Eigen::Matrix2d jjt = jac * jac.transpose();
    const Eigen::Vector2d c(q.q2, q.q3);
    const Eigen::Vector2d y = jjt.ldlt().solve(-c);
    const Eigen::VectorXd delta = jac.transpose() * y;
    const std::vector<double> saved = grid.controls;
    double step = 1.0;
    const double cnorm = std::max(std::abs(q.q2), std::abs(q.q3));
    bool improved = false;
    for (int bt = 0; bt < 20; ++bt) {
      for (std::size_t k = 0; k < free.size(); ++k)
        grid.controls[free[k]] = std::clamp(saved[free[k]] + step * delta(static_cast<Eigen::Index>(k)),
                                            lo[free[k]], hi[free[k]]);
      const ReducedState trial = propagate_grid(grid, &tape);
      if (std::max(std::abs(trial.q2), std::abs(trial.q3)) < cnorm) {
        q = trial;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      grid.controls = saved;
      q = propagate_grid(grid, &tape);
      break;
    }
  }
  return q;
}

inline ReducedState restore_feasibility(TranscriptionGrid& grid, double tol) {
  const std::vector<double> lo(grid.size(), -grid.bound), hi(grid.size(), grid.bound);
  return restore_feasibility(grid, tol, lo, hi);
}

/// Builds the exact bang/singular profile a grid solution is read as.
inline std::optional<ControlProfile> classified_profile(const GridClassification& cls, double horizon,
                                                        double bound) {
  if (cls.values.empty()) return std::nullopt;
  try {
    return ControlProfile::from_boundaries(cls.switch_times, horizon, cls.values, bound);
  } catch (const Error&) {
    return std::nullopt;
  }
}

/// Certificate of a grid solution: the minimum principle is checked on its classified
/// bang/singular profile. Switch locations are only known to about one interval, so the
/// endpoint tolerance and the sign-check guard are widened accordingly.
inline std::optional<PmpReport> verify_grid_solution(const GridClassification& cls, double horizon,
                                                     double bound, std::size_t intervals) {
  const auto prof = classified_profile(cls, horizon, bound);
  if (!prof || prof->empty()) return std::nullopt;
  const auto traj = integrate_reduced(*prof);
  VerifyTolerances tol;
  const double width = horizon / static_cast<double>(intervals);
  tol.feasibility = std::numeric_limits<double>::infinity();
  tol.boundary_guard = 2.0 * width;
  tol.phi_singular = std::max(tol.phi_singular, 1e-2 * (1.0 + std::abs(traj.final_state().q1)));
  return verify_candidate(traj, tol);
}

/// Interval controls of a grid-based result.
inline std::vector<double> grid_controls(const SolveResult& res) {
  std::vector<double> u;
  u.reserve(res.profile.segments().size());
  for (const auto& s : res.profile.segments()) u.push_back(s.g);
  return u;
}

/// Maximizes r on an equal-width grid of `opt.intervals` controls.
inline SolveResult solve_direct(double g_max, double horizon, const DirectOptions& opt = {}) {
  const auto t_start = std::chrono::steady_clock::now();
  if (!(g_max > 0.0)) throw Error(ErrorKind::InvalidArgument, "G must be positive");
  if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be positive");
  if (opt.intervals < kMinGridIntervals)
    throw Error(ErrorKind::InvalidArgument, "grid needs at least 100 intervals");

  const std::size_t n = opt.intervals;
  SolveResult best = zero_control_result(g_max, horizon, "direct");
  {
    // The zero profile is the feasible baseline, expressed on the grid.
    std::vector<Segment> segs(n, Segment{horizon / static_cast<double>(n), 0.0});
    best.profile = ControlProfile(std::move(segs), g_max);
  }
  if (opt.max_outer == 0 || opt.max_inner == 0) {
    best.stats.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    return best;
  }

  // Multi-start seeds.
  std::vector<std::vector<double>> seeds;
  if (opt.warm_start) seeds.push_back(*opt.warm_start);
  seeds.push_back(std::vector<double>(n, 0.0));
  const double G = g_max, T = horizon;
  seeds.push_back(detail::pattern_controls(n, T, {0.5 * T, 0.75 * T}, {G, -G, G}));
  seeds.push_back(detail::pattern_controls(n, T, {0.5 * T, 0.75 * T}, {-G, G, -G}));
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t s = 0; s < opt.random_starts; ++s) {
    const std::size_t k = 2 + static_cast<std::size_t>(unif(rng) * 2.0);
    std::vector<double> sw(k);
    for (auto& t : sw) t = (0.05 + 0.9 * unif(rng)) * T;
    std::sort(sw.begin(), sw.end());
    const double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
    std::vector<double> vals(k + 1);
    for (std::size_t j = 0; j <= k; ++j) {
      // Bang pattern with an optional g = 0 piece before the final bang.
      if (j + 1 == k && k >= 3 && unif(rng) < 0.5) {
        vals[j] = 0.0;
      } else {
        vals[j] = ((j % 2 == 0) ? sign : -sign) * G;
      }
    }
    seeds.push_back(detail::pattern_controls(n, T, sw, vals));
  }

  SolverStats stats;
  const auto account = [&](const detail::AlOutcome& al) {
    stats.iterations += al.iterations;
    stats.evaluations += al.evaluations;
    stats.rho_final = std::max(stats.rho_final, al.rho);
  };

  // Every seed is solved on the coarse grid; only the best coarse solution is refined.
  const bool two_level = opt.coarse_factor > 1 && n / opt.coarse_factor >= kMinGridIntervals;
  const std::size_t nc = two_level ? n / opt.coarse_factor : n;
  std::optional<detail::AlOutcome> chosen;
  double chosen_q1 = 0.0;
  for (const auto& seed : seeds) {
    TranscriptionGrid grid(G, T, nc, opt.optimization_substeps);
    grid.controls = detail::resample(seed, nc);
    grid.project();
    auto al = detail::augmented_lagrangian(grid, opt, {0.0, 0.0, opt.rho_initial},
                                           two_level ? 1e-6 : 0.1 * opt.feasibility_tol);
    account(al);
    TranscriptionGrid ref(G, T, nc, TranscriptionGrid::reference_substeps(T, nc));
    ref.controls = al.controls;
    const auto q = restore_feasibility(ref, two_level ? 1e-6 : opt.feasibility_tol);
    if (std::max(std::abs(q.q2), std::abs(q.q3)) > (two_level ? 1e-6 : opt.feasibility_tol)) continue;
    if (!chosen || q.q1 < chosen_q1) {
      chosen_q1 = q.q1;
      al.controls = ref.controls;
      chosen = std::move(al);
    }
  }

  const auto to_result = [&](const TranscriptionGrid& ref) {
    SolveResult cand;
    cand.g_max = G;
    cand.horizon = T;
    cand.method = "direct";
    cand.profile = ref.profile();
    finalize_from_profile(cand);
    const auto cls = classify_grid(ref.controls, G, T);
    cand.structure = cls.structure;
    cand.first_sign = cls.first_sign;
    cand.switch_times = cls.switch_times;
    cand.piece_values = cls.values;
    cand.singular_fraction = cls.singular_fraction;
    return cand;
  };

  if (chosen) {
    AugmentedWeights w = chosen->weights;
    std::vector<double> start = chosen->controls;
    if (two_level) {
      TranscriptionGrid grid(G, T, n, opt.optimization_substeps);
      grid.controls = detail::resample(start, n);
      DirectOptions fine = opt;
      fine.max_inner = std::min(opt.max_inner, opt.refine_max_inner);
      auto al = detail::augmented_lagrangian(grid, fine, w, 0.1 * opt.feasibility_tol);
      account(al);
      start = al.controls;
      w = al.weights;
    }
    TranscriptionGrid ref(G, T, n, TranscriptionGrid::reference_substeps(T, n));
    ref.controls = start;
    restore_feasibility(ref, opt.feasibility_tol);
    SolveResult cand = to_result(ref);
    if (cand.feasible(opt.feasibility_tol) && cand.objective_q1T < best.objective_q1T) best = cand;

    // Active-set polish: intervals clustered at a level are pinned to it and the intervals
    // around each level change are re-optimized. The second pass snaps every interval to its
    // nearest level. A pass is kept only if the objective does not degrade.
    if (opt.polish && best.method == "direct" && best.feasible(opt.feasibility_tol) &&
        best.profile.segments().size() == n) {
      const double reference_q1 = best.objective_q1T;
      const double slack = opt.polish_tolerance * std::max(1.0, std::abs(reference_q1));
      const std::pair<double, std::size_t> passes[] = {{0.05, opt.polish_margin}, {0.5, 0}};
      for (const auto& [cluster, margin] : passes) {
        const std::vector<double> current = grid_controls(best);
        std::vector<double> lo, hi;
        detail::active_set_bounds(current, G, cluster, margin, lo, hi);
        TranscriptionGrid grid(G, T, n, opt.optimization_substeps);
        grid.controls = current;
        DirectOptions popt = opt;
        popt.max_inner = std::min(opt.max_inner, opt.polish_max_inner);
        auto al = detail::augmented_lagrangian(grid, popt, w, 0.1 * opt.feasibility_tol, lo, hi);
        account(al);
        TranscriptionGrid pref(G, T, n, TranscriptionGrid::reference_substeps(T, n));
        pref.controls = al.controls;
        restore_feasibility(pref, opt.feasibility_tol, lo, hi);
        SolveResult pol = to_result(pref);
        if (pol.feasible(opt.feasibility_tol) && pol.objective_q1T <= reference_q1 + slack)
          best = std::move(pol);
      }
    }
  }
  if (best.profile.segments().size() == n && best.objective_q1T < 0.0) {
    const auto cls = classify_grid(grid_controls(best), G, T);
    best.pmp = verify_grid_solution(cls, T, G, n);
  }
  stats.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
  best.stats = stats;
  return best;
}


}  // namespace optent
