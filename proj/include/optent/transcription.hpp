#pragma once

// Direct transcription of the max-squeezing problem: one control value per equal-width
// interval, RK4 propagation inside each interval, and reverse-mode (discrete adjoint)
// derivatives of terminal functionals with respect to every interval control.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "optent/hyperbolic.hpp"
#include "optent/types.hpp"

namespace optent {

inline constexpr std::size_t kMinGridIntervals = 100;

struct TranscriptionGrid {
  double bound = 1.0;   // G
  double horizon = 0.0; // T
  std::vector<double> controls;
  /// RK4 steps per interval.
  std::size_t substeps = 1;

  TranscriptionGrid() = default;
  TranscriptionGrid(double g_max, double t_final, std::size_t intervals, std::size_t steps_per_interval)
      : bound(g_max), horizon(t_final), controls(intervals, 0.0), substeps(steps_per_interval) {
    validate();
  }

  /// Step rule of the reference integrator applied to one interval.
  static std::size_t reference_substeps(double t_final, std::size_t intervals) {
    return substeps_for(t_final / static_cast<double>(intervals), kDefaultMaxStep);
  }

  std::size_t size() const { return controls.size(); }
  double width() const { return horizon / static_cast<double>(controls.size()); }

  void validate() const {
    if (!(bound > 0.0)) throw Error(ErrorKind::InvalidArgument, "G must be positive");
    if (!(horizon > 0.0)) throw Error(ErrorKind::InvalidArgument, "T must be positive");
    if (controls.size() < kMinGridIntervals)
      throw Error(ErrorKind::InvalidArgument, "grid needs at least 100 intervals");
    if (substeps < 1) throw Error(ErrorKind::InvalidArgument, "substeps must be >= 1");
  }

  void project() {
    for (auto& u : controls) u = std::clamp(u, -bound, bound);
  }

  ControlProfile profile() const {
    std::vector<Segment> segs;
    segs.reserve(controls.size());
    for (double u : controls) segs.push_back({width(), u});
    return ControlProfile(std::move(segs), bound);
  }
};

namespace detail {

struct ReducedJacobian {
  // J_q^T v and J_g^T v of reduced_rhs at s.
  static Vec3 state_vjp(const Vec3& s, double g, const Vec3& v) {
    const double root = std::sqrt(1.0 + s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
    const double a = -2.0 * g * v[0];
    return {a * s[0] / root - 2.0 * g * v[2], a * s[1] / root - 2.0 * v[2],
            a * (s[2] / root - 1.0) + 2.0 * v[1]};
  }
  static double control_vjp(const Vec3& s, const Vec3& v) {
    const double root = std::sqrt(1.0 + s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
    return -2.0 * (root - s[2]) * v[0] - 2.0 * s[0] * v[2];
  }
};

inline Vec3 rhs3(const Vec3& y, double g) { return reduced_rhs(ReducedState::from_array(y), g); }

inline Vec3 shifted(const Vec3& y, double a, const Vec3& k) {
  return {y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]};
}

}  // namespace detail

/// Forward sweep from the origin; stores the state at the start of every RK4 step when
/// `tape` is non-null.
inline ReducedState propagate_grid(const TranscriptionGrid& grid, std::vector<Vec3>* tape = nullptr) {
  const double h = grid.width() / static_cast<double>(grid.substeps);
  Vec3 y{0.0, 0.0, 0.0};
  if (tape) {
    tape->clear();
    tape->reserve(grid.size() * grid.substeps);
  }
  for (double u : grid.controls) {
    const auto f = [u](const Vec3& x) { return detail::rhs3(x, u); };
    for (std::size_t k = 0; k < grid.substeps; ++k) {
      if (tape) tape->push_back(y);
      y = rk4_step(f, y, h);
    }
  }
  if (!ReducedState::from_array(y).finite())
    throw Error(ErrorKind::Divergence, "non-finite final state on transcription grid");
  return ReducedState::from_array(y);
}

/// (q1(T), q2(T), q3(T)) reached from the origin under the grid controls.
inline ReducedState objective_and_constraints(const TranscriptionGrid& grid) {
  grid.validate();
  return propagate_grid(grid);
}

/// Gradient of cotangent . q(T) with respect to the interval controls, given the tape of a
/// forward sweep. Exact derivative of the discrete RK4 map.
inline std::vector<double> terminal_vjp(const TranscriptionGrid& grid, const std::vector<Vec3>& tape,
                                        const Vec3& cotangent) {
  using detail::ReducedJacobian;
  const double h = grid.width() / static_cast<double>(grid.substeps);
  std::vector<double> grad(grid.size(), 0.0);
  Vec3 ybar = cotangent;
  std::size_t step = tape.size();
  for (std::size_t j = grid.size(); j-- > 0;) {
    const double u = grid.controls[j];
    double ubar = 0.0;
    for (std::size_t k = grid.substeps; k-- > 0;) {
      const Vec3& y = tape[--step];
      const Vec3 k1 = detail::rhs3(y, u);
      const Vec3 z2 = detail::shifted(y, 0.5 * h, k1);
      const Vec3 k2 = detail::rhs3(z2, u);
      const Vec3 z3 = detail::shifted(y, 0.5 * h, k2);
      const Vec3 k3 = detail::rhs3(z3, u);
      const Vec3 z4 = detail::shifted(y, h, k3);

      Vec3 k1bar, k2bar, k3bar;
      const Vec3 k4bar{h / 6.0 * ybar[0], h / 6.0 * ybar[1], h / 6.0 * ybar[2]};
      for (int i = 0; i < 3; ++i) {
        k1bar[i] = h / 6.0 * ybar[i];
        k2bar[i] = h / 3.0 * ybar[i];
        k3bar[i] = h / 3.0 * ybar[i];
      }
      Vec3 yb = ybar;
      // k4 = f(z4), z4 = y + h k3
      const Vec3 z4bar = ReducedJacobian::state_vjp(z4, u, k4bar);
      ubar += ReducedJacobian::control_vjp(z4, k4bar);
      for (int i = 0; i < 3; ++i) {
        yb[i] += z4bar[i];
        k3bar[i] += h * z4bar[i];
      }
      // k3 = f(z3), z3 = y + h/2 k2
      const Vec3 z3bar = ReducedJacobian::state_vjp(z3, u, k3bar);
      ubar += ReducedJacobian::control_vjp(z3, k3bar);
      for (int i = 0; i < 3; ++i) {
        yb[i] += z3bar[i];
        k2bar[i] += 0.5 * h * z3bar[i];
      }
      // k2 = f(z2), z2 = y + h/2 k1
      const Vec3 z2bar = ReducedJacobian::state_vjp(z2, u, k2bar);
      ubar += ReducedJacobian::control_vjp(z2, k2bar);
      for (int i = 0; i < 3; ++i) {
        yb[i] += z2bar[i];
        k1bar[i] += 0.5 * h * z2bar[i];
      }
      // k1 = f(y)
      const Vec3 y1bar = ReducedJacobian::state_vjp(y, u, k1bar);
      ubar += ReducedJacobian::control_vjp(y, k1bar);
      for (int i = 0; i < 3; ++i) yb[i] += y1bar[i];
      ybar = yb;
    }
    grad[j] = ubar;
  }
  return grad;
}

/// Weights of the augmented Lagrangian q1(T) + mu2 q2(T) + mu3 q3(T) + rho/2 (q2^2 + q3^2).
struct AugmentedWeights {
  double mu2 = 0.0;
  double mu3 = 0.0;
  double rho = 0.0;
};

struct AugmentedValue {
  double value = 0.0;
  ReducedState final_state;
  std::vector<double> gradient;
};

inline double augmented_value(const ReducedState& q, const AugmentedWeights& w) {
  return q.q1 + w.mu2 * q.q2 + w.mu3 * q.q3 + 0.5 * w.rho * (q.q2 * q.q2 + q.q3 * q.q3);
}

/// Augmented-Lagrangian value and its gradient over the interval controls.
inline AugmentedValue adjoint_gradient(const TranscriptionGrid& grid, const AugmentedWeights& w) {
  grid.validate();
  std::vector<Vec3> tape;
  AugmentedValue out;
  out.final_state = propagate_grid(grid, &tape);
  const auto& q = out.final_state;
  out.value = augmented_value(q, w);
  const Vec3 cot{1.0, w.mu2 + w.rho * q.q2, w.mu3 + w.rho * q.q3};
  out.gradient = terminal_vjp(grid, tape, cot);
  return out;
}

}  // namespace optent
