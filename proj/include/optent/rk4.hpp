#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace optent {

// y += a * x for array-like states (std::array, std::vector, complex entries).
template <class State>
inline void axpy(State& y, double a, const State& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/// One classic 4th-order Runge-Kutta step of dy/dt = rhs(y) (autonomous: the control is
/// constant over each step by construction).
template <class State, class Rhs>
State rk4_step(const Rhs& rhs, const State& y, double h) {
  const State k1 = rhs(y);
  State tmp = y;
  axpy(tmp, 0.5 * h, k1);
  const State k2 = rhs(tmp);
  tmp = y;
  axpy(tmp, 0.5 * h, k2);
  const State k3 = rhs(tmp);
  tmp = y;
  axpy(tmp, h, k3);
  const State k4 = rhs(tmp);
  State out = y;
  axpy(out, h / 6.0, k1);
  axpy(out, h / 3.0, k2);
  axpy(out, h / 3.0, k3);
  axpy(out, h / 6.0, k4);
  return out;
}

/// Number of equal substeps used for a constant-control segment: the step never exceeds
/// `max_step` nor a sixteenth of the segment, and the last step lands on the segment end.
inline std::size_t substeps_for(double duration, double max_step) {
  const double h = std::min(max_step, duration / 16.0);
  const double n = std::ceil(duration / h - 1e-9);
  return static_cast<std::size_t>(std::max(1.0, n));
}

}  // namespace optent
