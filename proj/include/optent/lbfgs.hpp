#pragma once

// Projected limited-memory BFGS for simple bounds lo <= x <= hi.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

namespace optent {

struct BoxLbfgsOptions {
  std::size_t max_iterations = 500;
  std::size_t memory = 12;
  /// Stop when max_i |x_i - P(x_i - g_i)| falls below this.
  double projected_gradient_tol = 1e-10;
  /// Stop when the objective stalls at this relative level for `stall_window` iterations.
  double relative_decrease_tol = 1e-15;
  std::size_t stall_window = 8;
  double armijo = 1e-4;
  std::size_t max_backtracks = 40;
};

struct BoxLbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  double projected_gradient = 0.0;
  bool converged = false;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// Minimizes f over the box. `fg(x, grad)` returns f(x) and fills grad.
template <class ValueAndGradient>
BoxLbfgsResult minimize_box(ValueAndGradient&& fg, std::vector<double> x,
                            const std::vector<double>& lo, const std::vector<double>& hi,
                            const BoxLbfgsOptions& opt = {}) {
  const std::size_t n = x.size();
  const auto project = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
  };
  const auto projected_gradient = [&](const std::vector<double>& v, const std::vector<double>& g) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      m = std::max(m, std::abs(std::clamp(v[i] - g[i], lo[i], hi[i]) - v[i]));
    return m;
  };

  project(x);
  std::vector<double> g(n), g_new(n), x_new(n), d(n), q(n);
  BoxLbfgsResult res;
  double f = fg(x, g);
  res.evaluations = 1;

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> alpha(opt.memory);
  std::size_t stall = 0;

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    res.projected_gradient = projected_gradient(x, g);
    if (res.projected_gradient <= opt.projected_gradient_tol) {
      res.converged = true;
      break;
    }

    // Variables held at a bound by the gradient stay fixed for this step.
    std::vector<char> active(n, 0);
    const double width_eps = 1e-12;
    for (std::size_t i = 0; i < n; ++i) {
      if ((x[i] <= lo[i] + width_eps * (hi[i] - lo[i]) && g[i] > 0.0) ||
          (x[i] >= hi[i] - width_eps * (hi[i] - lo[i]) && g[i] < 0.0))
        active[i] = 1;
    }

    // Two-loop recursion on the free subspace.
    for (std::size_t i = 0; i < n; ++i) q[i] = active[i] ? 0.0 : g[i];
    const std::size_t m = s_hist.size();
    for (std::size_t k = m; k-- > 0;) {
      alpha[k] = rho_hist[k] * detail::dot(s_hist[k], q);
      for (std::size_t i = 0; i < n; ++i)
        if (!active[i]) q[i] -= alpha[k] * y_hist[k][i];
    }
    double gamma = 1.0;
    if (m > 0) gamma = detail::dot(s_hist[m - 1], y_hist[m - 1]) / detail::dot(y_hist[m - 1], y_hist[m - 1]);
    for (std::size_t i = 0; i < n; ++i) q[i] = active[i] ? 0.0 : gamma * q[i];
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho_hist[k] * detail::dot(y_hist[k], q);
      for (std::size_t i = 0; i < n; ++i)
        if (!active[i]) q[i] += (alpha[k] - beta) * s_hist[k][i];
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = -q[i];

    double slope = detail::dot(d, g);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = active[i] ? 0.0 : -g[i];
      slope = detail::dot(d, g);
      if (!(slope < 0.0)) {
        res.converged = true;
        break;
      }
    }

    double step = 1.0;
    if (m == 0) {
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      double span = 0.0;
      for (std::size_t i = 0; i < n; ++i) span = std::max(span, hi[i] - lo[i]);
      if (dmax > 0.0) step = std::min(1.0, 0.1 * span / dmax);
    }

    double f_new = f;
    bool accepted = false;
    for (std::size_t bt = 0; bt < opt.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + step * d[i];
      project(x_new);
      double decrease = 0.0;
      for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (x_new[i] - x[i]);
      f_new = fg(x_new, g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && f_new <= f + opt.armijo * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 1e-12 * std::sqrt(detail::dot(s, s) * detail::dot(y, y))) {
      if (s_hist.size() == opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }

    const double rel = (f - f_new) / std::max(1.0, std::abs(f));
    stall = rel <= opt.relative_decrease_tol ? stall + 1 : 0;
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    if (stall >= opt.stall_window) break;
  }
  res.x = std::move(x);
  res.value = f;
  return res;
}

}  // namespace optent
