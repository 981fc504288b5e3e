#pragma once

// Moment dynamics of the blue-detuned optomechanical Hamiltonian on the hyperbolic space
// H^3, its geometry, and the entanglement measures derived from it.
//
// All moments use the x2 normalization, so the vacuum is (Q1,Q2,Q3,J0) = (0,0,0,1).

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>

#include "optent/rk4.hpp"
#include "optent/types.hpp"

namespace optent {

inline constexpr double kDefaultMaxStep = 1e-4;
/// Tolerance on |q.q - j0^2 + 1| accepted by operations that require an H^3 point.
inline constexpr double kHyperboloidTol = 1e-8;

/// sqrt(1 + q1^2 + q2^2 + q3^2), i.e. J0 on the upper sheet.
inline double root_term(const ReducedState& s) {
  return std::sqrt(1.0 + s.q1 * s.q1 + s.q2 * s.q2 + s.q3 * s.q3);
}

inline Vec3 reduced_rhs(const ReducedState& s, double g) {
  const double root = root_term(s);
  return {-2.0 * g * (root - s.q3), 2.0 * s.q3, -2.0 * g * s.q1 - 2.0 * s.q2};
}

/// Right-hand side of the 4D (Q,J0) and 6D (K,J) linear moment systems.
inline MomentVector full_moment_rhs(const MomentVector& m, double g) {
  MomentVector d;
  d.q1 = 2.0 * g * m.q3 - 2.0 * g * m.j0;
  d.q2 = 2.0 * m.q3;
  d.q3 = -2.0 * g * m.q1 - 2.0 * m.q2;
  d.j0 = -2.0 * g * m.q1;
  d.k1 = 2.0 * g * m.k3;
  d.k2 = 2.0 * m.k3 + 2.0 * g * m.j3;
  d.k3 = -2.0 * g * m.k1 - 2.0 * m.k2 - 2.0 * g * m.j2;
  d.j1 = 2.0 * g * m.j3;
  d.j2 = -2.0 * g * m.k3 + 2.0 * m.j3;
  d.j3 = 2.0 * g * m.k2 - 2.0 * g * m.j1 - 2.0 * m.j2;
  return d;
}

inline HyperboloidPoint lift(const ReducedState& s) { return {s.q1, s.q2, s.q3, root_term(s)}; }

inline bool on_hyperboloid(const HyperboloidPoint& p, double tol = kHyperboloidTol) {
  return p.j0 > 0.0 && std::abs(p.invariant_defect()) <= tol;
}

inline void require_on_hyperboloid(const HyperboloidPoint& p, const char* name) {
  if (!on_hyperboloid(p))
    throw Error(ErrorKind::NotOnHyperboloid,
                std::string(name) + " has invariant defect " + std::to_string(p.invariant_defect()));
}

/// Minkowski product with signature (+,+,+,-).
inline double minkowski_dot(const HyperboloidPoint& a, const HyperboloidPoint& b) {
  require_on_hyperboloid(a, "first point");
  require_on_hyperboloid(b, "second point");
  return a.q1 * b.q1 + a.q2 * b.q2 + a.q3 * b.q3 - a.j0 * b.j0;
}

/// arccosh(x) for x >= 1, using a series near 1 where acosh loses half its digits.
inline double stable_acosh(double x) {
  const double u = x - 1.0;
  if (u <= 0.0) return 0.0;
  if (u < 1e-8) return std::sqrt(2.0 * u) * (1.0 - u / 12.0);
  return std::acosh(x);
}

inline double geodesic_distance(const HyperboloidPoint& a, const HyperboloidPoint& b) {
  const double c = -minkowski_dot(a, b);
  if (c > 2.0) return stable_acosh(c);
  // Chord form for nearby points: sinh(d/2) = |a - b| / 2.
  const double d1 = a.q1 - b.q1, d2 = a.q2 - b.q2, d3 = a.q3 - b.q3, d0 = a.j0 - b.j0;
  const double chord_sq = d1 * d1 + d2 * d2 + d3 * d3 - d0 * d0;
  return chord_sq > 0.0 ? 2.0 * std::asinh(0.5 * std::sqrt(chord_sq)) : 0.0;
}

/// Squared Minkowski speed of the moment flow at p under coupling g.
inline double speed_sq(const HyperboloidPoint& p, double g) {
  const double d = p.q3 - p.j0;
  return 4.0 * (g * g * d * d + 2.0 * g * p.q1 * p.q2 + p.q2 * p.q2 + p.q3 * p.q3);
}

namespace detail {

template <class State, class Sample, class Rhs, class Convert>
void integrate_profile(const ControlProfile& profile, const State& start, double max_step,
                       std::vector<double>& times, std::vector<Sample>& samples,
                       std::vector<double>& controls, std::vector<std::size_t>* boundaries,
                       const Rhs& rhs, const Convert& convert) {
  if (!(max_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
  State y = start;
  double t0 = 0.0;
  times.push_back(0.0);
  samples.push_back(convert(y));
  if (boundaries) boundaries->push_back(0);
  for (const auto& seg : profile.segments()) {
    const std::size_t n = substeps_for(seg.duration, max_step);
    const double h = seg.duration / static_cast<double>(n);
    const auto f = [&](const State& x) { return rhs(x, seg.g); };
    for (std::size_t k = 1; k <= n; ++k) {
      y = rk4_step(f, y, h);
      for (double v : y)
        if (!std::isfinite(v))
          throw Error(ErrorKind::Divergence, "non-finite state at t = " + std::to_string(t0 + k * h));
      times.push_back(k == n ? t0 + seg.duration : t0 + static_cast<double>(k) * h);
      samples.push_back(convert(y));
      controls.push_back(seg.g);
    }
    t0 += seg.duration;
    if (boundaries) boundaries->push_back(times.size() - 1);
  }
}

}  // namespace detail

/// Fixed-step RK4 integration of the reduced (Q1,Q2,Q3) system, stepping exactly onto
/// every control switch.
inline Trajectory integrate_reduced(const ControlProfile& profile, const ReducedState& start = {},
                                    double max_step = kDefaultMaxStep) {
  Trajectory traj;
  traj.profile = profile;
  const auto rhs = [](const Vec3& y, double g) { return reduced_rhs(ReducedState::from_array(y), g); };
  const auto conv = [](const Vec3& y) { return ReducedState::from_array(y); };
  detail::integrate_profile(profile, start.as_array(), max_step, traj.times, traj.states,
                            traj.controls, &traj.boundaries, rhs, conv);
  return traj;
}

/// Final state only; avoids storing samples.
inline ReducedState propagate_reduced(const ControlProfile& profile, const ReducedState& start = {},
                                      double max_step = kDefaultMaxStep) {
  Vec3 y = start.as_array();
  for (const auto& seg : profile.segments()) {
    const std::size_t n = substeps_for(seg.duration, max_step);
    const double h = seg.duration / static_cast<double>(n);
    const auto f = [&](const Vec3& x) { return reduced_rhs(ReducedState::from_array(x), seg.g); };
    for (std::size_t k = 0; k < n; ++k) y = rk4_step(f, y, h);
    for (double v : y)
      if (!std::isfinite(v)) throw Error(ErrorKind::Divergence, "non-finite state");
  }
  return ReducedState::from_array(y);
}

inline FullTrajectory integrate_full(const ControlProfile& profile,
                                     const MomentVector& start = MomentVector::vacuum(),
                                     double max_step = kDefaultMaxStep) {
  FullTrajectory traj;
  const auto rhs = [](const Vec10& y, double g) {
    return full_moment_rhs(MomentVector::from_array(y), g).as_array();
  };
  const auto conv = [](const Vec10& y) { return MomentVector::from_array(y); };
  detail::integrate_profile(profile, start.as_array(), max_step, traj.times, traj.states,
                            traj.controls, nullptr, rhs, conv);
  return traj;
}

namespace detail {
// (1+x) ln(1+x) - x ln x, the entropy of a thermal-like spectrum with mean occupation x.
inline double bose_entropy(double x) {
  if (x <= 0.0) return 0.0;
  return (1.0 + x) * std::log1p(x) - x * std::log(x);
}
}  // namespace detail

/// Von Neumann entropy of either mode of a two-mode squeezed vacuum with parameter r.
inline double entropy_of_squeezing(double r) {
  if (!(r >= 0.0)) throw Error(ErrorKind::InvalidArgument, "squeezing parameter must be >= 0");
  const double s = std::sinh(r);
  return detail::bose_entropy(s * s);
}

/// Entanglement entropy of a vacuum-seeded state from its H^3 point. The reduced
/// single-mode symplectic eigenvalue is nu = sqrt(1 + q1^2) / 2, and the entropy is
/// h(nu) = (nu + 1/2) ln(nu + 1/2) - (nu - 1/2) ln(nu - 1/2).
inline double entanglement_entropy(const HyperboloidPoint& p) {
  const double q1sq = p.q1 * p.q1;
  // nu - 1/2 = (sqrt(1+q1^2) - 1)/2, written without cancellation.
  const double excess = q1sq / (2.0 * (std::sqrt(1.0 + q1sq) + 1.0));
  return detail::bose_entropy(excess);
}

/// Squeezing parameter of a point on the target manifold (-sinh 2r, 0, 0, cosh 2r).
inline double r_from_final(const HyperboloidPoint& p, double tol) {
  if (std::abs(p.q2) > tol || std::abs(p.q3) > tol)
    throw Error(ErrorKind::NotOnTargetManifold,
                "q2 = " + std::to_string(p.q2) + ", q3 = " + std::to_string(p.q3));
  if (p.q1 > tol) throw Error(ErrorKind::NegativeSqueezing, "q1 = " + std::to_string(p.q1));
  return 0.5 * std::asinh(std::max(0.0, -p.q1));
}

inline double r_from_q1(double q1) { return 0.5 * std::asinh(-q1) + 0.0; }

/// Largest |q.q - j0^2 + 1| over the 4D block of a full-moment trajectory.
inline double max_hyperboloid_drift(const FullTrajectory& traj) {
  double worst = 0.0;
  for (const auto& m : traj.states)
    worst = std::max(worst, std::abs(m.hyperbolic_block().invariant_defect()));
  return worst;
}

inline double max_six_block(const FullTrajectory& traj) {
  double worst = 0.0;
  for (const auto& m : traj.states) worst = std::max(worst, m.six_block_max());
  return worst;
}

/// Writes `t,g,q1,q2,q3,j0,entropy` rows with 17 significant digits. The g column holds the
/// control applied on the interval that starts at the sample (the last row repeats the last
/// interval's value).
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto old_prec = os.precision(17);
  os << "t,g,q1,q2,q3,j0,entropy\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double g = traj.controls.empty()
                         ? 0.0
                         : traj.controls[std::min(i, traj.controls.size() - 1)];
    const auto p = lift(traj.states[i]);
    os << traj.times[i] << ',' << g << ',' << p.q1 << ',' << p.q2 << ',' << p.q3 << ',' << p.j0
       << ',' << entanglement_entropy(p) << '\n';
  }
  os.precision(old_prec);
}

}  // namespace optent
