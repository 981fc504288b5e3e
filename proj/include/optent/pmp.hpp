#pragma once

// Minimum-principle machinery for min Q1(T) s.t. Q2(T) = Q3(T) = 0, |g| <= G: costates,
// switching function, singular-arc conditions, and a certificate check for candidate
// controls.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "optent/hyperbolic.hpp"
#include "optent/types.hpp"

namespace optent {

struct Costate {
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;

  Vec3 as_array() const { return {l1, l2, l3}; }
  static Costate from_array(const Vec3& v) { return {v[0], v[1], v[2]}; }
  double norm() const { return std::sqrt(l1 * l1 + l2 * l2 + l3 * l3); }
};

inline double control_hamiltonian(const ReducedState& s, const Costate& c, double g) {
  const double root = root_term(s);
  return 2.0 * g * (-c.l1 * root + c.l1 * s.q3 - c.l3 * s.q1) +
         2.0 * (c.l2 * s.q3 - c.l3 * s.q2);
}

/// Adjoint equations, dl/dt = -dH_c/dq.
inline Vec3 costate_rhs(const ReducedState& s, const Costate& c, double g) {
  const double root = root_term(s);
  return {2.0 * g * (c.l1 * s.q1 / root + c.l3),
          2.0 * (g * c.l1 * s.q2 / root + c.l3),
          2.0 * (g * (c.l1 * s.q3 / root - c.l1) - c.l2)};
}

/// Coefficient of g in H_c / 2.
inline double switching_function(const ReducedState& s, const Costate& c) {
  return -c.l1 * (root_term(s) - s.q3) - c.l3 * s.q1;
}

/// d(Phi)/dt along the coupled state/costate flow, by the chain rule.
inline double switching_function_rate(const ReducedState& s, const Costate& c, double g) {
  const double root = root_term(s);
  const Vec3 ds = reduced_rhs(s, g);
  const Vec3 dc = costate_rhs(s, c, g);
  // dPhi/dq = (-l1 q1/R - l3, -l1 q2/R, -l1 (q3/R - 1)); dPhi/dl = (-(R - q3), 0, -q1).
  const double grad_q1 = -c.l1 * s.q1 / root - c.l3;
  const double grad_q2 = -c.l1 * s.q2 / root;
  const double grad_q3 = -c.l1 * (s.q3 / root - 1.0);
  return grad_q1 * ds[0] + grad_q2 * ds[1] + grad_q3 * ds[2] - (root - s.q3) * dc[0] -
         s.q1 * dc[2];
}

struct ControlDecision {
  bool singular = false;
  double g = 0.0;  // +-G when not singular
};

/// Minimizer of H_c over |g| <= G with a dead zone of half-width eps_phi around Phi = 0.
inline ControlDecision pmp_control(double phi, double bound, double eps_phi) {
  if (phi < -eps_phi) return {false, bound};
  if (phi > eps_phi) return {false, -bound};
  return {true, 0.0};
}

/// Left-hand side of the generalized Legendre-Clebsch condition; must be <= 0 on a
/// singular arc.
inline double legendre_clebsch_lhs(const ReducedState& s, const Costate& c) {
  return c.l2 * (s.q3 - root_term(s)) - c.l3 * s.q2;
}

struct SingularResiduals {
  double phi = 0.0;       // (R - q3) l1 + q1 l3
  double phi_dot = 0.0;   // -q2 l1 + q1 l2
  double phi_ddot = 0.0;  // -q3 l1 + g (q3 - R) l2 + (q1 - g q2) l3
};

/// Left-hand sides of Phi = dPhi/dt = d2Phi/dt2 = 0 (positive prefactors dropped). `g`
/// defaults to the singular control.
inline SingularResiduals singular_conditions(const ReducedState& s, const Costate& c,
                                             double g = 0.0) {
  const double root = root_term(s);
  return {(root - s.q3) * c.l1 + s.q1 * c.l3, -s.q2 * c.l1 + s.q1 * c.l2,
          -s.q3 * c.l1 + g * (s.q3 - root) * c.l2 + (s.q1 - g * s.q2) * c.l3};
}

struct ExtremalSample {
  double t = 0.0;
  ReducedState state;
  Costate costate;
};

/// Forward RK4 integration of the coupled (state, costate) system at constant g.
inline std::vector<ExtremalSample> integrate_extremal(const ReducedState& s0, const Costate& c0,
                                                      double g, double duration,
                                                      double max_step = kDefaultMaxStep) {
  using Vec6 = std::array<double, 6>;
  const auto rhs = [g](const Vec6& y) {
    const ReducedState s{y[0], y[1], y[2]};
    const Costate c{y[3], y[4], y[5]};
    const Vec3 ds = reduced_rhs(s, g);
    const Vec3 dc = costate_rhs(s, c, g);
    return Vec6{ds[0], ds[1], ds[2], dc[0], dc[1], dc[2]};
  };
  const std::size_t n = substeps_for(duration, max_step);
  const double h = duration / static_cast<double>(n);
  Vec6 y{s0.q1, s0.q2, s0.q3, c0.l1, c0.l2, c0.l3};
  std::vector<ExtremalSample> out;
  out.reserve(n + 1);
  out.push_back({0.0, s0, c0});
  for (std::size_t k = 1; k <= n; ++k) {
    y = rk4_step(rhs, y, h);
    out.push_back({static_cast<double>(k) * h, {y[0], y[1], y[2]}, {y[3], y[4], y[5]}});
  }
  return out;
}

enum class SegmentKind { Bang, Singular, Interior };

inline const char* to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::Bang: return "bang";
    case SegmentKind::Singular: return "singular";
    case SegmentKind::Interior: return "interior";
  }
  return "?";
}

struct VerifyTolerances {
  double feasibility = 1e-8;
  double phi_singular = 1e-5;
  double legendre_clebsch = 1e-9;
  /// eps_phi = eps_phi_rel * (1 + |lambda|).
  double eps_phi_rel = 1e-6;
  double min_costate_norm = 1e-12;
  /// Samples closer than this to a segment edge are skipped by the bang sign check. Zero
  /// for exactly located switches; one grid interval for profiles read off a time grid.
  double boundary_guard = 0.0;
};

struct SegmentCheck {
  double start = 0.0;
  double end = 0.0;
  double g = 0.0;
  SegmentKind kind = SegmentKind::Bang;
  bool ok = true;
  /// Bang: largest |Phi| seen with the wrong sign. Singular: max |Phi|.
  double worst = 0.0;
  double worst_time = 0.0;
};

struct PmpReport {
  enum class Status { Ok, Underdetermined };

  Status status = Status::Ok;
  double mu2 = 0.0;
  double mu3 = 0.0;
  std::vector<double> switch_times;
  std::vector<double> switch_phi_residuals;
  std::vector<bool> bang_sign_ok;
  std::vector<SegmentCheck> segments;
  double max_abs_phi_singular = 0.0;
  double max_lc_singular = -std::numeric_limits<double>::infinity();
  double max_abs_q1_singular = 0.0;
  double min_costate_norm = 0.0;
  bool pass = false;
  std::vector<std::string> violations;

  // Sampled diagnostics (same grid as the verified trajectory).
  std::vector<double> times;
  std::vector<double> phi;
  std::vector<double> lc;
  std::vector<Costate> costates;

  bool has_singular_arc() const {
    return std::any_of(segments.begin(), segments.end(),
                       [](const SegmentCheck& s) { return s.kind == SegmentKind::Singular; });
  }
};

inline const char* to_string(PmpReport::Status s) {
  return s == PmpReport::Status::Ok ? "ok" : "underdetermined";
}

namespace detail {

struct MergedSegment {
  std::size_t first = 0;  // sample index
  std::size_t last = 0;
  double g = 0.0;
};

inline std::vector<MergedSegment> merge_segments(const Trajectory& traj) {
  std::vector<MergedSegment> out;
  const double bound = traj.profile.bound();
  for (std::size_t b = 0; b + 1 < traj.boundaries.size(); ++b) {
    const std::size_t first = traj.boundaries[b];
    const std::size_t last = traj.boundaries[b + 1];
    const double g = traj.controls[first];
    if (!out.empty() && std::abs(out.back().g - g) <= 1e-12 * bound) {
      out.back().last = last;
    } else {
      out.push_back({first, last, g});
    }
  }
  return out;
}

inline SegmentKind classify_value(double g, double bound) {
  if (std::abs(std::abs(g) - bound) <= 1e-9 * bound) return SegmentKind::Bang;
  if (std::abs(g) <= 1e-9 * bound) return SegmentKind::Singular;
  return SegmentKind::Interior;
}

inline Eigen::Matrix3d costate_matrix(const ReducedState& s, double g) {
  const double root = root_term(s);
  Eigen::Matrix3d a;
  a << 2.0 * g * s.q1 / root, 0.0, 2.0 * g,  //
      2.0 * g * s.q2 / root, 0.0, 2.0,       //
      2.0 * g * (s.q3 / root - 1.0), -2.0, 0.0;
  return a;
}

/// Fundamental matrix of the costate system integrated backward from Lambda(T) = I over the
/// sample grid of `traj`. Midpoint states use cubic Hermite interpolation of the samples.
inline std::vector<Eigen::Matrix3d> backward_fundamental(const Trajectory& traj) {
  const std::size_t n = traj.size();
  std::vector<Eigen::Matrix3d> lam(n);
  lam[n - 1].setIdentity();
  for (std::size_t i = n - 1; i-- > 0;) {
    const double g = traj.controls[i];
    const double h = traj.times[i + 1] - traj.times[i];
    const auto& s0 = traj.states[i];
    const auto& s1 = traj.states[i + 1];
    const Vec3 f0 = reduced_rhs(s0, g);
    const Vec3 f1 = reduced_rhs(s1, g);
    const ReducedState sm{0.5 * (s0.q1 + s1.q1) + h / 8.0 * (f0[0] - f1[0]),
                          0.5 * (s0.q2 + s1.q2) + h / 8.0 * (f0[1] - f1[1]),
                          0.5 * (s0.q3 + s1.q3) + h / 8.0 * (f0[2] - f1[2])};
    const Eigen::Matrix3d a1 = costate_matrix(s1, g);
    const Eigen::Matrix3d am = costate_matrix(sm, g);
    const Eigen::Matrix3d a0 = costate_matrix(s0, g);
    const Eigen::Matrix3d& y = lam[i + 1];
    const Eigen::Matrix3d k1 = a1 * y;
    const Eigen::Matrix3d k2 = am * (y - 0.5 * h * k1);
    const Eigen::Matrix3d k3 = am * (y - 0.5 * h * k2);
    const Eigen::Matrix3d k4 = a0 * (y - h * k3);
    lam[i] = y - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return lam;
}

// Row w with Phi = w . lambda.
inline Eigen::RowVector3d phi_row(const ReducedState& s) {
  return {-(root_term(s) - s.q3), 0.0, -s.q1};
}

}  // namespace detail

/// Checks a trajectory (from the origin, endpoint on Q2 = Q3 = 0) against the minimum
/// principle. lambda1(T) = 1 is fixed and the free terminal multipliers (mu2, mu3) are
/// fitted by least squares to Phi = 0 at every interior switch instant.
inline PmpReport verify_candidate(const Trajectory& traj, const VerifyTolerances& tol = {}) {
  if (traj.size() < 2) throw Error(ErrorKind::InvalidArgument, "trajectory has no intervals");
  const auto& fin = traj.final_state();
  if (std::abs(fin.q2) > tol.feasibility || std::abs(fin.q3) > tol.feasibility)
    throw Error(ErrorKind::InfeasibleEndpoint,
                "|q2(T)| = " + std::to_string(std::abs(fin.q2)) +
                    ", |q3(T)| = " + std::to_string(std::abs(fin.q3)));

  const double bound = traj.profile.bound();
  const auto merged = detail::merge_segments(traj);
  const auto lam = detail::backward_fundamental(traj);

  PmpReport rep;
  std::vector<std::size_t> switch_idx;
  for (std::size_t j = 1; j < merged.size(); ++j) {
    switch_idx.push_back(merged[j].first);
    rep.switch_times.push_back(traj.times[merged[j].first]);
  }

  // Phi(t_k) = a_k0 + a_k1 mu2 + a_k2 mu3.
  const auto n_sw = static_cast<Eigen::Index>(switch_idx.size());
  Eigen::MatrixXd a(n_sw, 2);
  Eigen::VectorXd b(n_sw);
  for (Eigen::Index k = 0; k < n_sw; ++k) {
    const std::size_t i = switch_idx[static_cast<std::size_t>(k)];
    const Eigen::RowVector3d row = detail::phi_row(traj.states[i]) * lam[i];
    const double scale = 1.0 / std::max(row.norm(), 1e-300);
    a(k, 0) = row(1) * scale;
    a(k, 1) = row(2) * scale;
    b(k) = -row(0) * scale;
  }
  Eigen::Vector2d mu = Eigen::Vector2d::Zero();
  if (n_sw > 0) mu = a.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(b);
  rep.status = n_sw < 2 ? PmpReport::Status::Underdetermined : PmpReport::Status::Ok;
  rep.mu2 = mu(0);
  rep.mu3 = mu(1);
  const Eigen::Vector3d terminal(1.0, mu(0), mu(1));

  const std::size_t n = traj.size();
  rep.times = traj.times;
  rep.phi.resize(n);
  rep.lc.resize(n);
  rep.costates.resize(n);
  rep.min_costate_norm = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d l = lam[i] * terminal;
    const Costate c{l(0), l(1), l(2)};
    rep.costates[i] = c;
    rep.phi[i] = switching_function(traj.states[i], c);
    rep.lc[i] = legendre_clebsch_lhs(traj.states[i], c);
    rep.min_costate_norm = std::min(rep.min_costate_norm, c.norm());
  }
  for (std::size_t i : switch_idx) rep.switch_phi_residuals.push_back(rep.phi[i]);

  bool all_ok = true;
  for (std::size_t j = 0; j < merged.size(); ++j) {
    const auto& m = merged[j];
    SegmentCheck chk;
    chk.start = traj.times[m.first];
    chk.end = traj.times[m.last];
    chk.g = m.g;
    chk.kind = detail::classify_value(m.g, bound);
    const std::string label = "segment " + std::to_string(j + 1) + " [" +
                              std::to_string(chk.start) + ", " + std::to_string(chk.end) + "]";
    switch (chk.kind) {
      case SegmentKind::Bang: {
        for (std::size_t i = m.first + 1; i < m.last; ++i) {
          const double t = traj.times[i];
          if (t - chk.start <= tol.boundary_guard || chk.end - t <= tol.boundary_guard) continue;
          const double eps = tol.eps_phi_rel * (1.0 + rep.costates[i].norm());
          const auto d = pmp_control(rep.phi[i], bound, eps);
          if (!d.singular && d.g * m.g < 0.0 && std::abs(rep.phi[i]) > chk.worst) {
            chk.ok = false;
            chk.worst = std::abs(rep.phi[i]);
            chk.worst_time = t;
          }
        }
        rep.bang_sign_ok.push_back(chk.ok);
        if (!chk.ok)
          rep.violations.push_back(label + ": switching function sign contradicts g = " +
                                   std::to_string(m.g) + " (|Phi| = " +
                                   std::to_string(chk.worst) + " at t = " +
                                   std::to_string(chk.worst_time) + ")");
        break;
      }
      case SegmentKind::Singular: {
        double lc_max = -std::numeric_limits<double>::infinity();
        for (std::size_t i = m.first; i <= m.last; ++i) {
          if (std::abs(rep.phi[i]) > chk.worst) {
            chk.worst = std::abs(rep.phi[i]);
            chk.worst_time = traj.times[i];
          }
          lc_max = std::max(lc_max, rep.lc[i]);
          rep.max_abs_q1_singular = std::max(rep.max_abs_q1_singular, std::abs(traj.states[i].q1));
        }
        rep.max_abs_phi_singular = std::max(rep.max_abs_phi_singular, chk.worst);
        rep.max_lc_singular = std::max(rep.max_lc_singular, lc_max);
        if (chk.worst > tol.phi_singular) {
          chk.ok = false;
          rep.violations.push_back(label + ": |Phi| = " + std::to_string(chk.worst) +
                                   " on singular arc exceeds " + std::to_string(tol.phi_singular));
        }
        if (lc_max > tol.legendre_clebsch) {
          chk.ok = false;
          rep.violations.push_back(label + ": Legendre-Clebsch lhs = " + std::to_string(lc_max) +
                                   " > 0 on singular arc");
        }
        break;
      }
      case SegmentKind::Interior:
        chk.ok = false;
        rep.violations.push_back(label + ": g = " + std::to_string(m.g) +
                                 " is neither a bang nor singular value");
        break;
    }
    all_ok = all_ok && chk.ok;
    rep.segments.push_back(chk);
  }
  if (!rep.has_singular_arc()) rep.max_lc_singular = 0.0;
  if (rep.min_costate_norm < tol.min_costate_norm) {
    all_ok = false;
    rep.violations.push_back("costate norm collapses to " + std::to_string(rep.min_costate_norm));
  }
  if (rep.status == PmpReport::Status::Underdetermined) {
    rep.violations.push_back("underdetermined: " + std::to_string(switch_idx.size()) +
                             " switch condition(s) cannot fix (mu2, mu3)");
  }
  rep.pass = all_ok && rep.status == PmpReport::Status::Ok;
  return rep;
}

}  // namespace optent
