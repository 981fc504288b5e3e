#pragma once

// Truncated two-mode number-basis simulation of H = -n_a + n_b + g (a^+ + a)(b^+ + b).
// Used as an independent check of the moment dynamics and the entanglement measures.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "optent/hyperbolic.hpp"
#include "optent/rk4.hpp"
#include "optent/types.hpp"

namespace optent {

using cplx = std::complex<double>;

inline constexpr double kTailMassLimit = 1e-6;
inline constexpr std::size_t kDefaultTruncation = 40;
inline constexpr std::size_t kLargeTruncation = 240;

/// Amplitudes c[n][m] stored row-major (index n * nb + m).
struct FockState {
  std::size_t na = 0;
  std::size_t nb = 0;
  std::vector<cplx> c;

  FockState() = default;
  FockState(std::size_t na_, std::size_t nb_) : na(na_), nb(nb_), c(na_ * nb_, cplx{}) {
    if (na < 3 || nb < 3) throw Error(ErrorKind::InvalidArgument, "truncation needs at least 3 levels per mode");
  }

  static FockState vacuum(std::size_t na, std::size_t nb) {
    FockState s(na, nb);
    s.c[0] = 1.0;
    return s;
  }

  cplx& at(std::size_t n, std::size_t m) { return c[n * nb + m]; }
  const cplx& at(std::size_t n, std::size_t m) const { return c[n * nb + m]; }

  double norm_sq() const {
    double s = 0.0;
    for (const auto& z : c) s += std::norm(z);
    return s;
  }

  /// Probability in the top two levels of either mode (the larger of the two).
  double tail_mass() const {
    double ta = 0.0, tb = 0.0;
    for (std::size_t n = 0; n < na; ++n)
      for (std::size_t m = 0; m < nb; ++m) {
        const double p = std::norm(at(n, m));
        if (n + 2 >= na) ta += p;
        if (m + 2 >= nb) tb += p;
      }
    return std::max(ta, tb);
  }
};

/// H psi within the truncation; components pushed past a cutoff are dropped.
inline void apply_hamiltonian(const FockState& psi, double g, FockState& out) {
  const std::size_t na = psi.na, nb = psi.nb;
  if (out.na != na || out.nb != nb) out = FockState(na, nb);
  for (std::size_t n = 0; n < na; ++n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double sn1 = std::sqrt(static_cast<double>(n + 1));
    for (std::size_t m = 0; m < nb; ++m) {
      const double sm = std::sqrt(static_cast<double>(m));
      const double sm1 = std::sqrt(static_cast<double>(m + 1));
      cplx v = (static_cast<double>(m) - static_cast<double>(n)) * psi.at(n, m);
      cplx coupling{};
      if (n > 0 && m > 0) coupling += sn * sm * psi.at(n - 1, m - 1);           // a^+ b^+
      if (n > 0 && m + 1 < nb) coupling += sn * sm1 * psi.at(n - 1, m + 1);     // a^+ b
      if (n + 1 < na && m > 0) coupling += sn1 * sm * psi.at(n + 1, m - 1);     // a b^+
      if (n + 1 < na && m + 1 < nb) coupling += sn1 * sm1 * psi.at(n + 1, m + 1);  // a b
      out.at(n, m) = v + g * coupling;
    }
  }
}

inline FockState apply_hamiltonian(const FockState& psi, double g) {
  FockState out(psi.na, psi.nb);
  apply_hamiltonian(psi, g, out);
  return out;
}

inline cplx inner(const FockState& a, const FockState& b) {
  cplx s{};
  for (std::size_t i = 0; i < a.c.size(); ++i) s += std::conj(a.c[i]) * b.c[i];
  return s;
}

namespace detail {

inline void require_tail(const FockState& s, double t) {
  const double tail = s.tail_mass();
  if (tail > kTailMassLimit)
    throw Error(ErrorKind::TruncationBreach,
                "tail mass " + std::to_string(tail) + " at t = " + std::to_string(t) + " with Na = " +
                    std::to_string(s.na) + ", Nb = " + std::to_string(s.nb) +
                    "; rerun with larger cutoffs");
}

/// One RK4 step of d psi/dt = -i H psi.
inline void fock_rk4_step(FockState& psi, double g, double h, FockState& k, FockState& acc, FockState& tmp) {
  const std::size_t sz = psi.c.size();
  const cplx mi{0.0, -1.0};
  acc = psi;
  // k1
  apply_hamiltonian(psi, g, k);
  for (std::size_t i = 0; i < sz; ++i) {
    k.c[i] *= mi;
    acc.c[i] += (h / 6.0) * k.c[i];
    tmp.c[i] = psi.c[i] + (0.5 * h) * k.c[i];
  }
  // k2
  apply_hamiltonian(tmp, g, k);
  for (std::size_t i = 0; i < sz; ++i) {
    k.c[i] *= mi;
    acc.c[i] += (h / 3.0) * k.c[i];
    tmp.c[i] = psi.c[i] + (0.5 * h) * k.c[i];
  }
  // k3
  apply_hamiltonian(tmp, g, k);
  for (std::size_t i = 0; i < sz; ++i) {
    k.c[i] *= mi;
    acc.c[i] += (h / 3.0) * k.c[i];
    tmp.c[i] = psi.c[i] + h * k.c[i];
  }
  // k4
  apply_hamiltonian(tmp, g, k);
  for (std::size_t i = 0; i < sz; ++i) acc.c[i] += (h / 6.0) * mi * k.c[i];
  std::swap(psi, acc);
}

}  // namespace detail

/// RK4 evolution under a piecewise-constant coupling, stepping exactly onto every switch.
/// Throws TruncationBreach when the tail-mass guard trips.
inline FockState evolve(const FockState& start, const ControlProfile& profile, double max_step = kDefaultMaxStep) {
  if (!(max_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
  FockState psi = start;
  FockState k(psi.na, psi.nb), acc(psi.na, psi.nb), tmp(psi.na, psi.nb);
  double t = 0.0;
  for (const auto& seg : profile.segments()) {
    const std::size_t n = substeps_for(seg.duration, max_step);
    const double h = seg.duration / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
      detail::fock_rk4_step(psi, seg.g, h, k, acc, tmp);
      if ((s & 127u) == 127u) detail::require_tail(psi, t + static_cast<double>(s + 1) * h);
    }
    t += seg.duration;
    detail::require_tail(psi, t);
  }
  return psi;
}

struct MomentEstimate {
  MomentVector moments;
  /// Largest imaginary part among the ten generator expectations.
  double max_imag = 0.0;
  /// Crude truncation bound: tail mass times the largest level index.
  double truncation_error = 0.0;
};

/// x2-normalized expectations of the ten symplectic generators.
inline MomentEstimate moments(const FockState& s) {
  cplx ab{}, adbd{}, abd{}, adb{}, aa{}, adad{}, bb{}, bdbd{};
  double na_mean = 0.0, nb_mean = 0.0, norm = 0.0;
  for (std::size_t n = 0; n < s.na; ++n) {
    for (std::size_t m = 0; m < s.nb; ++m) {
      const cplx cc = std::conj(s.at(n, m));
      const double dn = static_cast<double>(n), dm = static_cast<double>(m);
      norm += std::norm(s.at(n, m));
      na_mean += dn * std::norm(s.at(n, m));
      nb_mean += dm * std::norm(s.at(n, m));
      if (n + 1 < s.na && m + 1 < s.nb) ab += cc * std::sqrt((dn + 1) * (dm + 1)) * s.at(n + 1, m + 1);
      if (n > 0 && m > 0) adbd += cc * std::sqrt(dn * dm) * s.at(n - 1, m - 1);
      if (n + 1 < s.na && m > 0) abd += cc * std::sqrt((dn + 1) * dm) * s.at(n + 1, m - 1);
      if (n > 0 && m + 1 < s.nb) adb += cc * std::sqrt(dn * (dm + 1)) * s.at(n - 1, m + 1);
      if (n + 2 < s.na) aa += cc * std::sqrt((dn + 1) * (dn + 2)) * s.at(n + 2, m);
      if (n > 1) adad += cc * std::sqrt(dn * (dn - 1)) * s.at(n - 2, m);
      if (m + 2 < s.nb) bb += cc * std::sqrt((dm + 1) * (dm + 2)) * s.at(n, m + 2);
      if (m > 1) bdbd += cc * std::sqrt(dm * (dm - 1)) * s.at(n, m - 2);
    }
  }
  const cplx i{0.0, 1.0};
  const cplx q1 = i * (adbd - ab);
  const cplx q2 = -0.5 * i * (adad - aa - bdbd + bb);
  const cplx q3 = -0.5 * (adad + aa + bdbd + bb);
  const cplx j0 = na_mean + nb_mean + norm;
  const cplx k1 = adbd + ab;
  const cplx k2 = -0.5 * (adad + aa - bdbd - bb);
  const cplx k3 = 0.5 * i * (adad - aa + bdbd - bb);
  const cplx j1 = na_mean - nb_mean;
  const cplx j2 = adb + abd;
  const cplx j3 = -i * (adb - abd);
  MomentEstimate out;
  const cplx all[10] = {q1, q2, q3, j0, k1, k2, k3, j1, j2, j3};
  Vec10 re{};
  for (int k = 0; k < 10; ++k) {
    re[k] = all[k].real();
    out.max_imag = std::max(out.max_imag, std::abs(all[k].imag()));
  }
  out.moments = MomentVector::from_array(re);
  out.truncation_error = s.tail_mass() * static_cast<double>(std::max(s.na, s.nb));
  return out;
}

/// sum_n tanh^n(r)/cosh(r) |n, n>, with the extra factor exp(-i n pi/2) when `phased`.
/// Renormalized after truncation.
inline FockState two_mode_squeezed_reference(double r, bool phased, std::size_t na = kDefaultTruncation,
                                             std::size_t nb = kDefaultTruncation) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidArgument, "r must be nonnegative");
  const std::size_t levels = std::min(na, nb);
  const double t = std::tanh(r);
  if (r > 0.0 && 2.0 * static_cast<double>(levels) * std::log(t) > std::log(1e-14))
    throw Error(ErrorKind::TruncationBreach, "reference state does not fit in " + std::to_string(levels) +
                                                 " levels at r = " + std::to_string(r));
  FockState s(na, nb);
  const cplx step = phased ? cplx{0.0, -1.0} : cplx{1.0, 0.0};
  cplx amp = 1.0 / std::cosh(r);
  for (std::size_t n = 0; n < levels; ++n) {
    s.at(n, n) = amp;
    amp *= t * step;
  }
  const double nrm = std::sqrt(s.norm_sq());
  for (auto& z : s.c) z /= nrm;
  return s;
}

/// Von Neumann entropy (natural log) of the reduced state of mode a.
inline double reduced_entropy(const FockState& s) {
  Eigen::MatrixXcd cm(static_cast<Eigen::Index>(s.na), static_cast<Eigen::Index>(s.nb));
  for (std::size_t n = 0; n < s.na; ++n)
    for (std::size_t m = 0; m < s.nb; ++m)
      cm(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = s.at(n, m);
  const Eigen::MatrixXcd rho = cm * cm.adjoint();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  double h = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double l = es.eigenvalues()(k);
    if (l > 0.0) h -= l * std::log(l);
  }
  return std::max(0.0, h);
}

struct QuadratureVariances {
  double var_x = 0.0;
  double var_p = 0.0;
};

/// Variances of (X_a + P_b)/sqrt(2) and (X_b + P_a)/sqrt(2) with X = (c + c^+)/sqrt(2),
/// P = (c - c^+)/(i sqrt(2)). These are the squeezed pair of the phased target state.
inline QuadratureVariances squeezed_quadrature_variances(const FockState& s) {
  cplx a{}, b{}, aa{}, bb{}, ab{}, abd{};
  double na_mean = 0.0, nb_mean = 0.0, norm = 0.0;
  for (std::size_t n = 0; n < s.na; ++n)
    for (std::size_t m = 0; m < s.nb; ++m) {
      const cplx cc = std::conj(s.at(n, m));
      const double dn = static_cast<double>(n), dm = static_cast<double>(m);
      const double p = std::norm(s.at(n, m));
      norm += p;
      na_mean += dn * p;
      nb_mean += dm * p;
      if (n + 1 < s.na) a += cc * std::sqrt(dn + 1) * s.at(n + 1, m);
      if (m + 1 < s.nb) b += cc * std::sqrt(dm + 1) * s.at(n, m + 1);
      if (n + 2 < s.na) aa += cc * std::sqrt((dn + 1) * (dn + 2)) * s.at(n + 2, m);
      if (m + 2 < s.nb) bb += cc * std::sqrt((dm + 1) * (dm + 2)) * s.at(n, m + 2);
      if (n + 1 < s.na && m + 1 < s.nb) ab += cc * std::sqrt((dn + 1) * (dm + 1)) * s.at(n + 1, m + 1);
      if (n + 1 < s.na && m > 0) abd += cc * std::sqrt((dn + 1) * dm) * s.at(n + 1, m - 1);
    }
  // Operator O = alpha a + conj(alpha) a^+ + beta b + conj(beta) b^+ (Hermitian).
  const auto variance = [&](cplx alpha, cplx beta) {
    const cplx mean = alpha * a + std::conj(alpha) * std::conj(a) + beta * b + std::conj(beta) * std::conj(b);
    // <O^2> expanded with normal ordering: a a^+ = n_a + 1.
    const cplx o2 = alpha * alpha * aa + std::conj(alpha * alpha * aa) +
                    std::norm(alpha) * (2.0 * na_mean + norm) + beta * beta * bb +
                    std::conj(beta * beta * bb) + std::norm(beta) * (2.0 * nb_mean + norm) +
                    2.0 * (alpha * beta * ab + std::conj(alpha * beta * ab)) +
                    2.0 * (alpha * std::conj(beta) * abd + std::conj(alpha * std::conj(beta) * abd));
    return (o2 - mean * mean).real();
  };
  const double r2 = 1.0 / std::sqrt(2.0);
  // X = r2 (c + c^+) -> coefficient r2; P = (c - c^+)/(i sqrt 2) -> coefficient -i r2.
  const cplx x_coef{r2, 0.0}, p_coef{0.0, -r2};
  QuadratureVariances out;
  out.var_x = variance(r2 * x_coef, r2 * p_coef);
  out.var_p = variance(r2 * p_coef, r2 * x_coef);
  return out;
}

struct OracleReport {
  std::size_t na = 0;
  std::size_t nb = 0;
  double step = 0.0;
  double max_moment_error = 0.0;
  double entropy_error = 0.0;
  double norm_drift = 0.0;
  double tail_mass = 0.0;
  double variance_error = 0.0;
  double max_imag = 0.0;
  double max_six_block = 0.0;
  double r = 0.0;
  QuadratureVariances variances;
  std::size_t checkpoints = 0;
};

/// Evolves the vacuum under `profile` in both the Fock basis and the moment equations and
/// compares them at `checkpoints` equally spaced times (the last one at T).
inline OracleReport run_oracle(const ControlProfile& profile, std::size_t na = kDefaultTruncation,
                               std::size_t nb = kDefaultTruncation, double max_step = kDefaultMaxStep,
                               std::size_t checkpoints = 20) {
  if (checkpoints == 0) throw Error(ErrorKind::InvalidArgument, "need at least one checkpoint");
  OracleReport rep;
  rep.na = na;
  rep.nb = nb;
  rep.step = max_step;
  rep.checkpoints = checkpoints;
  const double horizon = profile.horizon();
  FockState psi = FockState::vacuum(na, nb);
  MomentVector ode = MomentVector::vacuum();
  const auto record = [&](const FockState& s, const MomentVector& m) {
    const auto est = moments(s);
    const auto a = est.moments.as_array(), b = m.as_array();
    for (int k = 0; k < 10; ++k) rep.max_moment_error = std::max(rep.max_moment_error, std::abs(a[k] - b[k]));
    rep.max_imag = std::max(rep.max_imag, est.max_imag);
    rep.max_six_block = std::max(rep.max_six_block, est.moments.six_block_max());
    rep.norm_drift = std::max(rep.norm_drift, std::abs(s.norm_sq() - 1.0));
    rep.tail_mass = std::max(rep.tail_mass, s.tail_mass());
  };
  record(psi, ode);
  if (horizon > 0.0) {
    std::vector<double> marks(checkpoints);
    for (std::size_t k = 0; k < checkpoints; ++k)
      marks[k] = horizon * static_cast<double>(k + 1) / static_cast<double>(checkpoints);
    // Walk the profile piece by piece, cutting at every checkpoint.
    const auto& segs = profile.segments();
    std::size_t si = 0;
    double seg_left = segs.empty() ? 0.0 : segs[0].duration;
    double t = 0.0;
    for (double mark : marks) {
      std::vector<Segment> piece;
      double need = mark - t;
      while (need > 1e-14 * std::max(1.0, horizon) && si < segs.size()) {
        const double d = std::min(need, seg_left);
        if (d > 0.0) piece.push_back({d, segs[si].g});
        need -= d;
        seg_left -= d;
        if (seg_left <= 1e-14 * std::max(1.0, horizon)) {
          ++si;
          if (si < segs.size()) seg_left = segs[si].duration;
        }
      }
      t = mark;
      if (!piece.empty()) {
        const ControlProfile sub(std::move(piece), profile.bound());
        psi = evolve(psi, sub, max_step);
        ode = integrate_full(sub, ode, max_step).states.back();
      }
      record(psi, ode);
    }
  }
  rep.r = horizon > 0.0 ? r_from_q1(ode.q1) : 0.0;
  const double target = std::max(0.0, rep.r);
  rep.entropy_error = std::abs(reduced_entropy(psi) - entanglement_entropy(ode.hyperbolic_block()));
  rep.variances = squeezed_quadrature_variances(psi);
  const double expected = 0.5 * std::exp(-2.0 * target);
  rep.variance_error = std::max(std::abs(rep.variances.var_x - expected), std::abs(rep.variances.var_p - expected));
  return rep;
}

}  // namespace optent
