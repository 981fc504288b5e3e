#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace optent {

using Vec3 = std::array<double, 3>;
using Vec10 = std::array<double, 10>;

enum class ErrorKind {
  InvalidArgument,
  Divergence,
  NotOnHyperboloid,
  NotOnTargetManifold,
  NegativeSqueezing,
  InfeasibleEndpoint,
  NoRootFound,
  NoFeasibleSolution,
  TruncationBreach,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::NotOnHyperboloid: return "not on hyperboloid";
    case ErrorKind::NotOnTargetManifold: return "not on target manifold";
    case ErrorKind::NegativeSqueezing: return "negative squeezing";
    case ErrorKind::InfeasibleEndpoint: return "infeasible endpoint";
    case ErrorKind::NoRootFound: return "no root found for this structure";
    case ErrorKind::NoFeasibleSolution: return "no feasible solution found";
    case ErrorKind::TruncationBreach: return "truncation breach";
    case ErrorKind::Io: return "i/o error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Normalized expectations of Q1, Q2, Q3 (vacuum is the origin).
struct ReducedState {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;

  Vec3 as_array() const { return {q1, q2, q3}; }
  static ReducedState from_array(const Vec3& v) { return {v[0], v[1], v[2]}; }
  bool finite() const { return std::isfinite(q1) && std::isfinite(q2) && std::isfinite(q3); }
  friend bool operator==(const ReducedState&, const ReducedState&) = default;
};

/// Contravariant four-vector (Q1, Q2, Q3, J0) on the upper sheet of
/// q1^2 + q2^2 + q3^2 - j0^2 = -1.
struct HyperboloidPoint {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
  double j0 = 1.0;

  /// q.q - j0^2 + 1; zero on H^3.
  double invariant_defect() const { return q1 * q1 + q2 * q2 + q3 * q3 - j0 * j0 + 1.0; }
  ReducedState reduced() const { return {q1, q2, q3}; }
  friend bool operator==(const HyperboloidPoint&, const HyperboloidPoint&) = default;
};

/// Normalized expectations of all ten Sp(4) generators.
struct MomentVector {
  double q1 = 0.0, q2 = 0.0, q3 = 0.0, j0 = 1.0;
  double k1 = 0.0, k2 = 0.0, k3 = 0.0, j1 = 0.0, j2 = 0.0, j3 = 0.0;

  static MomentVector vacuum() { return {}; }

  Vec10 as_array() const { return {q1, q2, q3, j0, k1, k2, k3, j1, j2, j3}; }
  static MomentVector from_array(const Vec10& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]};
  }
  HyperboloidPoint hyperbolic_block() const { return {q1, q2, q3, j0}; }
  /// Largest magnitude among (k1, k2, k3, j1, j2, j3).
  double six_block_max() const {
    return std::max({std::abs(k1), std::abs(k2), std::abs(k3), std::abs(j1), std::abs(j2),
                     std::abs(j3)});
  }
};

struct Segment {
  double duration = 0.0;
  double g = 0.0;
};

/// Piecewise-constant coupling g(t) with |g| <= bound.
class ControlProfile {
 public:
  static constexpr double kBoundSlack = 1e-12;

  ControlProfile() = default;
  ControlProfile(std::vector<Segment> segments, double bound)
      : segments_(std::move(segments)), bound_(bound) {
    if (!(bound_ > 0.0) || !std::isfinite(bound_))
      throw Error(ErrorKind::InvalidArgument, "control bound must be positive and finite");
    for (const auto& s : segments_) {
      if (!(s.duration > 0.0) || !std::isfinite(s.duration))
        throw Error(ErrorKind::InvalidArgument, "segment durations must be positive");
      if (!std::isfinite(s.g) || std::abs(s.g) > bound_ * (1.0 + kBoundSlack))
        throw Error(ErrorKind::InvalidArgument,
                    "segment coupling " + std::to_string(s.g) + " exceeds bound " +
                        std::to_string(bound_));
    }
  }

  /// Builds a profile from boundary times 0 < t_1 < ... < t_k < horizon and one value per
  /// piece. Zero-width pieces are dropped.
  static ControlProfile from_boundaries(const std::vector<double>& interior, double horizon,
                                        const std::vector<double>& values, double bound) {
    if (values.size() != interior.size() + 1)
      throw Error(ErrorKind::InvalidArgument, "need one control value per piece");
    std::vector<Segment> segs;
    double prev = 0.0;
    for (std::size_t i = 0; i <= interior.size(); ++i) {
      const double end = i < interior.size() ? interior[i] : horizon;
      if (end < prev) throw Error(ErrorKind::InvalidArgument, "boundaries must be nondecreasing");
      if (end > prev) segs.push_back({end - prev, values[i]});
      prev = end;
    }
    return ControlProfile(std::move(segs), bound);
  }

  const std::vector<Segment>& segments() const { return segments_; }
  double bound() const { return bound_; }
  bool empty() const { return segments_.empty(); }
  double horizon() const {
    return std::accumulate(segments_.begin(), segments_.end(), 0.0,
                           [](double a, const Segment& s) { return a + s.duration; });
  }

  /// Same profile followed by a g = 0 tail of the given length.
  ControlProfile padded(double extra) const {
    auto segs = segments_;
    if (extra > 0.0) segs.push_back({extra, 0.0});
    return ControlProfile(std::move(segs), bound_);
  }

 private:
  std::vector<Segment> segments_;
  double bound_ = 1.0;
};

/// Sampled solution of the reduced system. `controls[i]` is the coupling on
/// [times[i], times[i+1]]; `boundaries` holds the sample index of every segment edge
/// (first entry 0, last entry times.size()-1).
struct Trajectory {
  std::vector<double> times;
  std::vector<ReducedState> states;
  std::vector<double> controls;
  std::vector<std::size_t> boundaries;
  ControlProfile profile;

  std::size_t size() const { return times.size(); }
  const ReducedState& final_state() const { return states.back(); }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

struct FullTrajectory {
  std::vector<double> times;
  std::vector<MomentVector> states;
  std::vector<double> controls;
};

}  // namespace optent
