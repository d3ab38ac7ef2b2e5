#pragma once

#include <cmath>

#include "embeig/errors.hpp"
#include "embeig/model.hpp"
#include "embeig/trig.hpp"

namespace embeig {

// One step of the raw three-term recursion u(n+1) = (E - V) u(n) - u(n-1).
inline SolutionPair transfer_step(const SolutionPair& p, double v, double e) {
  return {p.cur, (e - v) * p.cur - p.prev};
}

// Largest |V| / s for which the single-step phase update below stays on the
// principal arctangent branch: the cosine of the phase increment is
// proportional to 1 - (V/s) sin(pi phi) cos(pi phi) >= 1 - |V|/(2s) > 0.
inline constexpr double kMaxStepRatio = 2.0;

// Below this |sin(pi angle)| the state is treated as exactly aligned with the
// degenerate direction: the phase advances by exactly k and the radius is
// unchanged (the exact recursion does the same in the limit).
inline constexpr double kDegenerateSin = 1e-15;

inline void require_step_ratio(double v, double s) {
  if (!(std::abs(v) < kMaxStepRatio * s)) {
    throw Error(Errc::step_too_large,
                "|V|/s = " + std::to_string(std::abs(v) / s) +
                    " outside the valid branch (< 2)");
  }
}

// Advance the polar state across one site under potential value v:
//
//   angle' = angle + k + atan2(w a^2, 1 - w a c) / pi,
//   log_radius' = log_radius + (1/2) log(1 + w (w a^2 - 2 a c)),
//
// where w = v / s, a = sin(pi angle), c = cos(pi angle). The radius factor is
// the squared norm of the rotated step and is strictly positive whenever
// |w| < 2, which is also exactly where the arctangent increment is the true
// (principal) phase change.
inline PruferState prufer_step(const PruferState& st, double v,
                               const EnergyPoint& ep) {
  require_step_ratio(v, ep.s);
  double a = sinpi(st.angle);
  if (std::abs(a) < kDegenerateSin) {
    return {st.log_radius, st.angle + ep.k};
  }
  double c = cospi(st.angle);
  double w = v / ep.s;
  double two_ac = 2.0 * a * c;
  double delta = std::atan2(w * a * a, 1.0 - w * a * c) / kPi;
  double log_radius =
      st.log_radius + 0.5 * std::log1p(w * (w * a * a - two_ac));
  return {log_radius, st.angle + ep.k + delta};
}

// First-order model of the phase increment: k + sin^2(pi angle) V / (pi s).
// The true increment differs by O((V/s)^2).
inline double predicted_angle_increment(const PruferState& st, double v,
                                        const EnergyPoint& ep) {
  require_step_ratio(v, ep.s);
  double a = sinpi(st.angle);
  return ep.k + a * a * v / (kPi * ep.s);
}

// Recover (u(n-1), u(n)) from the polar state at n:
// u(n) = R sin(pi angle), u(n-1) = R sin(pi angle - pi k).
inline SolutionPair prufer_to_solution(const PruferState& st,
                                       const EnergyPoint& ep) {
  double r = std::exp(st.log_radius);
  return {r * sinpi(st.angle - ep.k), r * sinpi(st.angle)};
}

// Inverse of the above: polar state at n from (u(n-1), u(n)). The phase
// representative is placed in [k - 1/2, k + 3/2) so that a boundary state
// lands in [0, 2).
inline PruferState solution_to_prufer(const SolutionPair& p,
                                      const EnergyPoint& ep) {
  double y1 = p.prev;
  double y2 = (p.cur - cospi(ep.k) * p.prev) / ep.s;
  if (y1 == 0.0 && y2 == 0.0) {
    throw Error(Errc::invalid_parameter, "zero solution has no polar state");
  }
  double log_radius = 0.5 * std::log(y1 * y1 + y2 * y2);
  double angle = ep.k + std::atan2(y1, y2) / kPi;
  if (angle < 0.0) angle += 2.0;
  return {log_radius, angle};
}

// Polar state at n = 1 of the solution obeying the boundary condition:
// (u(0), u(1)) = (cos theta, sin theta).
inline PruferState boundary_to_prufer(const BoundaryAngle& b,
                                      const EnergyPoint& ep) {
  return solution_to_prufer({std::cos(b.theta), std::sin(b.theta)}, ep);
}

}  // namespace embeig
