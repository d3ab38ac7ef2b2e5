#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embeig/errors.hpp"
#include "embeig/generator.hpp"
#include "embeig/model.hpp"
#include "embeig/potential.hpp"
#include "embeig/prufer.hpp"
#include "embeig/trig.hpp"

namespace embeig {

// --- Decay exponent ----------------------------------------------------------

struct DecayReport {
  double slope = 0.0;      // fitted p in log R = p log(n - b) + intercept
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::int64_t n_lo = 0;
  std::int64_t n_hi = 0;
  std::size_t count = 0;
};

// Least-squares fit of log R against log(n - b) over the trace's sparse
// samples restricted to [n_lo, n_hi] (pass -1 for an open end). Requires at
// least 50 samples spanning at least one decade of n - b.
inline DecayReport decay_exponent(const SolutionTrace& trace, std::int64_t b,
                                  std::int64_t n_lo = -1,
                                  std::int64_t n_hi = -1) {
  std::vector<double> xs, ys;
  std::int64_t lo_seen = 0, hi_seen = 0;
  for (const auto& s : trace.samples) {
    if (s.n <= b) continue;
    if (n_lo >= 0 && s.n < n_lo) continue;
    if (n_hi >= 0 && s.n > n_hi) continue;
    if (xs.empty()) lo_seen = s.n;
    hi_seen = s.n;
    xs.push_back(std::log(static_cast<double>(s.n - b)));
    ys.push_back(s.log_radius);
  }
  if (xs.size() < 50 ||
      static_cast<double>(hi_seen - b) < 10.0 * static_cast<double>(lo_seen - b)) {
    throw Error(Errc::insufficient_span,
                "need >= 50 samples across >= one decade, have " +
                    std::to_string(xs.size()));
  }
  double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double denom = n * sxx - sx * sx;
  DecayReport rep;
  rep.slope = (n * sxy - sx * sy) / denom;
  rep.intercept = (sy - rep.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double r = ys[i] - (rep.slope * xs[i] + rep.intercept);
    ss += r * r;
  }
  rep.residual_rms = std::sqrt(ss / n);
  rep.n_lo = lo_seen;
  rep.n_hi = hi_seen;
  rep.count = xs.size();
  return rep;
}

// --- Oscillatory partial sums -------------------------------------------------

struct OscillatoryBound {
  double sup_abs_partial = 0.0;
  double certified_c = 0.0;  // sup scaled by (n0 - b)
  std::int64_t arg_sup = 0;
};

// sup over n of |sum_{l=n0}^{n} sin(2 pi theta(l)) / (l - b)| over the dense
// window, and the same scaled by (n0 - b). The window [n0, n_end) must be
// densely recorded; a decimated trace cannot form these sums.
inline OscillatoryBound oscillatory_sum(const SolutionTrace& trace,
                                        std::int64_t b, std::int64_t n0,
                                        std::int64_t n_end = -1) {
  if (n_end < 0) {
    n_end = trace.dense_start +
            static_cast<std::int64_t>(trace.dense.size());
  }
  if (!trace.has_dense(n0, n_end)) {
    throw Error(Errc::decimated_trace,
                "window [" + std::to_string(n0) + ", " + std::to_string(n_end) +
                    ") is not densely recorded");
  }
  double sum = 0.0;
  OscillatoryBound out;
  for (std::int64_t l = n0; l < n_end; ++l) {
    const auto& st =
        trace.dense[static_cast<std::size_t>(l - trace.dense_start)];
    sum += sin2pi(st.angle) / static_cast<double>(l - b);
    if (std::abs(sum) > out.sup_abs_partial) {
      out.sup_abs_partial = std::abs(sum);
      out.arg_sup = l;
    }
  }
  out.certified_c = out.sup_abs_partial * static_cast<double>(n0 - b);
  return out;
}

// Cross-term variant: sum of sin(2 pi theta(l)) sin(2 pi theta_j(l)) / (l-b),
// formed through the product-to-difference identity.
inline OscillatoryBound oscillatory_cross_sum(const SolutionTrace& a,
                                              const SolutionTrace& bb,
                                              std::int64_t base,
                                              std::int64_t n0,
                                              std::int64_t n_end = -1) {
  if (n_end < 0) {
    n_end = a.dense_start + static_cast<std::int64_t>(a.dense.size());
  }
  if (!a.has_dense(n0, n_end) || !bb.has_dense(n0, n_end)) {
    throw Error(Errc::decimated_trace, "cross sum needs both windows dense");
  }
  double sum = 0.0;
  OscillatoryBound out;
  for (std::int64_t l = n0; l < n_end; ++l) {
    double ta = a.dense[static_cast<std::size_t>(l - a.dense_start)].angle;
    double tb = bb.dense[static_cast<std::size_t>(l - bb.dense_start)].angle;
    double term = 0.5 * (cos2pi(ta - tb) - cos2pi(ta + tb));
    sum += term / static_cast<double>(l - base);
    if (std::abs(sum) > out.sup_abs_partial) {
      out.sup_abs_partial = std::abs(sum);
      out.arg_sup = l;
    }
  }
  out.certified_c = out.sup_abs_partial * static_cast<double>(n0 - base);
  return out;
}

// --- Square-summability --------------------------------------------------------

struct L2Report {
  double total = 0.0;
  double last_decade_fraction = 0.0;
  double exponent = 0.0;  // fitted decay exponent of the radius envelope
  std::int64_t fit_lo = 0;
  std::int64_t fit_hi = 0;
};

// Direct tail metrics for explicitly given values u(n_start), u(n_start+1)...
// The exponent here is fitted on log |u| against log n over all nonzero
// samples.
inline L2Report l2_report_from_values(std::span<const double> u,
                                      std::int64_t n_start) {
  L2Report rep;
  std::int64_t n_end = n_start + static_cast<std::int64_t>(u.size());
  std::int64_t last_lo = n_end - (n_end - n_start) / 10;
  double total = 0.0, tail = 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double cnt = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    std::int64_t n = n_start + static_cast<std::int64_t>(i);
    double uu = u[i] * u[i];
    total += uu;
    if (n >= last_lo) tail += uu;
    if (u[i] != 0.0 && n > 0) {
      double x = std::log(static_cast<double>(n));
      double y = std::log(std::abs(u[i]));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      cnt += 1.0;
    }
  }
  rep.total = total;
  rep.last_decade_fraction = total > 0.0 ? tail / total : 0.0;
  if (cnt >= 2.0) {
    rep.exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  }
  rep.fit_lo = n_start;
  rep.fit_hi = n_end - 1;
  return rep;
}

// Full-horizon tail metrics for the solution of (V, E, boundary angle):
// replays the potential once, accumulating sum u(n)^2 for n in [1, horizon),
// the fraction contributed by the last decade of sites, and the decay
// exponent of the radius envelope fitted over [fit_lo, fit_hi] (defaults:
// the last two decades). The envelope dominates |u| pointwise, which is what
// makes the fitted exponent a certificate for square-summability.
inline L2Report l2_report(const Potential& pot, const EnergyPoint& ep,
                          const BoundaryAngle& theta, std::int64_t fit_lo = -1,
                          std::int64_t fit_hi = -1) {
  validate(pot);
  std::int64_t horizon = pot.horizon;
  if (fit_lo < 0) fit_lo = std::max<std::int64_t>(1, horizon / 100);
  if (fit_hi < 0) fit_hi = horizon;
  std::int64_t last_lo = horizon - horizon / 10;

  PruferState st = boundary_to_prufer(theta, ep);
  double total = 0.0, tail = 0.0;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, cnt = 0.0;
  std::int64_t next_fit = fit_lo;

  // u(n) = R(n) sin(pi angle(n)); state starts at n = 1.
  std::int64_t n = 1;
  for (const auto& pc : pot.pieces) {
    if (pc.end <= 1) continue;
    PieceCursor cur(pc);
    while (cur.site() < n) cur.advance();
    while (!cur.done()) {
      double u = std::exp(st.log_radius) * sinpi(st.angle);
      total += u * u;
      if (n >= last_lo) tail += u * u;
      if (n >= next_fit && n <= fit_hi) {
        double x = std::log(static_cast<double>(n));
        sx += x;
        sy += st.log_radius;
        sxx += x * x;
        sxy += x * st.log_radius;
        cnt += 1.0;
        next_fit = std::max(next_fit + 1,
                            static_cast<std::int64_t>(
                                static_cast<double>(next_fit) * 1.002));
      }
      double v = cur.value();
      st = prufer_step(st, v, ep);
      cur.advance();
      ++n;
      if (n >= horizon) break;
    }
    if (n >= horizon) break;
  }

  L2Report rep;
  rep.total = total;
  rep.last_decade_fraction = total > 0.0 ? tail / total : 0.0;
  if (cnt >= 2.0) {
    rep.exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  }
  rep.fit_lo = fit_lo;
  rep.fit_hi = fit_hi;
  return rep;
}

// --- Replayed traces -----------------------------------------------------------

// Reconstruct one eigenvalue's polar trace directly from the potential file
// contents (independent of any traces the construction recorded): sparse
// geometric samples everywhere, plus an optional dense window.
inline SolutionTrace replay_trace(const Potential& pot, const EnergyPoint& ep,
                                  const BoundaryAngle& theta,
                                  std::int64_t dense_lo = -1,
                                  std::int64_t dense_hi = -1,
                                  int samples_per_decade = 512) {
  validate(pot);
  SolutionTrace tr;
  PruferState st = boundary_to_prufer(theta, ep);
  double growth = detail::decimation_growth(samples_per_decade);
  std::int64_t next_sample = 1;
  std::int64_t n = 1;
  for (const auto& pc : pot.pieces) {
    if (pc.end <= 1) continue;
    PieceCursor cur(pc);
    while (cur.site() < n) cur.advance();
    while (!cur.done() && n < pot.horizon) {
      if (n == next_sample) {
        tr.samples.push_back({n, st.log_radius, st.angle});
        next_sample = std::max(
            n + 1, static_cast<std::int64_t>(static_cast<double>(n) * growth));
      }
      if (n >= dense_lo && n < dense_hi) {
        if (tr.dense_start < 0) tr.dense_start = n;
        tr.dense.push_back(st);
      }
      st = prufer_step(st, cur.value(), ep);
      cur.advance();
      ++n;
    }
  }
  tr.samples.push_back({n, st.log_radius, st.angle});
  return tr;
}

// Reconstruct u(0..n_hi) for overlap and residual checks.
inline std::vector<double> reconstruct_solution(const Potential& pot,
                                                const EnergyPoint& ep,
                                                const BoundaryAngle& theta,
                                                std::int64_t n_hi) {
  if (n_hi < 1 || n_hi >= pot.horizon) {
    throw Error(Errc::out_of_horizon, "solution range exceeds the horizon");
  }
  std::vector<double> u(static_cast<std::size_t>(n_hi) + 1);
  u[0] = std::cos(theta.theta);
  PruferState st = boundary_to_prufer(theta, ep);
  std::int64_t n = 1;
  u[1] = std::exp(st.log_radius) * sinpi(st.angle);
  for (const auto& pc : pot.pieces) {
    if (pc.end <= 1) continue;
    PieceCursor cur(pc);
    while (cur.site() < n) cur.advance();
    while (!cur.done() && n < n_hi) {
      st = prufer_step(st, cur.value(), ep);
      cur.advance();
      ++n;
      u[static_cast<std::size_t>(n)] = std::exp(st.log_radius) * sinpi(st.angle);
    }
    if (n >= n_hi) break;
  }
  return u;
}

}  // namespace embeig
