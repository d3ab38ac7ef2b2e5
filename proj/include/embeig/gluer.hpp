#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embeig/averaging.hpp"
#include "embeig/errors.hpp"
#include "embeig/generator.hpp"
#include "embeig/model.hpp"
#include "embeig/potential.hpp"
#include "embeig/prufer.hpp"

namespace embeig {

enum class GlueMode { finite, countable };

// The admissible growth of |V(n)| (1 + n) in countable mode. Couplings are
// fitted under h, so h only needs to be positive and non-decreasing.
struct EnvelopeSpec {
  enum class Kind { log, power, table };
  Kind kind = Kind::log;
  double alpha = 0.5;  // exponent for Kind::power
  std::vector<std::pair<double, double>> table;  // step function (n, h(n))

  double operator()(double n) const {
    switch (kind) {
      case Kind::log:
        return std::log(2.0 + n);
      case Kind::power:
        return std::pow(1.0 + n, alpha);
      case Kind::table: {
        double h = 0.0;
        for (const auto& [x, y] : table) {
          if (x <= n) h = y;
          else break;
        }
        return h;
      }
    }
    return 0.0;
  }
};

// First site n > base at which a coupling k1 fits under the envelope:
// 102 k1 / (n - base) <= h(n) / (1 + n), using that the left side falls and
// the right side (eventually) rises.
inline std::int64_t activation_site(const EnvelopeSpec& h, double k1,
                                    std::int64_t base = 0,
                                    std::int64_t n_max = (std::int64_t{1} << 46)) {
  auto fits = [&](std::int64_t n) {
    double nn = static_cast<double>(n);
    return 102.0 * k1 / (nn - static_cast<double>(base)) <=
           h(nn) / (1.0 + nn);
  };
  std::int64_t lo = base + 1;
  if (fits(lo)) return lo;
  std::int64_t hi = lo;
  while (!fits(hi)) {
    if (hi >= n_max) {
      throw Error(Errc::envelope_never_fits,
                  "coupling " + std::to_string(k1) +
                      " does not fit under the envelope by n = " +
                      std::to_string(n_max));
    }
    hi = std::min(n_max, hi * 2);
  }
  while (hi - lo > 1) {
    std::int64_t mid = lo + (hi - lo) / 2;
    if (fits(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

struct ClassSchedule {
  ResonanceClass cls;
  double theta0 = 0.0;          // boundary angle of the primary member
  double partner_theta0 = 0.0;  // boundary angle of the partner (pairs)
  double k1 = 0.0;
  std::int64_t block_length = 0;
  double certified_bound = 0.0;
  std::int64_t gate = 0;  // earliest step start at which the class activates
};

struct GluingPlan {
  GlueMode mode = GlueMode::finite;
  std::vector<double> energies;
  std::vector<double> angles;
  std::vector<ClassSchedule> classes;
  double stop_factor = 8.0;
  std::int64_t min_piece_length = 64;
  std::int64_t initial_gap = 0;
  std::int64_t k2 = 0;
  double target_exponent = 5.0;
  double edge_margin = kDefaultEdgeMargin;
  EnvelopeSpec envelope;
  // Piece length caps as a fraction of the current start site.
  double finite_cap = 4.0;
  double countable_cap = 0.35;
};

struct PlanOptions {
  double target_exponent = 5.0;
  double stop_factor = 8.0;
  std::int64_t min_piece_length = 64;
  std::int64_t initial_gap = 0;  // 0: automatic
  EnvelopeSpec envelope;
  double block_epsilon = 0.0;
  std::int64_t block_max = 10000;
  double edge_margin = kDefaultEdgeMargin;
};

// Decide classes, couplings, block lengths and scheduling constants.
//
// Couplings: in finite mode k1 = 4 s p makes the averaged radius slope
// d log R / d log n equal -p (the decrement is k1/(2s) per log n in log R^2).
// In countable mode couplings are fitted under the envelope at geometrically
// spaced gates G_j = initial_gap 2^j: k1_j = h(G_j) / 204 leaves a factor-2
// margin in 102 k1_j / n <= h(n) / (1 + n) for all n >= G_j.
inline GluingPlan plan(const std::vector<double>& energies,
                       const std::vector<BoundaryAngle>& angles,
                       GlueMode mode, const PlanOptions& opt = {}) {
  if (energies.size() != angles.size()) {
    throw Error(Errc::invalid_parameter,
                "need one boundary angle per energy");
  }
  if (energies.empty()) {
    throw Error(Errc::invalid_parameter, "no energies prescribed");
  }
  if (!(opt.stop_factor > 1.0)) {
    throw Error(Errc::invalid_parameter, "stop factor must exceed 1");
  }
  GluingPlan p;
  p.mode = mode;
  p.energies = energies;
  for (const auto& a : angles) p.angles.push_back(make_boundary_angle(a.theta).theta);
  p.stop_factor = opt.stop_factor;
  p.min_piece_length = std::max<std::int64_t>(2, opt.min_piece_length);
  p.target_exponent = opt.target_exponent;
  p.edge_margin = opt.edge_margin;
  p.envelope = opt.envelope;

  if (mode == GlueMode::countable) {
    // Sanity of the envelope on a sampled geometric grid.
    double prev = 0.0;
    for (double n = 1.0; n <= 1e12; n *= 4.0) {
      double h = p.envelope(n);
      if (h < prev - 1e-12) {
        throw Error(Errc::invalid_parameter, "envelope must be non-decreasing");
      }
      prev = h;
    }
  }

  auto classes = resonance_classes(energies, opt.edge_margin);
  std::int64_t max_block = 2;
  double s_min = 1.0;
  for (const auto& c : classes) {
    ClassSchedule cs;
    cs.cls = c;
    cs.theta0 = p.angles[static_cast<std::size_t>(c.primary_index)];
    if (c.kind == ClassKind::pair) {
      cs.partner_theta0 = p.angles[static_cast<std::size_t>(c.partner_index)];
    }
    if (c.kind == ClassKind::zero) {
      cs.block_length = 2;
      cs.certified_bound = 0.0;
    } else {
      PieceKind kind =
          c.kind == ClassKind::pair ? PieceKind::pair : PieceKind::single;
      BlockChoice bc =
          choose_block_length(c.rep, kind, opt.block_epsilon, opt.block_max);
      cs.block_length = bc.length;
      cs.certified_bound = bc.certified_bound;
    }
    max_block = std::max(max_block, cs.block_length);
    s_min = std::min(s_min, c.rep.s);
    p.classes.push_back(cs);
  }

  // A class piece starting at site n has |V|/s up to 102 k1 / (n s). The
  // averaged decay equations only control the dynamics when that ratio is
  // well below 1 (at 1.27 a resonant partner thread demonstrably blows up, at
  // 1.13 it already decays), so every start site is pushed past the point
  // where the ratio falls to 0.6.
  auto w_floor = [](double k1, double s) {
    return static_cast<std::int64_t>(std::ceil(170.0 * k1 / s));
  };

  if (mode == GlueMode::finite) {
    std::int64_t k2 = 2 * max_block;
    for (auto& cs : p.classes) {
      cs.k1 = 4.0 * cs.cls.rep.s * opt.target_exponent;
      cs.gate = 0;
      if (cs.cls.kind != ClassKind::zero) {
        k2 = std::max(k2, w_floor(cs.k1, cs.cls.rep.s));
      }
    }
    p.k2 = k2;
    p.initial_gap = std::max({opt.initial_gap, p.k2,
                              std::int64_t{64}});
  } else {
    p.k2 = 2 * max_block;
    p.initial_gap = std::max({opt.initial_gap, p.k2, std::int64_t{1024}});
    std::int64_t gate = p.initial_gap;
    for (auto& cs : p.classes) {
      cs.gate = gate;
      double h = p.envelope(static_cast<double>(gate));
      cs.k1 = h / 204.0;
      if (!(cs.k1 > 0.0)) {
        throw Error(Errc::envelope_never_fits,
                    "envelope is not positive at the activation gate " +
                        std::to_string(gate));
      }
      // The fitted coupling must activate no later than its gate, and the
      // gate must already sit in the perturbative range of the coupling.
      std::int64_t act = activation_site(p.envelope, cs.k1);
      if (act > gate) {
        throw Error(Errc::envelope_never_fits,
                    "coupling fitted at gate " + std::to_string(gate) +
                        " activates only at " + std::to_string(act));
      }
      if (cs.cls.kind != ClassKind::zero &&
          w_floor(cs.k1, cs.cls.rep.s) > gate) {
        throw Error(Errc::envelope_never_fits,
                    "coupling fitted at gate " + std::to_string(gate) +
                        " is too strong for that site");
      }
      gate *= 2;
    }
  }
  return p;
}

// --- Assembly ---------------------------------------------------------------

struct StepRecord {
  int r = 0;
  std::int64_t start = 0;
  std::int64_t piece_length = 0;
  int active_classes = 0;
  std::int64_t end = 0;
};

struct PieceRecord {
  int r = 0;
  int class_index = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::int64_t block_length = 0;
  double target_drop = 0.0;  // realized log-radius drop of the target thread
  double sup_v_scaled = 0.0;
  double numerator_min = 0.0;
  double numerator_max = 0.0;
};

struct GluedResult {
  Potential potential;
  std::vector<SolutionTrace> traces;      // one per prescribed energy
  std::vector<PruferState> final_states;  // at the horizon
  std::vector<StepRecord> schedule;
  std::vector<PieceRecord> piece_log;
  std::vector<std::int64_t> activation_site;  // per class, -1 if never
  double sup_v_scaled = 0.0;
  std::int64_t sup_v_site = -1;
};

struct BuildOptions {
  int samples_per_decade = 512;
};

// Advance a set of independent solution states through one piece. The piece's
// own V sequence is replayed from its anchors; each state just rides along.
inline std::vector<PruferState> boundary_thread(
    std::span<const PruferState> states, std::span<const EnergyPoint> eps,
    const PotentialPiece& piece) {
  if (states.size() != eps.size()) {
    throw Error(Errc::invalid_parameter, "states and energies must align");
  }
  std::vector<PruferState> out(states.begin(), states.end());
  PieceCursor cur(piece);
  while (!cur.done()) {
    double v = cur.value();
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = prufer_step(out[j], v, eps[j]);
    }
    cur.advance();
  }
  return out;
}

namespace detail {

struct ThreadedRun {
  GeneratedPiece piece;
  std::vector<PruferState> states_after;  // all eigenvalues
};

// Run one piece targeting class `ci` starting at n0 with the given absolute
// per-eigenvalue states; returns the piece and the advanced states.
inline ThreadedRun run_class_piece(const GluingPlan& plan,
                                   const std::vector<EnergyPoint>& eps,
                                   std::size_t ci,
                                   const std::vector<PruferState>& states,
                                   std::int64_t n0, std::int64_t horizon,
                                   const GeneratorOptions& opts) {
  const ClassSchedule& cs = plan.classes[ci];
  const auto pi = static_cast<std::size_t>(cs.cls.primary_index);
  GeneratorParams params;
  params.k1 = cs.k1;
  params.k2 = plan.k2;
  params.block_length = cs.block_length;
  params.base = 0;
  params.horizon = horizon;

  std::vector<EnergyPoint> other_eps;
  std::vector<PruferState> other_states;
  std::vector<std::size_t> other_index;
  for (std::size_t j = 0; j < eps.size(); ++j) {
    if (static_cast<int>(j) == cs.cls.primary_index ||
        static_cast<int>(j) == cs.cls.partner_index) {
      continue;
    }
    other_eps.push_back(eps[j]);
    other_states.push_back(states[j]);
    other_index.push_back(j);
  }

  ThreadedRun out;
  double base_log = states[pi].log_radius;
  if (cs.cls.kind == ClassKind::pair) {
    const auto qi = static_cast<std::size_t>(cs.cls.partner_index);
    out.piece = generate_pair(eps[pi], other_eps, n0, states[pi].angle,
                              states[qi].angle, params, opts, other_states);
    out.states_after = states;
    out.states_after[pi] = {base_log + out.piece.target_final.log_radius,
                            out.piece.target_final.angle};
    out.states_after[qi] = {states[qi].log_radius +
                                out.piece.partner_final.log_radius,
                            out.piece.partner_final.angle};
  } else {
    out.piece = generate_single(eps[pi], other_eps, n0, states[pi].angle,
                                params, opts, other_states);
    out.states_after = states;
    out.states_after[pi] = {base_log + out.piece.target_final.log_radius,
                            out.piece.target_final.angle};
  }
  for (std::size_t j = 0; j < other_index.size(); ++j) {
    out.states_after[other_index[j]] = out.piece.bystander_finals[j];
  }
  return out;
}

// Append piece-local samples (target/partner are piece-relative in log R,
// bystanders absolute) onto the global per-eigenvalue traces.
inline void merge_traces(const GluingPlan& plan, std::size_t ci,
                         const std::vector<PruferState>& states_before,
                         const GeneratedPiece& g,
                         std::vector<SolutionTrace>& traces) {
  const ClassSchedule& cs = plan.classes[ci];
  auto append = [](SolutionTrace& tr, TraceSample smp) {
    if (!tr.samples.empty() && tr.samples.back().n == smp.n) return;
    tr.samples.push_back(smp);
  };
  const auto pi = static_cast<std::size_t>(cs.cls.primary_index);
  double off = states_before[pi].log_radius;
  for (const auto& smp : g.target.samples) {
    append(traces[pi], {smp.n, off + smp.log_radius, smp.angle});
  }
  if (cs.cls.kind == ClassKind::pair) {
    const auto qi = static_cast<std::size_t>(cs.cls.partner_index);
    double off_q = states_before[qi].log_radius;
    for (const auto& smp : g.partner.samples) {
      append(traces[qi], {smp.n, off_q + smp.log_radius, smp.angle});
    }
  }
  std::size_t bj = 0;
  for (std::size_t j = 0; j < traces.size(); ++j) {
    if (static_cast<int>(j) == cs.cls.primary_index ||
        static_cast<int>(j) == cs.cls.partner_index) {
      continue;
    }
    for (const auto& smp : g.bystanders[bj].samples) {
      append(traces[j], {smp.n, smp.log_radius, smp.angle});
    }
    ++bj;
  }
}

}  // namespace detail

// Assemble the full potential on [0, horizon): a free initial gap, then
// steps r = 1, 2, ... of N_r equal-length pieces, one per active class, with
// every eigenvalue's state threaded across all boundaries. Piece lengths are
// found adaptively (first length at which the target has dropped by
// stop_factor, between min_piece_length and the mode's cap), then equalized
// within the step by a second pass so that J_r = J_{r-1} + N_r T_r exactly.
inline GluedResult build(const GluingPlan& plan, std::int64_t horizon,
                         const BuildOptions& build_opts = {}) {
  const std::size_t ne = plan.energies.size();
  std::vector<EnergyPoint> eps;
  for (double e : plan.energies) {
    eps.push_back(make_energy_point(e, plan.edge_margin));
  }

  std::int64_t j0 = plan.initial_gap;
  if (horizon < j0 + plan.min_piece_length) {
    throw Error(Errc::horizon_too_short,
                "horizon " + std::to_string(horizon) +
                    " cannot fit the initial gap plus one piece");
  }

  GluedResult out;
  out.traces.resize(ne);
  out.activation_site.assign(plan.classes.size(), -1);

  // Boundary states at n = 1, then free evolution across the gap.
  std::vector<PruferState> states;
  for (std::size_t j = 0; j < ne; ++j) {
    states.push_back(boundary_to_prufer({plan.angles[j]}, eps[j]));
    out.traces[j].samples.push_back(
        {1, states[j].log_radius, states[j].angle});
  }
  for (std::int64_t n = 1; n < j0; ++n) {
    for (std::size_t j = 0; j < ne; ++j) {
      states[j] = prufer_step(states[j], 0.0, eps[j]);
    }
  }
  for (std::size_t j = 0; j < ne; ++j) {
    out.traces[j].samples.push_back({j0, states[j].log_radius, states[j].angle});
  }
  PotentialPiece gap;
  gap.start = 0;
  gap.end = j0;
  gap.kind = PieceKind::zero;
  out.potential.pieces.push_back(gap);

  GeneratorOptions gen_opts;
  gen_opts.samples_per_decade = build_opts.samples_per_decade;

  std::int64_t j_cur = j0;
  int prev_active = 0;
  int r = 1;
  while (true) {
    int eligible = 0;
    for (const auto& cs : plan.classes) {
      if (cs.gate <= j_cur) ++eligible;
    }
    int n_active = plan.mode == GlueMode::finite
                       ? static_cast<int>(plan.classes.size())
                       : std::min(prev_active + 1, eligible);
    std::int64_t remaining_cap = (horizon - j_cur) / n_active;
    if (remaining_cap < plan.min_piece_length) break;
    double cap_frac =
        plan.mode == GlueMode::finite ? plan.finite_cap : plan.countable_cap;
    auto cap = static_cast<std::int64_t>(cap_frac * static_cast<double>(j_cur));
    cap = std::max(cap, plan.min_piece_length);
    cap = std::min(cap, remaining_cap);

    // Earlier slots in a step cover more log-length, so the serving order
    // rotates with r to share the decay budget evenly across classes.
    auto slot_class = [&](int slot) {
      return static_cast<std::size_t>((slot + r - 1) % n_active);
    };

    // Pass 1: probe each class's adaptive length.
    GeneratorOptions probe_opts = gen_opts;
    probe_opts.stop_log_drop = std::log(plan.stop_factor);
    probe_opts.min_length = plan.min_piece_length;
    probe_opts.max_length = cap;
    std::int64_t t_step = plan.min_piece_length;
    {
      std::vector<PruferState> sim = states;
      std::int64_t sim_start = j_cur;
      for (int a = 0; a < n_active; ++a) {
        auto run = detail::run_class_piece(plan, eps, slot_class(a), sim,
                                           sim_start, horizon, probe_opts);
        t_step = std::max(t_step, run.piece.piece.end - run.piece.piece.start);
        sim = run.states_after;
        sim_start = run.piece.piece.end;
      }
    }

    // Pass 2: realize the step with the equalized length.
    GeneratorOptions fixed_opts = gen_opts;
    fixed_opts.fixed_length = t_step;
    for (int a = 0; a < n_active; ++a) {
      auto run = detail::run_class_piece(plan, eps, slot_class(a), states,
                                         j_cur, horizon, fixed_opts);
      const GeneratedPiece& g = run.piece;
      // A class thread may wobble up a little while its phase settles onto
      // the decaying branch, but a large rise inside its own piece means the
      // coupling is outside the averaged regime.
      if (std::max(g.target_max_rise, g.partner_max_rise) > 2.0) {
        throw Error(Errc::resonant_hypothesis_violated,
                    "class thread rose by " +
                        std::to_string(
                            std::max(g.target_max_rise, g.partner_max_rise)) +
                        " inside its own piece at n = " +
                        std::to_string(g.piece.start));
      }
      std::size_t ci = slot_class(a);
      detail::merge_traces(plan, ci, states, g, out.traces);
      if (out.activation_site[ci] < 0) {
        out.activation_site[ci] = g.piece.start;
      }
      PieceRecord rec;
      rec.r = r;
      rec.class_index = static_cast<int>(ci);
      rec.start = g.piece.start;
      rec.end = g.piece.end;
      rec.block_length = g.block_length;
      double drop = -g.target_final.log_radius;
      if (plan.classes[ci].cls.kind == ClassKind::pair) {
        drop = std::min(drop, -g.partner_final.log_radius);
      }
      rec.target_drop = drop;
      rec.sup_v_scaled = g.sup_v_scaled;
      rec.numerator_min = g.numerator_min;
      rec.numerator_max = g.numerator_max;
      out.piece_log.push_back(rec);
      if (g.sup_v_scaled > out.sup_v_scaled) {
        out.sup_v_scaled = g.sup_v_scaled;
        out.sup_v_site = g.sup_v_site;
      }
      out.potential.pieces.push_back(g.piece);
      states = run.states_after;
      j_cur = g.piece.end;
    }
    out.schedule.push_back(
        {r, j_cur - static_cast<std::int64_t>(n_active) * t_step, t_step,
         n_active, j_cur});
    prev_active = n_active;
    ++r;
  }

  // Trailing free remainder keeps the potential contiguous to the horizon.
  if (j_cur < horizon) {
    PotentialPiece tail;
    tail.start = j_cur;
    tail.end = horizon;
    tail.kind = PieceKind::zero;
    out.potential.pieces.push_back(tail);
    for (std::int64_t n = j_cur; n < horizon; ++n) {
      for (std::size_t j = 0; j < ne; ++j) {
        states[j] = prufer_step(states[j], 0.0, eps[j]);
      }
    }
  }
  for (std::size_t j = 0; j < ne; ++j) {
    auto& tr = out.traces[j];
    if (tr.samples.empty() || tr.samples.back().n != horizon) {
      tr.samples.push_back({horizon, states[j].log_radius, states[j].angle});
    }
  }
  out.final_states = states;
  out.potential.horizon = horizon;
  out.potential.edge_margin = plan.edge_margin;
  out.potential.energies = plan.energies;
  out.potential.boundary_angles = plan.angles;
  out.potential.sup_v_scaled = out.sup_v_scaled;
  validate(out.potential);
  return out;
}

}  // namespace embeig
