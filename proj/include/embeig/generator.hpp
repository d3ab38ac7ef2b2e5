#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "embeig/averaging.hpp"
#include "embeig/errors.hpp"
#include "embeig/model.hpp"
#include "embeig/potential.hpp"
#include "embeig/prufer.hpp"

namespace embeig {

struct TraceSample {
  std::int64_t n = 0;
  double log_radius = 0.0;
  double angle = 0.0;
};

// Samples of one solution's polar state along the lattice. `samples` holds
// block-boundary states, decimated geometrically so every decade of n ends up
// with about the same count. A contiguous window of every-site states can be
// requested on top (needed for partial-sum checks, which must see every
// term).
struct SolutionTrace {
  std::vector<TraceSample> samples;
  std::int64_t dense_start = -1;
  std::vector<PruferState> dense;

  bool has_dense(std::int64_t lo, std::int64_t hi) const {
    return dense_start >= 0 && dense_start <= lo &&
           lo <= hi && hi <= dense_start + static_cast<std::int64_t>(dense.size());
  }
};

struct GeneratorParams {
  double k1 = 0.0;               // coupling prefactor, required > 0
  std::int64_t k2 = 0;           // required distance n0 - base (0: just 2N)
  std::int64_t block_length = 0; // averaging block (0: choose automatically)
  double epsilon = 0.0;          // averaging tolerance (0: s / 8e4)
  std::int64_t base = 0;         // b in the 1/(n - b) envelope
  std::int64_t horizon = 0;      // absolute end of generation (exclusive)
};

struct GeneratorOptions {
  // Geometric decimation density for the sparse trace.
  int samples_per_decade = 512;
  // Record every-site target states on [dense_begin, dense_end).
  std::int64_t dense_begin = -1;
  std::int64_t dense_end = -1;
  // Fixed piece length (> 0 overrides adaptive stopping and the horizon may
  // not be exceeded).
  std::int64_t fixed_length = 0;
  // Adaptive stop: end the piece at the first n with
  // log R(n) - log R(n0) <= -stop_log_drop for the target (and the partner,
  // when present), subject to min_length <= n - n0 <= max_length.
  double stop_log_drop = 0.0;
  std::int64_t min_length = 0;
  std::int64_t max_length = 0;  // 0: unlimited (up to horizon)
};

struct GeneratedPiece {
  PotentialPiece piece;
  std::int64_t block_length = 0;
  double certified_bound = 0.0;
  SolutionTrace target;
  SolutionTrace partner;  // empty unless the piece is a resonant pair
  std::vector<SolutionTrace> bystanders;
  PruferState target_final;
  PruferState partner_final;
  std::vector<PruferState> bystander_finals;
  // Realized range of V(n) (n - base) / k1 over the piece, tracked exactly.
  double numerator_min = 0.0;
  double numerator_max = 0.0;
  // Realized sup of |V(n)| (1 + n) over the piece and the site attaining it.
  double sup_v_scaled = 0.0;
  std::int64_t sup_v_site = -1;
  // Largest log-radius rise above the piece-initial value, per thread.
  double target_max_rise = 0.0;
  double partner_max_rise = 0.0;
  std::vector<double> bystander_max_rise;
};

namespace detail {

inline double decimation_growth(int samples_per_decade) {
  return std::pow(10.0, 1.0 / std::max(1, samples_per_decade));
}

// Deterministic decimated subsequence of block indices: dense at first, then
// geometric with the given per-decade density.
inline std::int64_t next_sampled_block(std::int64_t m, double growth) {
  auto geo = static_cast<std::int64_t>(static_cast<double>(m) * growth);
  return std::max(m + 1, geo);
}

struct GenerateRequest {
  PieceKind kind = PieceKind::single;
  EnergyPoint ep;
  std::int64_t n0 = 0;
  double theta0 = 0.0;
  double theta_tilde0 = 0.0;
};

inline GeneratedPiece run_generation(const GenerateRequest& req,
                                     std::span<const EnergyPoint> others,
                                     std::span<const PruferState> other_states,
                                     const GeneratorParams& params,
                                     const GeneratorOptions& opts) {
  if (!(params.k1 > 0.0)) {
    throw Error(Errc::invalid_parameter, "coupling k1 must be > 0");
  }
  if (params.horizon <= req.n0) {
    throw Error(Errc::horizon_too_short,
                "horizon " + std::to_string(params.horizon) +
                    " does not reach past n0 = " + std::to_string(req.n0));
  }
  for (const auto& o : others) {
    if (o.e == req.ep.e || o.e == -req.ep.e) {
      throw Error(Errc::resonant_hypothesis_violated,
                  "background set contains " + std::to_string(o.e) +
                      " resonant with the target " + std::to_string(req.ep.e));
    }
  }
  if (!other_states.empty() && other_states.size() != others.size()) {
    throw Error(Errc::invalid_parameter,
                "background states must align with background energies");
  }

  // Averaging block.
  std::int64_t block = params.block_length;
  double certified = 0.0;
  if (req.ep.e == 0.0) {
    // At the band center consecutive sites are antiperiodic in the first
    // harmonic (sin x + sin(x + pi) = 0), so the two-site block cancels it
    // exactly; no scan is possible or needed.
    if (block == 0) block = 2;
    if (block != 2) {
      throw Error(Errc::invalid_parameter,
                  "band-center pieces use block length 2");
    }
  } else if (block == 0) {
    BlockChoice bc = choose_block_length(req.ep, req.kind, params.epsilon);
    block = bc.length;
    certified = bc.certified_bound;
  } else {
    certified = grid_average_bound(req.ep, block,
                                   required_probes(req.kind));
  }

  std::int64_t need = std::max<std::int64_t>(params.k2, 2 * block);
  if (req.n0 - params.base < need) {
    throw Error(Errc::invalid_parameter,
                "n0 - base = " + std::to_string(req.n0 - params.base) +
                    " below the required margin " + std::to_string(need));
  }

  GeneratedPiece out;
  out.block_length = block;
  out.certified_bound = certified;
  out.piece.kind = req.kind;
  out.piece.start = req.n0;
  out.piece.energy = req.ep.e;
  out.piece.k1 = params.k1;
  out.piece.base = params.base;
  out.piece.anchor_angle = req.theta0;
  out.piece.partner_anchor_angle =
      req.kind == PieceKind::pair ? req.theta_tilde0 : 0.0;

  EnergyPoint partner_ep = resonant_partner(req.ep);
  PieceThreads th;
  th.target = {0.0, req.theta0};
  th.partner = {0.0, req.theta_tilde0};

  std::vector<PruferState> bys(other_states.begin(), other_states.end());
  if (bys.empty() && !others.empty()) {
    bys.assign(others.size(), PruferState{0.0, 0.0});
  }
  std::vector<double> bys_baseline(bys.size());
  for (std::size_t j = 0; j < bys.size(); ++j) {
    bys_baseline[j] = bys[j].log_radius;
  }
  out.bystanders.resize(others.size());
  out.bystander_max_rise.assign(others.size(), 0.0);

  std::int64_t hard_end = params.horizon;
  if (opts.fixed_length > 0) {
    if (req.n0 + opts.fixed_length > params.horizon) {
      throw Error(Errc::horizon_too_short, "fixed piece length exceeds horizon");
    }
    hard_end = req.n0 + opts.fixed_length;
  } else if (opts.max_length > 0) {
    hard_end = std::min(hard_end, req.n0 + opts.max_length);
  }
  bool adaptive = opts.fixed_length == 0 && opts.stop_log_drop > 0.0;

  double growth = decimation_growth(opts.samples_per_decade);
  std::int64_t next_block = 0;
  out.numerator_min = 1e300;
  out.numerator_max = -1e300;

  std::int64_t n = req.n0;
  while (true) {
    std::int64_t m_off = n - req.n0;
    bool at_block = (m_off % block) == 0;
    if (at_block && m_off / block == next_block) {
      out.target.samples.push_back({n, th.target.log_radius, th.target.angle});
      if (req.kind == PieceKind::pair) {
        out.partner.samples.push_back(
            {n, th.partner.log_radius, th.partner.angle});
      }
      for (std::size_t j = 0; j < bys.size(); ++j) {
        out.bystanders[j].samples.push_back(
            {n, bys[j].log_radius, bys[j].angle});
      }
      next_block = next_sampled_block(next_block, growth);
    }
    if (n >= opts.dense_begin && n < opts.dense_end) {
      if (out.target.dense_start < 0) out.target.dense_start = n;
      out.target.dense.push_back(th.target);
    }

    if (n >= hard_end) break;
    if (adaptive && m_off >= std::max<std::int64_t>(opts.min_length, 1)) {
      bool dropped = th.target.log_radius <= -opts.stop_log_drop &&
                     (req.kind != PieceKind::pair ||
                      th.partner.log_radius <= -opts.stop_log_drop);
      if (dropped) break;
    }

    double v = piece_value(req.kind, params.k1, n, params.base, th);
    double num = v * static_cast<double>(n - params.base) / params.k1;
    out.numerator_min = std::min(out.numerator_min, num);
    out.numerator_max = std::max(out.numerator_max, num);
    double v_scaled = std::abs(v) * static_cast<double>(1 + n);
    if (v_scaled > out.sup_v_scaled) {
      out.sup_v_scaled = v_scaled;
      out.sup_v_site = n;
    }
    piece_advance(req.kind, req.ep, partner_ep, th, v);
    for (std::size_t j = 0; j < bys.size(); ++j) {
      bys[j] = prufer_step(bys[j], v, others[j]);
      out.bystander_max_rise[j] = std::max(
          out.bystander_max_rise[j], bys[j].log_radius - bys_baseline[j]);
    }
    out.target_max_rise = std::max(out.target_max_rise, th.target.log_radius);
    if (req.kind == PieceKind::pair) {
      out.partner_max_rise =
          std::max(out.partner_max_rise, th.partner.log_radius);
    }
    ++n;
  }

  // Close the trace at the realized end.
  if (out.target.samples.empty() || out.target.samples.back().n != n) {
    out.target.samples.push_back({n, th.target.log_radius, th.target.angle});
    if (req.kind == PieceKind::pair) {
      out.partner.samples.push_back(
          {n, th.partner.log_radius, th.partner.angle});
    }
    for (std::size_t j = 0; j < bys.size(); ++j) {
      out.bystanders[j].samples.push_back({n, bys[j].log_radius, bys[j].angle});
    }
  }
  out.piece.end = n;
  out.target_final = th.target;
  out.partner_final = th.partner;
  out.bystander_finals = std::move(bys);
  if (out.numerator_min > out.numerator_max) {
    out.numerator_min = out.numerator_max = 0.0;  // zero-length guard
  }
  return out;
}

}  // namespace detail

// Build one resonant-pair piece: the potential follows the coupled phases of
// the E and -E solutions started at (theta0, theta_tilde0) at n0, and every
// background state is carried along under the same V.
inline GeneratedPiece generate_pair(const EnergyPoint& ep,
                                    std::span<const EnergyPoint> others,
                                    std::int64_t n0, double theta0,
                                    double theta_tilde0,
                                    const GeneratorParams& params,
                                    const GeneratorOptions& opts = {},
                                    std::span<const PruferState> other_states = {}) {
  if (!(ep.e > 0.0)) {
    throw Error(Errc::invalid_parameter,
                "pair pieces take the positive member as target");
  }
  detail::GenerateRequest req;
  req.kind = PieceKind::pair;
  req.ep = ep;
  req.n0 = n0;
  req.theta0 = theta0;
  req.theta_tilde0 = theta_tilde0;
  return detail::run_generation(req, others, other_states, params, opts);
}

// Build one single-energy piece (E != -E prescribed); at E = 0 the block
// bookkeeping switches to the two-site form.
inline GeneratedPiece generate_single(const EnergyPoint& ep,
                                      std::span<const EnergyPoint> others,
                                      std::int64_t n0, double theta0,
                                      const GeneratorParams& params,
                                      const GeneratorOptions& opts = {},
                                      std::span<const PruferState> other_states = {}) {
  detail::GenerateRequest req;
  req.kind = PieceKind::single;
  req.ep = ep;
  req.n0 = n0;
  req.theta0 = theta0;
  return detail::run_generation(req, others, other_states, params, opts);
}

// --- Block-average diagnostics ---------------------------------------------
//
// Inverting the averaged recurrences over one block [n, n+N) gives two
// dimensionless residuals per block:
//   delta: departure of the radius decrement from its averaged value,
//   eps:   departure of the phase drift from its averaged value,
// both normalized so the averaged theory predicts |delta| <= s / 1e4-ish and
// |eps| < 1 when the coupling dominates the remainder terms.
struct BlockDiagnostic {
  std::int64_t m = 0;  // block index
  double delta = 0.0;
  double eps = 0.0;
};

inline std::vector<BlockDiagnostic> block_diagnostics(const GeneratedPiece& g) {
  std::vector<BlockDiagnostic> out;
  const auto& ts = g.target.samples;
  const std::int64_t n0 = g.piece.start;
  const std::int64_t nn = g.block_length;
  const double k1 = g.piece.k1;
  const std::int64_t b = g.piece.base;
  EnergyPoint ep = make_energy_point(g.piece.energy);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    if (ts[i + 1].n - ts[i].n != nn) continue;
    if ((ts[i].n - n0) % nn != 0) continue;
    double nb = static_cast<double>(ts[i].n - b);
    double dlog = ts[i + 1].log_radius - ts[i].log_radius;
    BlockDiagnostic d;
    d.m = (ts[i].n - n0) / nn;
    if (g.piece.kind == PieceKind::pair) {
      const auto& ps = g.partner.samples;
      double phi1 = ts[i].angle + ps[i].angle;
      double phi2 = ts[i + 1].angle + ps[i + 1].angle;
      d.delta = -4.0 * dlog * nb * ep.s / (k1 * nn) - 1.0 + cos2pi(phi1);
      d.eps = (phi2 - phi1 - static_cast<double>(nn)) * nb * kPi * ep.s /
                  (k1 * nn) -
              100.0;
    } else if (ep.e == 0.0) {
      double dth = ts[i + 1].angle - ts[i].angle;
      d.delta = -2.0 * dlog * nb / k1 - 1.0 + cos2pi(2.0 * ts[i].angle);
      d.eps = (dth - 1.0) * kPi * nb / k1 - 100.0;
    } else {
      double dth = ts[i + 1].angle - ts[i].angle;
      d.delta = -4.0 * dlog * nb * ep.s / (k1 * nn) - 1.0;
      d.eps = (dth - static_cast<double>(nn) * ep.k) * nb * kPi * ep.s /
                  (k1 * nn) -
              50.0;
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace embeig
