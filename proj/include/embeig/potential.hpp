#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "embeig/errors.hpp"
#include "embeig/model.hpp"
#include "embeig/prufer.hpp"
#include "embeig/trig.hpp"

namespace embeig {

// The constructed potential is a concatenation of pieces. Each piece carries
// the closed-form rule for V(n) on [start, end): either identically zero, or
// a 1/(n - base) envelope modulated by the phases of the piece's own target
// solution(s). Storing the anchor phases at `start` makes every piece
// self-replaying: V is recomputed, never stored site by site.
enum class PieceKind {
  zero,    // V = 0
  single,  // V = k1 (sin(2 pi angle) + 100) / (n - base), one target phase
  pair,    // V = k1 (sin(2 pi angle) + sin(2 pi partner) + 100) / (n - base)
};

inline const char* to_string(PieceKind k) {
  switch (k) {
    case PieceKind::zero: return "zero";
    case PieceKind::single: return "single";
    case PieceKind::pair: return "pair";
  }
  return "?";
}

struct PotentialPiece {
  std::int64_t start = 0;
  std::int64_t end = 0;  // exclusive
  PieceKind kind = PieceKind::zero;
  double energy = 0.0;  // target energy (positive member for pair pieces)
  double k1 = 0.0;      // coupling prefactor, > 0 for non-zero pieces
  std::int64_t base = 0;
  double anchor_angle = 0.0;          // target phase at n = start
  double partner_anchor_angle = 0.0;  // partner phase at n = start (pair)
};

// --- The single source of truth for piece evaluation -----------------------
//
// Every consumer (the generator, random access, verification replay, state
// threading) must produce bit-identical V sequences, so they all go through
// these two functions in the same order: value first, then advance.

struct PieceThreads {
  PruferState target;
  PruferState partner;
};

inline double piece_value(PieceKind kind, double k1, std::int64_t n,
                          std::int64_t base, const PieceThreads& th) {
  switch (kind) {
    case PieceKind::zero:
      return 0.0;
    case PieceKind::single: {
      double num = sin2pi(th.target.angle) + 100.0;
      return k1 * num / static_cast<double>(n - base);
    }
    case PieceKind::pair: {
      double num = (sin2pi(th.target.angle) + sin2pi(th.partner.angle)) + 100.0;
      return k1 * num / static_cast<double>(n - base);
    }
  }
  return 0.0;
}

inline void piece_advance(PieceKind kind, const EnergyPoint& ep,
                          const EnergyPoint& partner_ep, PieceThreads& th,
                          double v) {
  switch (kind) {
    case PieceKind::zero:
      th.target.angle += ep.k;
      break;
    case PieceKind::single:
      th.target = prufer_step(th.target, v, ep);
      break;
    case PieceKind::pair:
      th.target = prufer_step(th.target, v, ep);
      th.partner = prufer_step(th.partner, v, partner_ep);
      break;
  }
}

// Sequential replay of one piece from its anchors.
class PieceCursor {
 public:
  explicit PieceCursor(const PotentialPiece& piece)
      : piece_(&piece), n_(piece.start) {
    if (piece.kind != PieceKind::zero) {
      ep_ = make_energy_point(piece.energy);
      partner_ep_ = resonant_partner(ep_);
    }
    threads_.target = {0.0, piece.anchor_angle};
    threads_.partner = {0.0, piece.partner_anchor_angle};
  }

  std::int64_t site() const { return n_; }
  bool done() const { return n_ >= piece_->end; }
  const PieceThreads& threads() const { return threads_; }
  const EnergyPoint& energy_point() const { return ep_; }

  double value() const {
    return piece_value(piece_->kind, piece_->k1, n_, piece_->base, threads_);
  }

  void advance() {
    double v = value();
    piece_advance(piece_->kind, ep_, partner_ep_, threads_, v);
    ++n_;
  }

  // Jump the cursor to a previously recorded checkpoint.
  void restore(std::int64_t n, const PieceThreads& th) {
    n_ = n;
    threads_ = th;
  }

 private:
  const PotentialPiece* piece_;
  std::int64_t n_;
  EnergyPoint ep_;
  EnergyPoint partner_ep_;
  PieceThreads threads_;
};

// --- Assembled potential ----------------------------------------------------

struct Potential {
  std::vector<PotentialPiece> pieces;  // contiguous, pieces[0].start == 0
  std::int64_t horizon = 0;            // == pieces.back().end
  double edge_margin = kDefaultEdgeMargin;
  // Construction metadata (carried through serialization so verification and
  // spectral checks need no extra inputs).
  std::vector<double> energies;
  std::vector<double> boundary_angles;
  double sup_v_scaled = 0.0;  // sup |V(n)| (1+n) if recorded, else 0
};

inline void validate(const Potential& p) {
  if (p.pieces.empty()) {
    throw Error(Errc::invalid_parameter, "potential has no pieces");
  }
  if (p.pieces.front().start != 0) {
    throw Error(Errc::invalid_parameter, "potential must start at site 0");
  }
  std::int64_t at = 0;
  for (const auto& pc : p.pieces) {
    if (pc.start != at || pc.end <= pc.start) {
      throw Error(Errc::invalid_parameter, "pieces must be contiguous");
    }
    if (pc.kind != PieceKind::zero) {
      if (!(pc.k1 > 0.0)) {
        throw Error(Errc::invalid_parameter, "piece coupling must be > 0");
      }
      if (pc.start - pc.base < 1) {
        throw Error(Errc::invalid_parameter, "piece must start past its base");
      }
    }
    at = pc.end;
  }
  if (at != p.horizon) {
    throw Error(Errc::invalid_parameter, "horizon does not match pieces");
  }
  if (p.energies.size() != p.boundary_angles.size()) {
    throw Error(Errc::invalid_parameter,
                "energies and boundary angles must align");
  }
}

// Walk V(n) over [begin, end), calling fn(n, V(n)).
inline void scan_potential(const Potential& p, std::int64_t begin,
                           std::int64_t end,
                           const std::function<void(std::int64_t, double)>& fn) {
  if (begin < 0 || end > p.horizon || begin > end) {
    throw Error(Errc::out_of_horizon,
                "scan range [" + std::to_string(begin) + ", " +
                    std::to_string(end) + ") outside [0, " +
                    std::to_string(p.horizon) + ")");
  }
  for (const auto& pc : p.pieces) {
    if (pc.end <= begin) continue;
    if (pc.start >= end) break;
    PieceCursor cur(pc);
    while (cur.site() < begin) cur.advance();
    while (!cur.done() && cur.site() < end) {
      fn(cur.site(), cur.value());
      cur.advance();
    }
  }
}

// Random access with piece-local checkpoints (one per kCheckpointStride
// sites, built eagerly by one full replay).
class PotentialEvaluator {
 public:
  static constexpr std::int64_t kCheckpointStride = 4096;

  explicit PotentialEvaluator(const Potential& p) : potential_(&p) {
    validate(p);
    checkpoints_.resize(p.pieces.size());
    for (std::size_t i = 0; i < p.pieces.size(); ++i) {
      const auto& pc = p.pieces[i];
      PieceCursor cur(pc);
      while (!cur.done()) {
        if ((cur.site() - pc.start) % kCheckpointStride == 0) {
          checkpoints_[i].push_back(cur.threads());
        }
        cur.advance();
      }
    }
  }

  double operator()(std::int64_t n) const {
    if (n < 0 || n >= potential_->horizon) {
      throw Error(Errc::out_of_horizon,
                  "site " + std::to_string(n) + " outside [0, " +
                      std::to_string(potential_->horizon) + ")");
    }
    std::size_t lo = 0, hi = potential_->pieces.size();
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      if (potential_->pieces[mid].start <= n) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const auto& pc = potential_->pieces[lo];
    std::int64_t ci = (n - pc.start) / kCheckpointStride;
    PieceCursor cur(pc);
    cur.restore(pc.start + ci * kCheckpointStride,
                checkpoints_[lo][static_cast<std::size_t>(ci)]);
    while (cur.site() < n) cur.advance();
    return cur.value();
  }

  const Potential& potential() const { return *potential_; }

 private:
  const Potential* potential_;
  std::vector<std::vector<PieceThreads>> checkpoints_;
};

}  // namespace embeig
