#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "embeig/errors.hpp"
#include "embeig/trig.hpp"

namespace embeig {

// A spectral parameter inside the essential band (-2, 2) of the free
// half-line operator u(n+1) + u(n-1) + V(n) u(n) = E u(n), together with its
// quasimomentum k in (0, 1) defined by E = 2 cos(pi k) and s = sin(pi k) > 0.
struct EnergyPoint {
  double e = 0.0;
  double k = 0.0;
  double s = 0.0;
};

inline constexpr double kDefaultEdgeMargin = 1e-9;

inline EnergyPoint make_energy_point(double e,
                                     double edge_margin = kDefaultEdgeMargin) {
  if (!(std::abs(e) <= 2.0 - edge_margin)) {
    throw Error(Errc::edge_energy,
                "energy " + std::to_string(e) + " within " +
                    std::to_string(edge_margin) + " of the band edge");
  }
  if (e == 0.0) return {0.0, 0.5, 1.0};  // keep the band center exact
  double k = std::acos(0.5 * e) / kPi;
  return {e, k, sinpi(k)};
}

// Build the point directly from the quasimomentum (k stays bit-exact; useful
// for rational k).
inline EnergyPoint energy_point_from_k(double k) {
  if (!(k > 0.0 && k < 1.0)) {
    throw Error(Errc::invalid_parameter, "quasimomentum must lie in (0, 1)");
  }
  return {2.0 * cospi(k), k, sinpi(k)};
}

// The partner energy -E has quasimomentum 1 - k and the same sin(pi k).
inline EnergyPoint resonant_partner(const EnergyPoint& p) {
  return {-p.e, 1.0 - p.k, p.s};
}

// Boundary condition u(1) cos(theta) = u(0) sin(theta), parametrized so that
// (u(0), u(1)) = (cos theta, sin theta); theta in [0, pi).
struct BoundaryAngle {
  double theta = 0.0;
};

inline BoundaryAngle make_boundary_angle(double theta) {
  if (!(theta >= 0.0 && theta < kPi)) {
    throw Error(Errc::invalid_parameter,
                "boundary angle must lie in [0, pi)");
  }
  return {theta};
}

// Polar state of a solution at one site: radius stored as a logarithm (the
// radii here decay through dozens of e-foldings) and the phase in units of
// pi, unwrapped (never reduced mod its period 2).
struct PruferState {
  double log_radius = 0.0;
  double angle = 0.0;
};

// Two consecutive solution values (u(n-1), u(n)).
struct SolutionPair {
  double prev = 0.0;
  double cur = 0.0;
};

// --- Grouping of prescribed energies --------------------------------------

enum class ClassKind {
  pair,    // {E, -E} both prescribed, E > 0
  single,  // E alone, -E not prescribed, E != 0
  zero,    // E == 0
};

struct ResonanceClass {
  ClassKind kind = ClassKind::single;
  // Indices into the prescribed energy list: primary is the positive member
  // of a pair (or the lone member); partner_index is the index of -E for
  // pairs, -1 otherwise.
  int primary_index = -1;
  int partner_index = -1;
  EnergyPoint rep;  // energy point of the primary member
};

// Partition prescribed energies into mutually resonant groups. E and -E are
// resonant with each other (their quasimomenta sum to 1) and must be
// constructed by one coupled piece; every other value stands alone. Classes
// are returned in order of first appearance. Duplicate values (exact
// double equality) are rejected.
inline std::vector<ResonanceClass> resonance_classes(
    const std::vector<double>& energies,
    double edge_margin = kDefaultEdgeMargin) {
  std::vector<EnergyPoint> points;
  points.reserve(energies.size());
  for (double e : energies) points.push_back(make_energy_point(e, edge_margin));
  for (std::size_t i = 0; i < energies.size(); ++i) {
    for (std::size_t j = i + 1; j < energies.size(); ++j) {
      if (energies[i] == energies[j]) {
        throw Error(Errc::duplicate_energy,
                    "energy " + std::to_string(energies[i]) +
                        " prescribed twice");
      }
    }
  }
  std::vector<ResonanceClass> classes;
  std::vector<bool> used(energies.size(), false);
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    ResonanceClass c;
    if (energies[i] == 0.0) {
      c.kind = ClassKind::zero;
      c.primary_index = static_cast<int>(i);
      c.rep = points[i];
      classes.push_back(c);
      continue;
    }
    int mirror = -1;
    for (std::size_t j = i + 1; j < energies.size(); ++j) {
      if (!used[j] && energies[j] == -energies[i]) {
        mirror = static_cast<int>(j);
        break;
      }
    }
    if (mirror >= 0) {
      used[static_cast<std::size_t>(mirror)] = true;
      c.kind = ClassKind::pair;
      if (energies[i] > 0.0) {
        c.primary_index = static_cast<int>(i);
        c.partner_index = mirror;
      } else {
        c.primary_index = mirror;
        c.partner_index = static_cast<int>(i);
      }
      c.rep = points[static_cast<std::size_t>(c.primary_index)];
    } else {
      c.kind = ClassKind::single;
      c.primary_index = static_cast<int>(i);
      c.rep = points[i];
    }
    classes.push_back(c);
  }
  return classes;
}

}  // namespace embeig
