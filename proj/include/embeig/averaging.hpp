#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "embeig/errors.hpp"
#include "embeig/model.hpp"
#include "embeig/potential.hpp"
#include "embeig/trig.hpp"

namespace embeig {

// The construction relies on trigonometric sums of the form
//
//   (1/N) sum_{l=0}^{N-1} sin(2 pi theta + sign * nu * pi * k * l)
//
// being uniformly small in theta: these are the non-resonant remainders of
// the block averages. Each (nu, sign) pair is one frequency the block has to
// wash out: nu = 2 covers the first harmonic of one phase, nu = 4 covers the
// second harmonic and the difference of the two phases of a resonant pair
// (their sum is the resonant combination and is deliberately NOT washed out).
struct AverageProbe {
  int nu = 2;
  int sign = +1;
};

inline std::vector<AverageProbe> required_probes(PieceKind kind) {
  switch (kind) {
    case PieceKind::pair:
      return {{4, +1}, {2, +1}, {4, -1}, {2, -1}};
    case PieceKind::single:
      return {{4, +1}, {2, +1}};
    case PieceKind::zero:
      return {};
  }
  return {};
}

inline constexpr int kPhaseGridSize = 720;

// A probe is degenerate when its frequency is a multiple of the full period:
// then the sum cannot average out for any N (this happens for nu = 4 at the
// band center k = 1/2).
inline bool probe_degenerate(const AverageProbe& probe, double k) {
  double d = std::fmod(static_cast<double>(probe.nu) * k, 2.0);
  if (d < 0.0) d += 2.0;
  return std::min(d, 2.0 - d) < 1e-9;
}

// Max over the phase grid of |(1/N) sum_l sin(2 pi theta_g + x l)| for one
// probe, x = sign * nu * pi * k. Written via the complex partial sum S:
// the inner sum equals Im(e^{i 2 pi theta_g} S).
inline double probe_grid_bound(const AverageProbe& probe, double k,
                               std::int64_t n) {
  double x = probe.sign * probe.nu * kPi * k;
  std::complex<double> s{0.0, 0.0};
  for (std::int64_t l = 0; l < n; ++l) {
    double xl = x * static_cast<double>(l);
    s += std::complex<double>(std::cos(xl), std::sin(xl));
  }
  double sup = 0.0;
  for (int g = 0; g < kPhaseGridSize; ++g) {
    double tg = 2.0 * kPi * g / kPhaseGridSize;
    double im = std::cos(tg) * s.imag() + std::sin(tg) * s.real();
    sup = std::max(sup, std::abs(im) / static_cast<double>(n));
  }
  return sup;
}

inline double grid_average_bound(const EnergyPoint& ep, std::int64_t n,
                                 std::span<const AverageProbe> probes) {
  double sup = 0.0;
  for (const auto& pr : probes) sup = std::max(sup, probe_grid_bound(pr, ep.k, n));
  return sup;
}

struct BlockChoice {
  std::int64_t length = 0;
  double certified_bound = 0.0;  // realized grid sup at the chosen length
  double epsilon = 0.0;          // the tolerance that was requested
};

inline double default_block_epsilon(const EnergyPoint& ep) {
  return ep.s / 8.0e4;
}

// Smallest block length N <= n_max whose grid bound is <= epsilon for every
// required probe. Runs all probes' partial sums incrementally, so the scan is
// O(n_max * (probes + grid)).
inline BlockChoice choose_block_length(const EnergyPoint& ep, PieceKind kind,
                                       double epsilon = 0.0,
                                       std::int64_t n_max = 10000) {
  auto probes = required_probes(kind);
  if (probes.empty()) {
    throw Error(Errc::invalid_parameter, "no probes for this piece kind");
  }
  if (epsilon <= 0.0) epsilon = default_block_epsilon(ep);
  for (const auto& pr : probes) {
    if (probe_degenerate(pr, ep.k)) {
      throw Error(Errc::resonant_block_degenerate,
                  "probe frequency nu=" + std::to_string(pr.nu) +
                      " is periodic at k=" + std::to_string(ep.k));
    }
  }
  std::vector<std::complex<double>> sums(probes.size(), {0.0, 0.0});
  std::vector<double> grid_cos(kPhaseGridSize), grid_sin(kPhaseGridSize);
  for (int g = 0; g < kPhaseGridSize; ++g) {
    double tg = 2.0 * kPi * g / kPhaseGridSize;
    grid_cos[g] = std::cos(tg);
    grid_sin[g] = std::sin(tg);
  }
  for (std::int64_t n = 1; n <= n_max; ++n) {
    std::int64_t l = n - 1;
    for (std::size_t p = 0; p < probes.size(); ++p) {
      double x = probes[p].sign * probes[p].nu * kPi * ep.k;
      double xl = x * static_cast<double>(l);
      sums[p] += std::complex<double>(std::cos(xl), std::sin(xl));
    }
    double sup = 0.0;
    for (std::size_t p = 0; p < probes.size() && sup <= epsilon; ++p) {
      for (int g = 0; g < kPhaseGridSize; ++g) {
        double im = grid_cos[g] * sums[p].imag() + grid_sin[g] * sums[p].real();
        sup = std::max(sup, std::abs(im) / static_cast<double>(n));
      }
    }
    if (sup <= epsilon) return {n, sup, epsilon};
  }
  throw Error(Errc::no_block_found,
              "no block length up to " + std::to_string(n_max) +
                  " certifies " + std::to_string(epsilon));
}

}  // namespace embeig
