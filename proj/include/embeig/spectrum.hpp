#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "embeig/errors.hpp"
#include "embeig/model.hpp"
#include "embeig/potential.hpp"
#include "embeig/verify.hpp"

namespace embeig {

// Symmetric tridiagonal truncation of the half-line operator: off-diagonals
// are 1 and the diagonal carries V on m consecutive sites. The boundary pair
// (u(0), u(1)) = (cos t, sin t) is eliminated into the first row: t = pi/2 is
// plain Dirichlet, any other t in (0, pi) folds u(0) = cot(t) u(1) into the
// (1,1) entry, and t = 0 forces u(1) = 0, so the matrix starts at site 2 with
// Dirichlet there.
struct TruncatedMatrix {
  std::vector<double> diag;
  std::int64_t first_site = 1;
};

inline TruncatedMatrix build_truncated_matrix(const Potential& pot,
                                              const BoundaryAngle& theta,
                                              std::int64_t m) {
  if (m < 2) {
    throw Error(Errc::invalid_parameter, "truncation size must be >= 2");
  }
  TruncatedMatrix mat;
  mat.first_site = theta.theta == 0.0 ? 2 : 1;
  if (mat.first_site + m > pot.horizon) {
    throw Error(Errc::out_of_horizon,
                "truncation size " + std::to_string(m) +
                    " exceeds the potential horizon");
  }
  mat.diag.reserve(static_cast<std::size_t>(m));
  scan_potential(pot, mat.first_site, mat.first_site + m,
                 [&](std::int64_t, double v) { mat.diag.push_back(v); });
  if (mat.first_site == 1 && theta.theta != std::numbers::pi / 2.0) {
    mat.diag[0] += std::cos(theta.theta) / std::sin(theta.theta);
  }
  return mat;
}

// Number of eigenvalues strictly below x, by the tridiagonal Sturm sign-change
// recurrence q_i = (d_i - x) - 1/q_{i-1} (unit off-diagonals). Exact integer
// counts make bisection brackets rigorous.
inline std::int64_t eigenvalue_count_below(std::span<const double> d,
                                           double x) {
  std::int64_t count = 0;
  double q = 1.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double t = d[i] - x;
    if (i > 0) t -= 1.0 / q;
    if (t == 0.0) t = -std::numeric_limits<double>::min();
    if (t < 0.0) ++count;
    q = t;
  }
  return count;
}

struct SpectrumBounds {
  double lo = 0.0;
  double hi = 0.0;
};

// Gershgorin interval padded so the counts at the ends are exactly 0 and m.
inline SpectrumBounds spectrum_bounds(std::span<const double> d) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double di : d) {
    lo = std::min(lo, di - 2.0);
    hi = std::max(hi, di + 2.0);
  }
  return {lo - 0.5, hi + 0.5};
}

namespace detail {

// Bisection for the j-th smallest eigenvalue (1-based) given a bracket with
// count(lo) < j <= count(hi). tol == 0 runs to floating-point resolution.
inline double bisect_eigenvalue(std::span<const double> d, std::int64_t j,
                                double lo, double hi, double tol) {
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (eigenvalue_count_below(d, mid) >= j) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline double kth_eigenvalue(std::span<const double> d, std::int64_t j,
                             double tol = 0.0) {
  if (j < 1 || j > static_cast<std::int64_t>(d.size())) {
    throw Error(Errc::invalid_parameter,
                "eigenvalue index " + std::to_string(j) + " out of range");
  }
  auto b = spectrum_bounds(d);
  return detail::bisect_eigenvalue(d, j, b.lo, b.hi, tol);
}

inline std::vector<double> all_eigenvalues(std::span<const double> d,
                                           double tol = 1e-12) {
  auto m = static_cast<std::int64_t>(d.size());
  auto b = spectrum_bounds(d);
  std::vector<double> out;
  out.reserve(d.size());
  double lo = b.lo;
  for (std::int64_t j = 1; j <= m; ++j) {
    double lam = detail::bisect_eigenvalue(d, j, lo, b.hi, tol);
    out.push_back(lam);
    // lambda_{j+1} >= lambda_j >= lam - tol, so this bracket stays valid
    lo = lam - 2.0 * tol;
  }
  return out;
}

// Nearest eigenvalue to e: the count at e brackets the two candidates.
inline double eigenvalue_near(std::span<const double> d, double e,
                              double tol = 0.0) {
  auto m = static_cast<std::int64_t>(d.size());
  auto b = spectrum_bounds(d);
  std::int64_t below = eigenvalue_count_below(d, e);
  double best = 0.0;
  double best_dist = std::numeric_limits<double>::infinity();
  if (below >= 1) {
    double lam = detail::bisect_eigenvalue(d, below, b.lo, std::max(e, b.lo), tol);
    best = lam;
    best_dist = std::abs(lam - e);
  }
  if (below + 1 <= m) {
    double lam =
        detail::bisect_eigenvalue(d, below + 1, std::min(e, b.hi), b.hi, tol);
    if (std::abs(lam - e) < best_dist) {
      best = lam;
      best_dist = std::abs(lam - e);
    }
  }
  return best;
}

// Solves (T - lambda I) x = rhs for tridiagonal T with unit off-diagonals and
// diagonal d, by Gaussian elimination with partial pivoting. Pivoting fills in
// one extra superdiagonal; near-zero pivots are nudged so the solve survives a
// shift sitting on an eigenvalue (inverse iteration wants exactly that).
inline std::vector<double> solve_shifted(std::span<const double> d,
                                         double lambda,
                                         std::vector<double> rhs) {
  std::size_t m = d.size();
  std::vector<double> alpha(m), beta(m, 0.0), gamma(m, 0.0);
  double scale = std::abs(lambda) + 2.0;
  for (std::size_t i = 0; i < m; ++i) {
    alpha[i] = d[i] - lambda;
    if (i + 1 < m) beta[i] = 1.0;
    scale = std::max(scale, std::abs(d[i]) + std::abs(lambda) + 2.0);
  }
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (std::abs(alpha[i]) >= 1.0) {
      // the subdiagonal entry of row i+1 is exactly 1
      double l = 1.0 / alpha[i];
      alpha[i + 1] -= l * beta[i];
      beta[i + 1] -= l * gamma[i];
      rhs[i + 1] -= l * rhs[i];
    } else {
      double pa = alpha[i], pb = beta[i], pg = gamma[i];
      double a1 = alpha[i + 1], b1 = beta[i + 1];
      alpha[i] = 1.0;
      beta[i] = a1;
      gamma[i] = b1;
      alpha[i + 1] = pb - pa * a1;
      beta[i + 1] = pg - pa * b1;
      std::swap(rhs[i], rhs[i + 1]);
      rhs[i + 1] -= pa * rhs[i];
    }
  }
  std::vector<double> x(m);
  // A shift sitting exactly on an eigenvalue leaves a pivot of order zero;
  // flooring it at epsilon times the matrix scale keeps the solve finite
  // (dividing by anything smaller overflows and poisons the normalization).
  double piv_floor = scale * std::numeric_limits<double>::epsilon();
  for (std::size_t ii = m; ii-- > 0;) {
    double s = rhs[ii];
    if (ii + 1 < m) s -= beta[ii] * x[ii + 1];
    if (ii + 2 < m) s -= gamma[ii] * x[ii + 2];
    double piv = alpha[ii];
    if (std::abs(piv) < piv_floor) piv = piv < 0.0 ? -piv_floor : piv_floor;
    x[ii] = s / piv;
  }
  return x;
}

// Inverse iteration at a converged shift. The start vector comes from a fixed
// linear congruential sequence, so reruns give the identical vector.
inline std::vector<double> inverse_iteration(std::span<const double> d,
                                             double lambda,
                                             int iterations = 4) {
  std::vector<double> x(d.size());
  std::uint64_t s = 0x2545F4914F6CDD1Dull;
  for (auto& xi : x) {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    xi = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
  }
  for (int it = 0; it < iterations; ++it) {
    x = solve_shifted(d, lambda, std::move(x));
    double norm = 0.0;
    for (double xi : x) norm += xi * xi;
    norm = std::sqrt(norm);
    for (auto& xi : x) xi /= norm;
  }
  return x;
}

struct SpectralTargetReport {
  double target = 0.0;
  double nearest_eigenvalue = 0.0;
  double distance = 0.0;
  // |<u, v>| / (|u| |v|) between the replayed solution u at the target energy
  // and the inverse-iteration eigenvector v of the truncation
  double overlap = 0.0;
  // |(H_m - target) u| / |u| over all m rows; the interior part is rounding
  // noise and the cut row contributes |u(top+1)|
  double residual = 0.0;
  double interior_residual = 0.0;
  double boundary_amplitude = 0.0;  // |u(top+1)| / |u|
};

struct SpectralReport {
  std::int64_t truncation = 0;
  std::int64_t first_site = 1;
  std::vector<SpectralTargetReport> targets;
};

// Truncation oracle: for each requested energy, the nearest eigenvalue of the
// m x m truncated matrix, the eigenvector overlap with the solution replayed
// from the potential at that energy, and the residual split into interior
// (rounding) and cut-row (truncation defect) parts. All targets share the one
// boundary angle, which enters both the matrix fold and the replay.
inline SpectralReport truncated_spectrum(const Potential& pot,
                                         const BoundaryAngle& theta,
                                         std::int64_t m,
                                         std::span<const double> targets,
                                         double bisect_tol = 0.0) {
  if (m < 100) {
    throw Error(Errc::invalid_parameter, "truncation size must be >= 100");
  }
  TruncatedMatrix mat = build_truncated_matrix(pot, theta, m);
  std::int64_t top = mat.first_site + m - 1;
  if (top + 1 >= pot.horizon) {
    throw Error(Errc::out_of_horizon,
                "need one site past the cut inside the horizon");
  }
  SpectralReport rep;
  rep.truncation = m;
  rep.first_site = mat.first_site;
  for (double e : targets) {
    EnergyPoint ep = make_energy_point(e, pot.edge_margin);
    std::vector<double> u = reconstruct_solution(pot, ep, theta, top + 1);
    auto at = [&](std::int64_t n) { return u[static_cast<std::size_t>(n)]; };
    double unorm2 = 0.0;
    for (std::int64_t n = mat.first_site; n <= top; ++n) unorm2 += at(n) * at(n);
    double unorm = std::sqrt(unorm2);

    SpectralTargetReport t;
    t.target = e;
    t.nearest_eigenvalue = eigenvalue_near(mat.diag, e, bisect_tol);
    t.distance = std::abs(t.nearest_eigenvalue - e);

    std::vector<double> v = inverse_iteration(mat.diag, t.nearest_eigenvalue);
    double dot = 0.0, vnorm2 = 0.0;
    for (std::int64_t i = 0; i < m; ++i) {
      dot += at(mat.first_site + i) * v[static_cast<std::size_t>(i)];
      vnorm2 += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    }
    t.overlap = std::abs(dot) / (unorm * std::sqrt(vnorm2));

    double interior2 = 0.0;
    {
      double r0 = mat.diag[0] * at(mat.first_site) + at(mat.first_site + 1) -
                  e * at(mat.first_site);
      interior2 += r0 * r0;
    }
    for (std::int64_t i = 1; i + 1 < m; ++i) {
      std::int64_t n = mat.first_site + i;
      double r = at(n - 1) + mat.diag[static_cast<std::size_t>(i)] * at(n) +
                 at(n + 1) - e * at(n);
      interior2 += r * r;
    }
    double rlast = at(top - 1) +
                   mat.diag[static_cast<std::size_t>(m - 1)] * at(top) -
                   e * at(top);
    t.residual = std::sqrt(interior2 + rlast * rlast) / unorm;
    t.interior_residual = std::sqrt(interior2) / unorm;
    t.boundary_amplitude = std::abs(at(top + 1)) / unorm;
    rep.targets.push_back(t);
  }
  return rep;
}

}  // namespace embeig
