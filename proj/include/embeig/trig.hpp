#pragma once

#include <cmath>

namespace embeig {

inline constexpr double kPi = 3.14159265358979323846;

// sin(pi*x) and cos(pi*x) with the range reduction done in units of pi.
//
// The phase variables in this library grow without bound (they accumulate a
// quasimomentum per lattice site), so the usual std::sin(kPi * x) loses the
// fractional part of x long before x reaches 1e7. Subtracting the nearest
// multiple of 2 is exact in binary floating point for |x| < 2^52, which keeps
// full precision for every argument this library produces. A side effect
// worth relying on: sinpi(n) == 0 exactly for integer n.

inline double sinpi(double x) {
  // Fold the sign first: negation is exact, and the reduction below is exact
  // only for x >= 0 (for x in (-1, 0) the sum x + 2 would round).
  if (x < 0.0) return -sinpi(-x);
  double r = x - 2.0 * std::floor(0.5 * x);  // r in [0, 2)
  if (r > 1.0) r -= 2.0;                     // r in (-1, 1]
  if (r > 0.5) {
    r = 1.0 - r;
  } else if (r < -0.5) {
    r = -1.0 - r;
  }
  return std::sin(kPi * r);
}

inline double cospi(double x) {
  if (x < 0.0) x = -x;
  double r = x - 2.0 * std::floor(0.5 * x);  // r in [0, 2)
  if (r > 1.0) r = 2.0 - r;                  // r in [0, 1]
  if (r <= 0.25) return std::cos(kPi * r);
  if (r < 0.75) return std::sin(kPi * (0.5 - r));
  return -std::cos(kPi * (1.0 - r));
}

// sin(2*pi*x) / cos(2*pi*x). Doubling the argument is exact, so these inherit
// the exact reduction above.
inline double sin2pi(double x) { return sinpi(2.0 * x); }
inline double cos2pi(double x) { return cospi(2.0 * x); }

// Reduce x into [0, 2) (the natural period of the phase variable, since the
// direction vector has period 2 in units of pi).
inline double wrap_two(double x) {
  double r = x - 2.0 * std::floor(0.5 * x);
  return (r >= 2.0) ? 0.0 : r;
}

}  // namespace embeig
