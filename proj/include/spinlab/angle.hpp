#pragma once

#include <cmath>
#include <numbers>

namespace spinlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Canonical representative in [-pi, pi).
inline double wrap_angle(double a) {
  if (a >= -kPi && a < kPi) return a;
  if (a >= kPi && a < 3.0 * kPi) {
    double r = a - kTwoPi;
    return r < kPi ? (r < -kPi ? -kPi : r) : r - kTwoPi;
  }
  if (a < -kPi && a >= -3.0 * kPi) {
    double r = a + kTwoPi;
    return r >= kPi ? r - kTwoPi : (r < -kPi ? r + kTwoPi : r);
  }
  double r = std::fmod(a + kPi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  r -= kPi;
  return r >= kPi ? r - kTwoPi : r;
}

// Geodesic distance on the unit circle, in [0, pi].
inline double circle_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

}  // namespace spinlab
