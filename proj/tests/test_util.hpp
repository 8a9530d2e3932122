#pragma once

#include <cmath>
#include <random>
#include <vector>

namespace testutil {

// Deterministic uniforms/gaussians from raw mt19937_64 draws; the std
// distributions are implementation-defined and would make expected values
// platform-dependent.
inline double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline double gauss(std::mt19937_64& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline std::vector<float> gauss_vec(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::vector<float> v(n);
  for (float& x : v) x = static_cast<float>(gauss(rng) * sd);
  return v;
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
  return m;
}

}  // namespace testutil
