#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace tinymyo {

// Exit codes shared by the CLI; library code throws the matching exception.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 2,
  kExitValidation = 3,
  kExitShape = 4,
  kExitNumeric = 5,
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Round half away from zero. Single rounding rule for every float->int
// conversion in the quantized path.
inline std::int64_t round_half_away(double x) {
  return static_cast<std::int64_t>(x >= 0.0 ? std::floor(x + 0.5)
                                            : std::ceil(x - 0.5));
}

// (v * 2^-shift) rounded half away from zero. Negative shift multiplies.
inline std::int64_t round_shift(std::int64_t v, int shift) {
  if (shift <= 0) return v << (-shift);
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  return v >= 0 ? (v + half) >> shift : -((-v + half) >> shift);
}

// Integer division rounded half away from zero; den > 0.
inline std::int64_t div_round(std::int64_t num, std::int64_t den) {
  const std::int64_t half = den / 2;
  return num >= 0 ? (num + half) / den : -((-num + half) / den);
}

inline std::int8_t saturate_i8(std::int64_t v) {
  if (v < -128) return -128;
  if (v > 127) return 127;
  return static_cast<std::int8_t>(v);
}

// Uniform draw in [0, bound) from raw mt19937_64 output via rejection.
// std::uniform_int_distribution is implementation-defined, so mask
// selection must not go through it to stay reproducible across platforms.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

}  // namespace tinymyo
