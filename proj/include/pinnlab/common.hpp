#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace pinnlab {

/// Thrown when a caller breaks a documented precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Thrown when an energy or gradient evaluation produces NaN/Inf. Carries a
/// short description of where the value went bad; training loops record it
/// as a NonFinite termination instead of crashing.
class NonFiniteEnergy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

/// A point is a short read-only coordinate span (spatial or space-time).
using Point = std::span<const double>;

inline constexpr int kMaxDim = 4;

/// splitmix64 mix step; used to derive independent seed streams.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seeded uniform generator. Bits are mapped to doubles explicitly so the
/// stream does not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n).
  uint64_t index(uint64_t n) { return gen_() % n; }

 private:
  std::mt19937_64 gen_;
};

/// %.17g rendering used by every CSV and checkpoint writer (round-trips
/// doubles exactly).
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace pinnlab
