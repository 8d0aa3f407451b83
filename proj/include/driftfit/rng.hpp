#pragma once

#include <cmath>
#include <cstdint>
#include <complex>
#include <random>

namespace driftfit {

/// Deterministic pseudo-random stream.  Normal variates are produced by an
/// explicit Box-Muller transform on top of mt19937_64 so that sequences are
/// reproducible bit-for-bit across platforms and standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}

  /// Stream for an indexed sub-task (bootstrap replicate, MC chunk, ...).
  /// Derivation is master XOR index followed by a mixing step, so streams
  /// are decorrelated and independent of scheduling order.
  static Rng substream(std::uint64_t master, std::uint64_t index) {
    return Rng(master ^ (0x9e3779b97f4a7c15ULL + index));
  }

  double uniform() {
    // 53-bit mantissa in (0,1); never returns exactly 0.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::complex<double> normal_complex() {
    const double re = normal();
    const double im = normal();
    return {re, im};
  }

  std::uint64_t bits() { return engine_(); }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace driftfit
