#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace agcnet {

/// Deterministic random stream used everywhere randomness is needed
/// (synthetic data, parameter init, epoch shuffling).
///
/// The stream is fully specified so that an independent implementation can
/// reproduce it bit-for-bit (see docs/FORMATS.md):
///   - engine: std::mt19937_64 seeded directly with the 64-bit seed
///   - uniform():      (next_u64() >> 11) * 2^-53, in [0, 1)
///   - uniform_open(): ((next_u64() >> 11) + 1) * 2^-53, in (0, 1]
///   - gaussian(): Box-Muller on (uniform_open, uniform); the sine branch is
///     cached and returned by the following call
/// std::*_distribution is implementation-defined and deliberately not used.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; draws two uniforms every other call.
  double gaussian();

  /// Uniform in [-bound, bound].
  double symmetric_uniform(double bound) { return (2.0 * uniform() - 1.0) * bound; }

  /// Uniform integer in [0, bound); bound > 0. Uses plain modulo (documented;
  /// the bias is irrelevant for shuffling and keeps the stream trivial to port).
  std::uint64_t below(std::uint64_t bound) { return next_u64() % bound; }

  /// Fisher-Yates, iterating i from n-1 down to 1 with j = below(i + 1).
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace agcnet
