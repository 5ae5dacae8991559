#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mcfse {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to mix stream keys; not a generator on its own.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic, counter-based stream derivation. The same key sequence
/// always yields the same generator state, independent of which thread asks.
Rng derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> keys);

/// Bit pattern of a double, for use as a stream key.
std::uint64_t key_of(double value) noexcept;

/// Exact Poisson variate. Zero rate returns 0 without consuming randomness.
/// Rates below 12 use the multiplication (inversion-equivalent) method and
/// larger rates a rejection method, both via std::poisson_distribution.
class PoissonSampler {
 public:
  using param_type = std::poisson_distribution<std::int64_t>::param_type;

  /// Precomputed parameter for a fixed positive rate.
  static param_type param(double rate);

  std::int64_t operator()(Rng& rng, double rate);
  std::int64_t operator()(Rng& rng, const param_type& p);

 private:
  std::poisson_distribution<std::int64_t> dist_;
};

}  // namespace mcfse
