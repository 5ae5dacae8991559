#include "mcfse/random.hpp"

#include <bit>
#include <cmath>

#include "mcfse/errors.hpp"

namespace mcfse {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng derive_stream(std::uint64_t master_seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = mix64(master_seed);
  for (std::uint64_t k : keys) state = mix64(state ^ mix64(k));
  std::seed_seq seq{static_cast<std::uint32_t>(state), static_cast<std::uint32_t>(state >> 32),
                    static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32)};
  return Rng(seq);
}

std::uint64_t key_of(double value) noexcept {
  // +0 and -0 map to the same stream.
  if (value == 0.0) value = 0.0;
  return std::bit_cast<std::uint64_t>(value);
}

PoissonSampler::param_type PoissonSampler::param(double rate) {
  if (!std::isfinite(rate) || rate <= 0.0) throw NumericalError("Poisson parameter must be finite and > 0");
  return param_type(rate);
}

std::int64_t PoissonSampler::operator()(Rng& rng, double rate) {
  if (!std::isfinite(rate) || rate < 0.0) throw NumericalError("Poisson rate must be finite and >= 0");
  if (rate == 0.0) return 0;
  return dist_(rng, param_type(rate));
}

std::int64_t PoissonSampler::operator()(Rng& rng, const param_type& p) { return dist_(rng, p); }

}  // namespace mcfse
