#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mcfse/detect.hpp"
#include "mcfse/errors.hpp"

using namespace mcfse;

namespace {

CirTable reference_cir(double molecules) {
  ChannelParams p;
  p.molecules = molecules;
  return build_cir_table(p);
}

// ln p(g; mu) accumulated term by term from p(0) = e^{-mu}.
double iterative_log_pmf(std::int64_t g, double mu) {
  double acc = -mu;
  for (std::int64_t i = 1; i <= g; ++i) acc += std::log(mu / static_cast<double>(i));
  return acc;
}

}  // namespace

TEST_CASE("threshold decision") {
  CHECK(threshold_detect(0.5) == 1);
  CHECK(threshold_detect(0.49) == 0);
  CHECK(threshold_detect(1.7) == 1);
  CHECK(threshold_detect(-3.0) == 0);
  CHECK(threshold_detect(2.0, 2.5) == 0);
}

TEST_CASE("log factorial") {
  CHECK(log_factorial(0) == 0.0);
  CHECK(log_factorial(1) == 0.0);
  CHECK(log_factorial(5) == doctest::Approx(std::log(120.0)).epsilon(1e-15));
  // Across the switch from table to series.
  for (std::int64_t g : {65535LL, 65536LL, 65537LL, 1000000LL, 123456789LL})
    CHECK(log_factorial(g) == doctest::Approx(std::lgamma(static_cast<double>(g) + 1.0)).epsilon(1e-14));
  CHECK_THROWS_AS(log_factorial(-1), InvalidArgument);
}

TEST_CASE("Poisson log pmf") {
  CHECK(poisson_log_pmf(0, 3.0) == -3.0);
  CHECK(poisson_log_pmf(2, 2.0) == doctest::Approx(std::numbers::ln2 - 2.0).epsilon(1e-15));
  CHECK(poisson_log_pmf(0, 0.0) == 0.0);
  CHECK(std::isinf(poisson_log_pmf(1, 0.0)));
  CHECK_THROWS_AS(poisson_log_pmf(-1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(poisson_log_pmf(1, -1.0), InvalidArgument);

  Rng rng = derive_stream(7, {});
  std::uniform_real_distribution<double> log_mu(std::log(0.01), std::log(5000.0));
  for (int trial = 0; trial < 500; ++trial) {
    const double mu = std::exp(log_mu(rng));
    std::uniform_int_distribution<std::int64_t> count(0, static_cast<std::int64_t>(2.0 * mu + 20.0));
    const std::int64_t g = count(rng);
    const double exact = iterative_log_pmf(g, mu);
    const double got = poisson_log_pmf(g, mu);
    // Relative agreement of the pmf itself.
    CHECK(std::abs(std::expm1(got - exact)) < 1e-10 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("trellis configuration") {
  CHECK(TrellisConfig{5, 2}.states() == 2);
  CHECK(TrellisConfig{5, 5}.states() == 16);
  CHECK(TrellisConfig{5, 1}.states() == 1);
  CHECK_THROWS_AS((TrellisConfig{5, 6}.validate()), InvalidArgument);
  CHECK_THROWS_AS((TrellisConfig{5, 0}.validate()), InvalidArgument);
}

TEST_CASE("single-symbol two-hypothesis test") {
  ChannelParams p;
  p.memory = 1;
  p.molecules = 3000.0;
  const CirTable cir = build_cir_table(p);
  Rng rng = derive_stream(3, {});
  for (int trial = 0; trial < 50; ++trial) {
    const Bits bits = generate_bits(1, rng);
    const auto obs = simulate_observations(cir, bits, 1.0, rng);
    double ll[2] = {0.0, 0.0};
    for (int s = 0; s < 2; ++s)
      for (int m = 0; m < 3; ++m) ll[s] += poisson_log_pmf(obs.at(0, m), s * cir.h(0, m) + 1.0);
    const std::uint8_t expected = ll[1] > ll[0] ? 1 : 0;
    CHECK(mlsd_viterbi(obs, cir, 1.0).bits[0] == expected);
    CHECK(exhaustive_mlsd(obs, cir, 1.0).bits[0] == expected);
    CHECK(dfsd_viterbi(obs, cir, 1.0, 1).bits[0] == expected);
  }
}

TEST_CASE("Viterbi attains the exhaustive optimum") {
  Rng rng = derive_stream(101, {});
  std::uniform_int_distribution<int> length(1, 12);
  const double grid[] = {1e3, 5e3, 1.5e4, 5e4};
  for (int trial = 0; trial < 200; ++trial) {
    const CirTable cir = reference_cir(grid[trial % 4]);
    const Bits bits = generate_bits(length(rng), rng);
    const auto obs = simulate_observations(cir, bits, 1.0, rng, 0, 2);
    const auto exact = exhaustive_mlsd(obs, cir, 1.0);
    const auto v = mlsd_viterbi(obs, cir, 1.0);
    const auto full = dfsd_viterbi(obs, cir, 1.0, 5);
    const double tol = 1e-9 * std::max(1.0, std::abs(exact.log_likelihood));
    CHECK(std::abs(v.log_likelihood - exact.log_likelihood) <= tol);
    CHECK(std::abs(full.log_likelihood - exact.log_likelihood) <= tol);
    // The reported metric is the likelihood of the reported sequence.
    CHECK(std::abs(sequence_log_likelihood(obs, cir, 1.0, v.bits) - v.log_likelihood) <= tol);
    CHECK(std::abs(sequence_log_likelihood(obs, cir, 1.0, full.bits) - full.log_likelihood) <= tol);
    for (int lambda = 1; lambda < 5; ++lambda) {
      const auto reduced = dfsd_viterbi(obs, cir, 1.0, lambda);
      CHECK(reduced.log_likelihood <= exact.log_likelihood + tol);
      CHECK(std::abs(sequence_log_likelihood(obs, cir, 1.0, reduced.bits) - reduced.log_likelihood) <= tol);
    }
  }
}

TEST_CASE("high-SNR frames are recovered") {
  const CirTable cir = reference_cir(1e6);
  Rng rng = derive_stream(55, {});
  int perfect_mlsd = 0, perfect_dfsd = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Bits bits = generate_bits(64, rng);
    const auto obs = simulate_observations(cir, bits, 1.0, rng);
    perfect_mlsd += mlsd_viterbi(obs, cir, 1.0).bits == bits;
    perfect_dfsd += dfsd_viterbi(obs, cir, 1.0, 2).bits == bits;
  }
  CHECK(perfect_mlsd >= 999);
  CHECK(perfect_dfsd >= 999);
}

TEST_CASE("all-zero observations decode to silence") {
  const CirTable cir = reference_cir(1e4);
  ObservationMatrix obs(8, 3, 0, 0);
  const Bits zeros(8, 0);
  CHECK(exhaustive_mlsd(obs, cir, 1.0).bits == zeros);
  CHECK(mlsd_viterbi(obs, cir, 1.0).bits == zeros);
  CHECK(dfsd_viterbi(obs, cir, 1.0, 2).bits == zeros);
}

TEST_CASE("detectors are deterministic") {
  const CirTable cir = reference_cir(1.5e4);
  Rng rng = derive_stream(8, {});
  const Bits bits = generate_bits(500, rng);
  const auto obs = simulate_observations(cir, bits, 1.0, rng);
  const auto a = mlsd_viterbi(obs, cir, 1.0);
  const auto b = mlsd_viterbi(obs, cir, 1.0);
  CHECK(a.bits == b.bits);
  CHECK(a.log_likelihood == b.log_likelihood);
  CHECK(dfsd_viterbi(obs, cir, 1.0, 2).bits == dfsd_viterbi(obs, cir, 1.0, 2).bits);
}

TEST_CASE("detector argument checks") {
  const CirTable cir = reference_cir(1e4);
  ObservationMatrix wide(21, 3, 0, 0);
  CHECK_THROWS_AS(exhaustive_mlsd(wide, cir, 1.0), InvalidArgument);
  ObservationMatrix narrow(4, 2, 0, 0);
  CHECK_THROWS_AS(mlsd_viterbi(narrow, cir, 1.0), InvalidArgument);
  ObservationMatrix ok(4, 3, 0, 0);
  CHECK_THROWS_AS(dfsd_viterbi(ok, cir, 1.0, 6), InvalidArgument);
  CHECK_THROWS_AS(sequence_log_likelihood(ok, cir, 1.0, Bits(3)), InvalidArgument);
}
