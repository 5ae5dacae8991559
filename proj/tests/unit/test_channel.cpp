#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mcfse/channel.hpp"
#include "mcfse/errors.hpp"

using namespace mcfse;

namespace {

// Stationary point of the log-response: v^2 t^2 + 6 D t - r^2 = 0.
double closed_form_peak(const ChannelParams& p) {
  const double v2 = p.flow_parallel * p.flow_parallel + p.flow_perpendicular * p.flow_perpendicular;
  const double D = p.diffusion, r = p.distance;
  if (v2 == 0.0) return r * r / (6.0 * D);
  return (-6.0 * D + std::sqrt(36.0 * D * D + 4.0 * v2 * r * r)) / (2.0 * v2);
}

struct Scan {
  double t = 0.0;
  double value = 0.0;
  double step = 0.0;
  int local_maxima = 0;
};

Scan uniform_scan(const ChannelParams& p, double upper, int points) {
  Scan s;
  s.step = upper / points;
  double prev2 = 0.0, prev = 0.0;
  for (int i = 1; i <= points; ++i) {
    const double t = i * s.step;
    const double v = cir_value(p, t);
    if (v > s.value) {
      s.value = v;
      s.t = t;
    }
    if (i >= 3 && prev > prev2 && prev >= v) ++s.local_maxima;
    prev2 = prev;
    prev = v;
  }
  return s;
}

}  // namespace

TEST_CASE("impulse response is zero without release and positive otherwise") {
  ChannelParams p;
  p.molecules = 0.0;
  CHECK(cir_value(p, 1e-4) == 0.0);
  p.molecules = 1e4;
  CHECK(cir_value(p, 1e-4) > 0.0);
  CHECK_THROWS_AS(cir_value(p, 0.0), InvalidArgument);
  CHECK_THROWS_AS(cir_value(p, -1.0), InvalidArgument);
}

TEST_CASE("impulse response is linear in the release count") {
  ChannelParams p;
  const double base = cir_value(p, 5e-5);
  p.molecules *= 3.0;
  CHECK(cir_value(p, 5e-5) == doctest::Approx(3.0 * base).epsilon(1e-14));
}

TEST_CASE("peak time matches the dense uniform scan and the stationary-point root") {
  ChannelParams p;
  const double t_peak = find_t_peak(p);
  CHECK(t_peak == doctest::Approx(closed_form_peak(p)).epsilon(1e-8));
  CHECK(t_peak == doctest::Approx(6.6264e-5).epsilon(1e-4));

  const Scan scan = uniform_scan(p, 20.0 * closed_form_peak(p), 1'000'000);
  CHECK(scan.local_maxima == 1);
  CHECK(std::abs(t_peak - scan.t) <= scan.step);
  CHECK(cir_value(p, t_peak) == doctest::Approx(scan.value).epsilon(1e-9));
  CHECK(cir_value(p, t_peak) >= scan.value * (1.0 - 1e-14));
}

TEST_CASE("peak time without flow") {
  ChannelParams p;
  p.flow_parallel = p.flow_perpendicular = 0.0;
  const double t_peak = find_t_peak(p);
  CHECK(t_peak == doctest::Approx(p.distance * p.distance / (6.0 * p.diffusion)).epsilon(1e-8));
  const Scan scan = uniform_scan(p, 20.0 * t_peak, 1'000'000);
  CHECK(std::abs(t_peak - scan.t) <= scan.step);
}

TEST_CASE("peak time does not depend on the release count") {
  ChannelParams p;
  const double a = find_t_peak(p);
  p.molecules *= 10.0;
  CHECK(find_t_peak(p) == a);
}

TEST_CASE("peak search fails cleanly when no maximum is bracketed") {
  ChannelParams p;
  p.diffusion = 1e-30;  // peak far beyond 1e3 s
  p.flow_parallel = p.flow_perpendicular = 0.0;
  CHECK_THROWS_AS(find_t_peak(p), SearchFailure);
}

TEST_CASE("response has decayed to about 0.4 percent after five symbol times") {
  ChannelParams p;
  const double t_peak = find_t_peak(p);
  const double ratio = cir_value(p, 5.0 * p.beta * t_peak) / cir_value(p, t_peak);
  CHECK(ratio == doctest::Approx(0.004).epsilon(0.15));
}

TEST_CASE("sampled table layout") {
  ChannelParams p;
  const CirTable cir = build_cir_table(p);
  REQUIRE(cir.memory() == 5);
  REQUIRE(cir.samples() == 3);
  CHECK(cir.symbol_time == doctest::Approx(1.5 * cir.t_peak).epsilon(1e-15));
  CHECK(cir.sample_interval == doctest::Approx(cir.symbol_time / 3).epsilon(1e-15));
  // Second sample of the first row sits at the peak.
  CHECK(cir.elapsed(0, 1) == doctest::Approx(cir.t_peak).epsilon(1e-14));
  CHECK(cir.peak_sample() == 1);
  Eigen::Index r = 0, c = 0;
  cir.h.maxCoeff(&r, &c);
  CHECK(r == 0);
  CHECK(c == 1);
  for (int l = 0; l < 5; ++l)
    for (int m = 0; m < 3; ++m) {
      CHECK(cir.h(l, m) > 0.0);
      CHECK(cir.h(l, m) == cir_value(p, l * cir.symbol_time + (m + 1) * cir.sample_interval));
    }
}

TEST_CASE("parameter validation") {
  ChannelParams p;
  CHECK_NOTHROW(p.validate());
  auto bad = [](auto mutate) {
    ChannelParams q;
    mutate(q);
    CHECK_THROWS_AS(q.validate(), InvalidArgument);
  };
  bad([](ChannelParams& q) { q.diffusion = 0.0; });
  bad([](ChannelParams& q) { q.rx_radius = 1e-6; });
  bad([](ChannelParams& q) { q.molecules = -1.0; });
  bad([](ChannelParams& q) { q.eta = -0.1; });
  bad([](ChannelParams& q) { q.samples_per_symbol = 0; });
  bad([](ChannelParams& q) { q.memory = 0; });
  bad([](ChannelParams& q) { q.beta = 0.0; });
  bad([](ChannelParams& q) { q.frame_length = 0; });
  bad([](ChannelParams& q) { q.flow_parallel = NAN; });
}

TEST_CASE("mean rate") {
  const CirTable cir = build_cir_table(ChannelParams{});
  Bits zeros(20, 0);
  for (int k = 0; k < 20; ++k)
    for (int m = 0; m < 3; ++m) CHECK(mean_rate(cir, zeros, 0.0, k, m) == 0.0);

  Bits single(20, 0);
  single[7] = 1;
  for (int m = 0; m < 3; ++m) {
    CHECK(mean_rate(cir, single, 2.5, 7, m) == cir.h(0, m) + 2.5);
    CHECK(mean_rate(cir, single, 2.5, 9, m) == cir.h(2, m) + 2.5);
    CHECK(mean_rate(cir, single, 2.5, 6, m) == 2.5);
    CHECK(mean_rate(cir, single, 2.5, 12, m) == 2.5);
  }

  Bits ones(20, 1);
  for (int m = 0; m < 3; ++m) {
    CHECK(mean_rate(cir, ones, 1.0, 10, m) == doctest::Approx(cir.h.col(m).sum() + 1.0).epsilon(1e-15));
    // Silence before the frame.
    CHECK(mean_rate(cir, ones, 1.0, 1, m) == doctest::Approx(cir.h(0, m) + cir.h(1, m) + 1.0).epsilon(1e-15));
    // Bits after the frame are zero.
    CHECK(mean_rate(cir, ones, 1.0, 21, m) == doctest::Approx(cir.h.col(m).tail(3).sum() + 1.0).epsilon(1e-15));
  }
  CHECK_THROWS_AS(mean_rate(cir, ones, 1.0, 0, 3), InvalidArgument);
}

TEST_CASE("bits are fair and reproducible") {
  Rng a = derive_stream(5, {1});
  Rng b = derive_stream(5, {1});
  const Bits x = generate_bits(1'000'000, a);
  CHECK(x == generate_bits(1'000'000, b));
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  CHECK(mean >= 0.498);
  CHECK(mean <= 0.502);
  const Bits one = generate_bits(1, a);
  REQUIRE(one.size() == 1);
  CHECK(one[0] <= 1);
}

TEST_CASE("observation matrix geometry") {
  ObservationMatrix obs(10, 3, 2, 4);
  CHECK(obs.first_row() == -2);
  CHECK(obs.end_row() == 14);
  CHECK(obs.has_row(-2));
  CHECK_FALSE(obs.has_row(-3));
  CHECK(obs.has_row(13));
  CHECK_FALSE(obs.has_row(14));
  obs.at(-2, 0) = 7;
  obs.at(13, 2) = 9;
  CHECK(obs.row(-2)[0] == 7);
  CHECK(obs.row(13)[2] == 9);
  CHECK_THROWS_AS(obs.at(14, 0), InvalidArgument);
  CHECK_THROWS_AS(obs.at(0, 3), InvalidArgument);
}

TEST_CASE("silent channel without background gives no counts") {
  const CirTable cir = build_cir_table(ChannelParams{});
  Rng rng = derive_stream(1, {});
  const Bits zeros(50, 0);
  const auto obs = simulate_observations(cir, zeros, 0.0, rng, 3, 3);
  for (std::int64_t k = obs.first_row(); k < obs.end_row(); ++k)
    for (int m = 0; m < 3; ++m) CHECK(obs.at(k, m) == 0);
}

TEST_CASE("simulated counts have Poisson mean and variance") {
  ChannelParams p;
  p.molecules = 3000.0;
  const CirTable cir = build_cir_table(p);
  Bits bits(6, 0);
  bits[2] = bits[4] = 1;
  const double eta = 1.0;
  constexpr int kRuns = 1'000'000;
  Rng rng = derive_stream(11, {});
  // Row 5 carries ISI from symbols 2 and 4; the leading row is silent.
  Eigen::MatrixXd s1 = Eigen::MatrixXd::Zero(2, 3), s2 = Eigen::MatrixXd::Zero(2, 3);
  for (int run = 0; run < kRuns; ++run) {
    const auto obs = simulate_observations(cir, bits, eta, rng, 1, 0);
    for (int m = 0; m < 3; ++m) {
      for (int r = 0; r < 2; ++r) {
        const double g = obs.at(r == 0 ? -1 : 5, m);
        s1(r, m) += g;
        s2(r, m) += g * g;
      }
    }
  }
  for (int m = 0; m < 3; ++m) {
    for (int r = 0; r < 2; ++r) {
      const double rate = r == 0 ? eta : mean_rate(cir, bits, eta, 5, m);
      REQUIRE(rate >= 1.0);
      const double mean = s1(r, m) / kRuns;
      const double var = s2(r, m) / kRuns - mean * mean;
      CHECK(mean == doctest::Approx(rate).epsilon(0.01));
      CHECK(var == doctest::Approx(rate).epsilon(0.02));
    }
  }
}

TEST_CASE("simulation is deterministic for a seed") {
  const CirTable cir = build_cir_table(ChannelParams{});
  Rng a = derive_stream(3, {4});
  Rng b = derive_stream(3, {4});
  const Bits bits = generate_bits(300, a);
  const Bits bits_b = generate_bits(300, b);
  const auto x = simulate_observations(cir, bits, 1.0, a, 1, 2);
  const auto y = simulate_observations(cir, bits_b, 1.0, b, 1, 2);
  for (std::int64_t k = x.first_row(); k < x.end_row(); ++k)
    for (int m = 0; m < 3; ++m) CHECK(x.at(k, m) == y.at(k, m));
}
