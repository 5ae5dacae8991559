#include <doctest.h>

#include <cmath>
#include <vector>

#include "exact_moments.hpp"
#include "mcfse/equalize.hpp"
#include "mcfse/errors.hpp"

using namespace mcfse;

namespace {

CirTable reference_cir(double molecules = 1e4) {
  ChannelParams p;
  p.molecules = molecules;
  return build_cir_table(p);
}

CirTable custom_cir(const Eigen::MatrixXd& h) {
  CirTable cir;
  cir.h = h;
  cir.t_peak = 1.0;
  cir.symbol_time = 1.5;
  cir.sample_interval = 1.5 / static_cast<double>(h.cols());
  return cir;
}

std::vector<int> offsets_of(const SampleIndexMap& map) {
  std::vector<int> out;
  for (int j = 0; j < map.rows(); ++j) out.push_back(map.symbol_offset(j));
  return out;
}

double max_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("index map conventions") {
  const auto c = SampleIndexMap::centered(1, 3);
  CHECK(c.rows() == 3);
  CHECK(c.size() == 9);
  CHECK(c.symbol_offset(0) == -1);
  CHECK(c.symbol_offset(2) == 1);
  // Element 2 (the third) is the last sample of the first row.
  CHECK(c.row_of(2) == 0);
  CHECK(c.sample_of(2) == 2);
  CHECK(c.row_of(3) == 1);
  CHECK(c.index(1, 0) == 3);
  const auto d = SampleIndexMap::causal(1, 3);
  CHECK(d.rows() == 2);
  CHECK(d.symbol_offset(0) == 0);
  CHECK(d.lookback() == 0);
  CHECK(d.lookahead() == 1);
  CHECK_THROWS_AS(SampleIndexMap::centered(-1, 3), InvalidArgument);
  CHECK_THROWS_AS(SampleIndexMap::causal(0, 0), InvalidArgument);
}

TEST_CASE("scalar channel statistics and taps") {
  const double h1 = 3.7;
  const CirTable cir = custom_cir(Eigen::MatrixXd::Constant(1, 1, h1));
  const auto stats = build_stats(cir, 0.0, SampleIndexMap::centered(0, 1));
  CHECK(stats.gamma(0, 0) == doctest::Approx(h1 / 2 + h1 * h1 / 4).epsilon(1e-15));
  CHECK(stats.xi[0] == doctest::Approx(h1 / 4).epsilon(1e-15));
  CHECK(stats.mean_q[0] == doctest::Approx(h1 / 2).epsilon(1e-15));

  const auto taps = design_linear_fse(cir, 0.0, 0);
  const double b = 1.0 / (2.0 + h1);
  CHECK(taps.b[0] == doctest::Approx(b).epsilon(1e-14));
  CHECK(taps.b_c == doctest::Approx(0.5 - b * h1 / 2).epsilon(1e-14));
  CHECK(taps.mse == doctest::Approx(0.25 - h1 / 4 * b).epsilon(1e-14));
}

TEST_CASE("second-order statistics equal exact enumeration") {
  for (double eta : {0.0, 1.0, 5.0}) {
    for (double a : {2e3, 1e4, 3e4}) {
      const CirTable cir = reference_cir(a);
      for (const auto& map : {SampleIndexMap::centered(1, 3), SampleIndexMap::centered(2, 3),
                              SampleIndexMap::causal(1, 3), SampleIndexMap::causal(3, 3)}) {
        const auto stats = build_stats(cir, eta, map);
        const auto exact = oracle::enumerate(cir, eta, offsets_of(map), 0);
        CHECK(max_rel(stats.gamma, exact.cov) < 1e-12);
        CHECK(max_rel(stats.mean_q, exact.mean) < 1e-12);
        CHECK(max_rel(stats.xi, exact.cross) < 1e-12);
      }
    }
  }
}

TEST_CASE("covariance is symmetric positive definite") {
  const CirTable cir = reference_cir();
  for (double eta : {1e-3, 1.0, 50.0}) {
    const auto stats = build_stats(cir, eta, SampleIndexMap::centered(1, 3));
    CHECK((stats.gamma - stats.gamma.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * stats.gamma.cwiseAbs().maxCoeff());
    CHECK(stats.gamma.llt().info() == Eigen::Success);
  }
}

TEST_CASE("background count only moves the diagonal") {
  const CirTable cir = reference_cir();
  const auto map = SampleIndexMap::centered(1, 3);
  const auto g0 = build_stats(cir, 0.0, map).gamma;
  const auto g7 = build_stats(cir, 7.0, map).gamma;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j) {
      if (i == j) CHECK(g7(i, j) - g0(i, j) == doctest::Approx(7.0).epsilon(1e-12));
      else CHECK(g7(i, j) == g0(i, j));
    }
}

TEST_CASE("linear taps solve the exact normal equations") {
  for (double a : {3e3, 1e4, 4e4}) {
    const CirTable cir = reference_cir(a);
    const auto taps = design_linear_fse(cir, 1.0, 1);
    REQUIRE(taps.b.size() == 9);
    const auto exact = oracle::enumerate(cir, 1.0, {-1, 0, 1}, 0);
    const Eigen::VectorXd b = exact.cov.ldlt().solve(exact.cross);
    CHECK(max_rel(taps.b, b) < 1e-9);
    CHECK(taps.b_c == doctest::Approx(0.5 - b.dot(exact.mean)).epsilon(1e-9));
    CHECK(taps.mse == doctest::Approx(0.25 - exact.cross.dot(b)).epsilon(1e-9));
    CHECK(taps.mse > 0.0);
    CHECK(taps.mse < 0.25);
    CHECK(taps.condition >= 1.0);
  }
}

TEST_CASE("linear equalizer output") {
  const CirTable cir = reference_cir();
  auto taps = design_linear_fse(cir, 1.0, 1);
  const auto stats = build_stats(cir, 1.0, taps.map);
  std::vector<double> mean(stats.mean_q.data(), stats.mean_q.data() + 9);
  CHECK(linear_fse_output(taps, mean) == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng = derive_stream(17, {});
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> q(9);
    for (auto& x : q) x = u(rng);
    long double expected = taps.b_c;
    for (int i = 0; i < 9; ++i) expected += static_cast<long double>(taps.b[i]) * q[static_cast<std::size_t>(i)];
    CHECK(linear_fse_output(taps, q) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
  }

  taps.b.setZero();
  taps.b_c = 0.5;
  CHECK(linear_fse_output(taps, mean) == 0.5);
  CHECK_THROWS_AS(linear_fse_output(taps, std::vector<double>(8)), InvalidArgument);
}

TEST_CASE("post-cursor outer-product matrix") {
  const CirTable cir = reference_cir();
  CHECK(build_h_sq(cir, 1, 0).isZero(0.0));
  CHECK(build_h_sq(custom_cir(Eigen::MatrixXd::Constant(1, 3, 2.0)), 1, 3).isZero(0.0));

  for (int l1 : {0, 1, 2}) {
    for (int l2 : {1, 3, 6}) {
      const int n = (l1 + 1) * 3;
      Eigen::MatrixXd naive = Eigen::MatrixXd::Zero(n, n);
      for (int tau = 1; tau <= l2; ++tau)
        for (int i = 0; i < n; ++i)
          for (int k = 0; k < n; ++k) {
            const int li = tau + i / 3, lk = tau + k / 3;
            const double hi = li < 5 ? cir.h(li, i % 3) : 0.0;
            const double hk = lk < 5 ? cir.h(lk, k % 3) : 0.0;
            naive(i, k) += hi * hk / 16.0;
          }
      CHECK(max_rel(build_h_sq(cir, l1, l2), naive) < 1e-12);
    }
  }
}

TEST_CASE("decision-feedback taps equal the exact genie regression") {
  for (double a : {3e3, 1e4, 4e4}) {
    for (int l2 : {1, 3, 4}) {
      const CirTable cir = reference_cir(a);
      const auto taps = design_dfe(cir, 1.0, 1, l2);
      REQUIRE(taps.b.size() == 6);
      REQUIRE(taps.a.size() == l2);
      const auto exact = oracle::enumerate(cir, 1.0, {0, 1}, l2);
      const Eigen::VectorXd coef = exact.cov.ldlt().solve(exact.cross);
      CHECK(max_rel(taps.b, coef.head(6)) < 1e-9);
      CHECK(max_rel(taps.a, -coef.tail(l2)) < 1e-9);
      CHECK(taps.b_c == doctest::Approx(0.5 - coef.dot(exact.mean)).epsilon(1e-9));
      CHECK(taps.mse == doctest::Approx(0.25 - exact.cross.dot(coef)).epsilon(1e-9));

      // Feedback can only help the genie-aided receiver.
      const auto ff_only = oracle::enumerate(cir, 1.0, {0, 1}, 0);
      const double linear_mse = 0.25 - ff_only.cross.dot(ff_only.cov.ldlt().solve(ff_only.cross));
      CHECK(taps.mse <= linear_mse + 1e-15);
    }
  }
}

TEST_CASE("decision-feedback design without feedback") {
  const CirTable cir = reference_cir();
  const auto taps = design_dfe(cir, 1.0, 1, 0);
  CHECK(taps.a.size() == 0);
  const auto stats = build_stats(cir, 1.0, SampleIndexMap::causal(1, 3));
  CHECK(max_rel(stats.gamma * taps.b, stats.xi) < 1e-12);
}

TEST_CASE("decision-feedback output") {
  const CirTable cir = reference_cir();
  const auto taps = design_dfe(cir, 1.0, 1, 3);
  const auto stats = build_stats(cir, 1.0, taps.map);
  // Mean input with every fed-back symbol at its mean 1/2.
  CHECK(taps.b_c + taps.b.dot(stats.mean_q) - 0.5 * taps.a.sum() == doctest::Approx(0.5).epsilon(1e-12));

  const std::vector<double> zeros(6, 0.0);
  const std::vector<std::uint8_t> none(3, 0);
  CHECK(dfe_output(taps, zeros, none) == taps.b_c);

  Rng rng = derive_stream(23, {});
  std::uniform_real_distribution<double> u(0.0, 40.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> q(6);
    for (auto& x : q) x = u(rng);
    const Bits past = generate_bits(3, rng);
    long double expected = taps.b_c;
    for (int i = 0; i < 6; ++i) expected += static_cast<long double>(taps.b[i]) * q[static_cast<std::size_t>(i)];
    for (int t = 0; t < 3; ++t) expected -= static_cast<long double>(taps.a[t]) * past[static_cast<std::size_t>(t)];
    CHECK(dfe_output(taps, q, past) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
  }

  DfeTaps no_fb = taps;
  no_fb.a.setZero();
  LinearTaps linear{taps.map, taps.b, taps.b_c, 0.0, 0.0};
  std::vector<double> q(6, 3.0);
  CHECK(dfe_output(no_fb, q, std::vector<std::uint8_t>{1, 1, 0}) == linear_fse_output(linear, q));
  CHECK_THROWS_AS(dfe_output(taps, q, std::vector<std::uint8_t>(2)), InvalidArgument);
}

TEST_CASE("symbol-rate equalizer") {
  const CirTable cir = reference_cir();
  const auto taps = design_symbol_rate_eq(cir, 1.0, 1);
  CHECK(taps.b.size() == 3);
  const CirTable slice = symbol_rate_slice(cir);
  CHECK(slice.samples() == 1);
  CHECK(slice.h.col(0) == cir.h.col(cir.peak_sample()));
  CHECK(slice.elapsed(0, 0) == doctest::Approx(cir.t_peak).epsilon(1e-14));

  // With one sample per symbol the restriction changes nothing.
  ChannelParams p;
  p.samples_per_symbol = 1;
  const CirTable single = build_cir_table(p);
  const auto a = design_symbol_rate_eq(single, 1.0, 1);
  const auto b = design_linear_fse(single, 1.0, 1);
  CHECK(a.b == b.b);
  CHECK(a.b_c == b.b_c);
}

TEST_CASE("matched filter") {
  const CirTable cir = reference_cir();
  const std::vector<std::int32_t> zero(3, 0);
  CHECK(matched_filter(cir, 1.0, zero).v == 0.0);
  CHECK_THROWS_AS(matched_filter(cir, 1.0, std::vector<std::int32_t>(2)), InvalidArgument);

  const CirTable one_tap = custom_cir(cir.h.topRows(1));
  CHECK(matched_filter_threshold(one_tap, 0.0) == doctest::Approx(0.5 * cir.h.row(0).squaredNorm()).epsilon(1e-14));

  // The threshold is the midpoint of the conditional output means.
  Rng rng = derive_stream(31, {});
  constexpr int kFrames = 1000;
  double sum[2] = {0.0, 0.0};
  std::uint64_t count[2] = {0, 0};
  for (int f = 0; f < kFrames; ++f) {
    const Bits bits = generate_bits(1000, rng);
    const auto obs = simulate_observations(cir, bits, 1.0, rng);
    for (int k = 4; k < 1000; ++k) {
      sum[bits[static_cast<std::size_t>(k)]] += matched_filter(cir, 1.0, obs.row(k)).v;
      ++count[bits[static_cast<std::size_t>(k)]];
    }
  }
  const double thr = matched_filter_threshold(cir, 1.0);
  const double above = sum[1] / static_cast<double>(count[1]) - thr;
  const double below = thr - sum[0] / static_cast<double>(count[0]);
  CHECK(above == doctest::Approx(below).epsilon(0.01));
}

TEST_CASE("degenerate covariance is reported with its condition") {
  const CirTable silent = custom_cir(Eigen::MatrixXd::Zero(2, 3));
  CHECK_THROWS_AS(design_linear_fse(silent, 0.0, 1), ConditioningError);
  try {
    design_linear_fse(silent, 0.0, 1);
  } catch (const ConditioningError& e) {
    CHECK(e.condition() > 1e12);
  }
}

TEST_CASE("window gathering") {
  const CirTable cir = reference_cir();
  ObservationMatrix obs(5, 3, 1, 1);
  for (std::int64_t k = -1; k < 6; ++k)
    for (int m = 0; m < 3; ++m) obs.at(k, m) = static_cast<std::int32_t>(10 * (k + 1) + m);
  const auto q = gather_window(obs, SampleIndexMap::centered(1, 3), 0);
  CHECK(q[0] == 0.0);
  CHECK(q[4] == 11.0);
  CHECK(q[8] == 22.0);
  const auto s = gather_window(obs, SampleIndexMap::centered(1, 1), 2, 1);
  CHECK(s[0] == 21.0);
  CHECK(s[2] == 41.0);
  CHECK_THROWS_AS(gather_window(obs, SampleIndexMap::centered(2, 3), 0), InvalidArgument);
}
