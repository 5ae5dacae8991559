#include "mcfse/analysis.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "mcfse/errors.hpp"

namespace mcfse {

Eigen::MatrixXd build_nu(const CirTable& cir, double eta, int half_window, std::span<const std::uint8_t> window,
                         std::uint8_t alpha) {
  const int L = cir.memory();
  const int T = half_window;
  if (T < 0) throw InvalidArgument("half window must be >= 0");
  if (static_cast<int>(window.size()) != 2 * T + L) throw InvalidArgument("sequence window must have length 2T+L");
  Eigen::MatrixXd nu(2 * T + 1, cir.samples());
  for (int j = 0; j < 2 * T + 1; ++j) {
    for (int m = 0; m < cir.samples(); ++m) {
      double rate = 0.0;
      // Row j observes symbol k-T+j; tap l reaches back to s_{k-T+j-l}, which
      // sits at window position 2T-j+l (always inside the window).
      for (int l = 0; l < L; ++l) {
        const int p = 2 * T - j + l;
        const std::uint8_t s = p == T ? alpha : window[static_cast<std::size_t>(p)];
        if (s) rate += cir.h(l, m);
      }
      nu(j, m) = rate + eta;
    }
  }
  return nu;
}

ConditionalMoments conditional_moments(const LinearTaps& taps, const Eigen::MatrixXd& nu0,
                                       const Eigen::MatrixXd& nu1) {
  const int n = static_cast<int>(taps.b.size());
  if (nu0.size() != n || nu1.size() != n || nu0.cols() != taps.map.samples || nu1.cols() != taps.map.samples)
    throw InvalidArgument("rate matrices do not match the equalizer window");
  ConditionalMoments out;
  out.mu0 = out.mu1 = taps.b_c;
  for (int i = 0; i < n; ++i) {
    const int j = taps.map.row_of(i);
    const int m = taps.map.sample_of(i);
    const double b = taps.b[i];
    out.mu0 += b * nu0(j, m);
    out.mu1 += b * nu1(j, m);
    out.var0 += b * b * nu0(j, m);
    out.var1 += b * b * nu1(j, m);
  }
  return out;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace {

struct Enumeration {
  LinearTaps taps;
  int half_window;
  int width;       // 2T + L
  std::uint64_t count;  // 2^(2T+L-1)
};

Enumeration prepare(const CirTable& cir, double eta, int half_window) {
  const int width = 2 * half_window + cir.memory();
  if (half_window < 0) throw InvalidArgument("half window must be >= 0");
  if (width > kMaxAnalyticalWindow) throw InvalidArgument("analytical BER enumeration limited to 2T+L <= 24");
  return {design_linear_fse(cir, eta, half_window), half_window, width, std::uint64_t{1} << (width - 1)};
}

// Average of the two conditional error probabilities for one interfering pattern.
double pattern_error(const CirTable& cir, double eta, const Enumeration& e, std::uint64_t pattern, double gamma,
                     SequenceWindow& window) {
  int bit = 0;
  for (int p = 0; p < e.width; ++p) {
    if (p == e.half_window) continue;
    window[static_cast<std::size_t>(p)] = static_cast<std::uint8_t>((pattern >> bit++) & 1U);
  }
  const auto nu0 = build_nu(cir, eta, e.half_window, window, 0);
  const auto nu1 = build_nu(cir, eta, e.half_window, window, 1);
  const auto mom = conditional_moments(e.taps, nu0, nu1);

  // P(v < gamma | s_k = 1) and P(v >= gamma | s_k = 0); zero variance is a point mass.
  const double miss = mom.var1 > 0.0 ? q_function((mom.mu1 - gamma) / std::sqrt(mom.var1)) : (mom.mu1 < gamma ? 1.0 : 0.0);
  const double false_alarm =
      mom.var0 > 0.0 ? q_function((gamma - mom.mu0) / std::sqrt(mom.var0)) : (mom.mu0 >= gamma ? 1.0 : 0.0);
  return 0.5 * miss + 0.5 * false_alarm;
}

AnalyticalBer finish(const std::vector<double>& terms) {
  // Fixed-order sum so serial and parallel runs agree bit for bit.
  double total = 0.0;
  for (double t : terms) total += t;
  return {total / static_cast<double>(terms.size()), terms.size()};
}

}  // namespace

AnalyticalBer analytical_ber_linear_serial(const CirTable& cir, double eta, int half_window, double gamma) {
  const auto e = prepare(cir, eta, half_window);
  std::vector<double> terms(e.count);
  SequenceWindow window(static_cast<std::size_t>(e.width), 0);
  for (std::uint64_t x = 0; x < e.count; ++x) terms[x] = pattern_error(cir, eta, e, x, gamma, window);
  return finish(terms);
}

AnalyticalBer analytical_ber_linear(const CirTable& cir, double eta, int half_window, double gamma) {
  const auto e = prepare(cir, eta, half_window);
  std::vector<double> terms(e.count);
  const auto count = static_cast<std::int64_t>(e.count);
#pragma omp parallel
  {
    SequenceWindow window(static_cast<std::size_t>(e.width), 0);
#pragma omp for schedule(static)
    for (std::int64_t x = 0; x < count; ++x)
      terms[static_cast<std::size_t>(x)] = pattern_error(cir, eta, e, static_cast<std::uint64_t>(x), gamma, window);
  }
  return finish(terms);
}

}  // namespace mcfse
