#include "mcfse/equalize.hpp"

#include "mcfse/errors.hpp"
#include "mcfse/linalg.hpp"

namespace mcfse {

SampleIndexMap SampleIndexMap::centered(int half_width, int samples) {
  if (half_width < 0 || samples < 1) throw InvalidArgument("invalid centered window");
  return {WindowKind::Centered, half_width, samples};
}

SampleIndexMap SampleIndexMap::causal(int lookahead, int samples) {
  if (lookahead < 0 || samples < 1) throw InvalidArgument("invalid causal window");
  return {WindowKind::Causal, lookahead, samples};
}

SecondOrderStats build_stats(const CirTable& cir, double eta, const SampleIndexMap& map) {
  if (map.samples != cir.samples()) throw InvalidArgument("window and impulse response disagree on samples per symbol");
  const int L = cir.memory();
  const int n = map.size();

  SecondOrderStats stats;
  stats.map = map;
  stats.gamma.setZero(n, n);
  stats.xi.setZero(n);
  stats.mean_q.resize(n);
  stats.H.setZero(map.rows(), map.samples);

  const Eigen::VectorXd column_sums = cir.h.colwise().sum().transpose();

  for (int i = 0; i < n; ++i) {
    const int d = map.symbol_offset(map.row_of(i));
    const int m = map.sample_of(i);
    stats.mean_q[i] = 0.5 * column_sums[m] + eta;
    if (d >= 0 && d < L) {
      stats.xi[i] = 0.25 * cir.h(d, m);
      stats.H(map.row_of(i), m) = cir.h(d, m);
    }
    for (int ip = 0; ip <= i; ++ip) {
      const int mp = map.sample_of(ip);
      // Symbols shared by the two samples: row lag `lag` >= 0 between the
      // later and the earlier one, taps aligned as (l + lag, l).
      const int delta = d - map.symbol_offset(map.row_of(ip));
      const int lag = delta >= 0 ? delta : -delta;
      const int later = delta >= 0 ? m : mp;
      const int earlier = delta >= 0 ? mp : m;
      double acc = 0.0;
      for (int l = 0; l + lag < L; ++l) acc += cir.h(l + lag, later) * cir.h(l, earlier);
      stats.gamma(i, ip) = 0.25 * acc;
      stats.gamma(ip, i) = 0.25 * acc;
    }
    stats.gamma(i, i) += 0.5 * column_sums[m] + eta;
  }
  return stats;
}

LinearTaps design_linear_fse(const CirTable& cir, double eta, int half_window) {
  const auto stats = build_stats(cir, eta, SampleIndexMap::centered(half_window, cir.samples()));
  const SpdSolver solver(stats.gamma);
  LinearTaps taps;
  taps.map = stats.map;
  taps.b = solver.solve(stats.xi);
  taps.b_c = 0.5 - taps.b.dot(stats.mean_q);
  taps.mse = 0.25 - stats.xi.dot(taps.b);
  taps.condition = solver.condition();
  return taps;
}

double linear_fse_output(const LinearTaps& taps, std::span<const double> q) {
  if (static_cast<Eigen::Index>(q.size()) != taps.b.size()) throw InvalidArgument("equalizer input length mismatch");
  double v = taps.b_c;
  for (std::size_t i = 0; i < q.size(); ++i) v += taps.b[static_cast<Eigen::Index>(i)] * q[i];
  return v;
}

namespace {

// Post-cursor response of feedback delay tau on causal-window sample (j, m).
double post_cursor(const CirTable& cir, int tau, int j, int m) {
  const int l = tau + j;
  return l < cir.memory() ? 0.25 * cir.h(l, m) : 0.0;
}

}  // namespace

Eigen::MatrixXd build_h_sq(const CirTable& cir, int lookahead, int fb_taps) {
  if (lookahead < 0 || fb_taps < 0) throw InvalidArgument("look-ahead and feedback length must be >= 0");
  const auto map = SampleIndexMap::causal(lookahead, cir.samples());
  const int n = map.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd column(n);
  for (int tau = 1; tau <= fb_taps; ++tau) {
    for (int i = 0; i < n; ++i) column[i] = post_cursor(cir, tau, map.row_of(i), map.sample_of(i));
    out.noalias() += column * column.transpose();
  }
  return out;
}

DfeTaps design_dfe(const CirTable& cir, double eta, int lookahead, int fb_taps) {
  const auto stats = build_stats(cir, eta, SampleIndexMap::causal(lookahead, cir.samples()));
  const Eigen::MatrixXd system = stats.gamma - 4.0 * build_h_sq(cir, lookahead, fb_taps);
  const SpdSolver solver(system);

  DfeTaps taps;
  taps.map = stats.map;
  // On a causal window xi is exactly the cursor response h(j, m) / 4.
  taps.b = solver.solve(stats.xi);
  taps.a.setZero(fb_taps);
  for (int tau = 1; tau <= fb_taps; ++tau) {
    double acc = 0.0;
    for (int i = 0; i < stats.map.size(); ++i)
      acc += taps.b[i] * post_cursor(cir, tau, stats.map.row_of(i), stats.map.sample_of(i));
    taps.a[tau - 1] = 4.0 * acc;
  }
  // Unbiased output: E{v_k} = 1/2 with E{s} = 1/2 for the fed-back symbols.
  taps.b_c = 0.5 - taps.b.dot(stats.mean_q) + 0.5 * taps.a.sum();
  taps.mse = 0.25 - stats.xi.dot(taps.b);
  taps.condition = solver.condition();
  return taps;
}

double dfe_output(const DfeTaps& taps, std::span<const double> q, std::span<const std::uint8_t> past) {
  if (static_cast<Eigen::Index>(q.size()) != taps.b.size()) throw InvalidArgument("feed-forward input length mismatch");
  if (static_cast<Eigen::Index>(past.size()) != taps.a.size()) throw InvalidArgument("feedback input length mismatch");
  double v = taps.b_c;
  for (std::size_t i = 0; i < q.size(); ++i) v += taps.b[static_cast<Eigen::Index>(i)] * q[i];
  for (std::size_t t = 0; t < past.size(); ++t) v -= taps.a[static_cast<Eigen::Index>(t)] * past[t];
  return v;
}

CirTable symbol_rate_slice(const CirTable& cir) {
  const int column = cir.peak_sample();
  CirTable slice;
  slice.h = cir.h.col(column);
  slice.t_peak = cir.t_peak;
  slice.symbol_time = cir.symbol_time;
  // Keeps elapsed(l, 0) equal to the original grid time of the column.
  slice.sample_interval = (column + 1) * cir.sample_interval;
  return slice;
}

LinearTaps design_symbol_rate_eq(const CirTable& cir, double eta, int half_window) {
  return design_linear_fse(symbol_rate_slice(cir), eta, half_window);
}

double matched_filter_threshold(const CirTable& cir, double eta) {
  double threshold = 0.0;
  for (int m = 0; m < cir.samples(); ++m) {
    double isi = 0.0;
    for (int l = 1; l < cir.memory(); ++l) isi += cir.h(l, m);
    threshold += cir.h(0, m) * (0.5 * cir.h(0, m) + 0.5 * isi + eta);
  }
  return threshold;
}

MatchedFilterOutput matched_filter(const CirTable& cir, double eta, std::span<const std::int32_t> row) {
  if (static_cast<int>(row.size()) != cir.samples()) throw InvalidArgument("matched filter row length mismatch");
  MatchedFilterOutput out;
  for (int m = 0; m < cir.samples(); ++m) out.v += cir.h(0, m) * row[static_cast<std::size_t>(m)];
  out.threshold = matched_filter_threshold(cir, eta);
  return out;
}

Eigen::VectorXd gather_window(const ObservationMatrix& obs, const SampleIndexMap& map, std::int64_t k,
                              int column) {
  if (column >= 0 && map.samples != 1) throw InvalidArgument("single-column gather needs a one-sample window");
  if (column < 0 && map.samples != obs.samples()) throw InvalidArgument("window and observations disagree on samples");
  Eigen::VectorXd q(map.size());
  for (int j = 0; j < map.rows(); ++j) {
    const std::int64_t row = k + map.symbol_offset(j);
    if (!obs.has_row(row)) throw InvalidArgument("equalizer window reaches outside the observations");
    for (int m = 0; m < map.samples; ++m) q[map.index(j, m)] = obs.at(row, column >= 0 ? column : m);
  }
  return q;
}

}  // namespace mcfse
