#include "mcfse/validate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>

#include "mcfse/analysis.hpp"
#include "mcfse/detect.hpp"
#include "mcfse/errors.hpp"

namespace mcfse {

void for_each_window(const CirTable& cir, double eta, const SampleIndexMap& map, int past, std::uint64_t count,
                     Rng& rng, const std::function<void(const WindowDraw&)>& visit) {
  if (map.samples != cir.samples()) throw InvalidArgument("window and impulse response disagree on samples per symbol");
  if (past < 0) throw InvalidArgument("past must be >= 0");
  // Each window gets its own block of symbols, long enough that no
  // observation it reads depends on a neighbouring block.
  const int pre = std::max(cir.memory() - 1 + map.lookback(), past);
  const int block = pre + map.lookahead() + 1;
  constexpr std::uint64_t kBlocksPerChunk = 1024;

  std::vector<double> q(static_cast<std::size_t>(map.size()));
  std::vector<std::uint8_t> history(static_cast<std::size_t>(past));
  std::uint64_t done = 0;
  while (done < count) {
    const auto blocks = std::min(kBlocksPerChunk, count - done);
    const Bits bits = generate_bits(static_cast<int>(blocks) * block, rng);
    const ObservationMatrix obs = simulate_observations(cir, bits, eta, rng);
    for (std::uint64_t c = 0; c < blocks; ++c) {
      const std::int64_t k = static_cast<std::int64_t>(c) * block + pre;
      for (int j = 0; j < map.rows(); ++j) {
        const auto row = obs.row(k + map.symbol_offset(j));
        for (int m = 0; m < map.samples; ++m) q[static_cast<std::size_t>(map.index(j, m))] = row[static_cast<std::size_t>(m)];
      }
      for (int t = 0; t < past; ++t) history[static_cast<std::size_t>(t)] = bits[static_cast<std::size_t>(k - 1 - t)];
      visit(WindowDraw{q, bits[static_cast<std::size_t>(k)], history});
    }
    done += blocks;
  }
}

CovarianceAccumulator::CovarianceAccumulator(int dim)
    : shift_(Eigen::VectorXd::Zero(dim)), sum_(Eigen::VectorXd::Zero(dim)), outer_(Eigen::MatrixXd::Zero(dim, dim)) {}

void CovarianceAccumulator::add(std::span<const double> x) {
  const Eigen::Index n = sum_.size();
  if (static_cast<Eigen::Index>(x.size()) != n) throw InvalidArgument("sample dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), n);
  // Shifting by the first sample keeps the raw second moments small.
  if (n_ == 0) shift_ = v;
  const Eigen::VectorXd d = v - shift_;
  sum_ += d;
  outer_.selfadjointView<Eigen::Lower>().rankUpdate(d);
  ++n_;
}

Eigen::VectorXd CovarianceAccumulator::mean() const {
  if (n_ == 0) throw InvalidArgument("no samples");
  return shift_ + sum_ / static_cast<double>(n_);
}

Eigen::MatrixXd CovarianceAccumulator::covariance() const {
  if (n_ < 2) throw InvalidArgument("covariance needs at least two samples");
  const double n = static_cast<double>(n_);
  Eigen::MatrixXd full = outer_.selfadjointView<Eigen::Lower>();
  return (full - sum_ * sum_.transpose() / n) / (n - 1.0);
}

RegressionAccumulator::RegressionAccumulator(int dim)
    : dim_(dim),
      shift_(Eigen::VectorXd::Zero(dim)),
      xtx_(Eigen::MatrixXd::Zero(dim + 1, dim + 1)),
      xty_(Eigen::VectorXd::Zero(dim + 1)) {}

void RegressionAccumulator::add(std::span<const double> x, double y) {
  if (static_cast<int>(x.size()) != dim_) throw InvalidArgument("regressor dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), dim_);
  if (n_ == 0) shift_ = v;
  Eigen::VectorXd row(dim_ + 1);
  row.head(dim_) = v - shift_;
  row[dim_] = 1.0;
  xtx_.selfadjointView<Eigen::Lower>().rankUpdate(row);
  xty_ += y * row;
  yty_ += y * y;
  ++n_;
}

RegressionAccumulator::Fit RegressionAccumulator::fit() const {
  if (n_ <= static_cast<std::uint64_t>(dim_ + 1)) throw InvalidArgument("too few samples for the regression");
  const Eigen::MatrixXd xtx = xtx_.selfadjointView<Eigen::Lower>();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success) throw NumericalError("singular regression design");
  const Eigen::VectorXd beta = ldlt.solve(xty_);
  const Eigen::MatrixXd inverse = ldlt.solve(Eigen::MatrixXd::Identity(dim_ + 1, dim_ + 1));

  Fit fit;
  const double rss = std::max(0.0, yty_ - beta.dot(xty_));
  fit.residual_variance = rss / static_cast<double>(n_ - static_cast<std::uint64_t>(dim_) - 1);
  fit.coef = beta.head(dim_);
  fit.coef_se = (fit.residual_variance * inverse.diagonal().head(dim_)).cwiseSqrt();
  // Undo the shift: y = coef^T (x - shift) + c  =>  intercept = c - coef^T shift.
  fit.intercept = beta[dim_] - fit.coef.dot(shift_);
  Eigen::VectorXd g(dim_ + 1);
  g.head(dim_) = -shift_;
  g[dim_] = 1.0;
  fit.intercept_se = std::sqrt(fit.residual_variance * g.dot(inverse * g));
  return fit;
}

namespace {

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

CheckResult at_most(std::string name, double measured, double tolerance, std::string detail = {}) {
  return {std::move(name), measured <= tolerance, measured, tolerance, std::move(detail)};
}

// --- impulse response -----------------------------------------------------

CheckResult check_peak(const ChannelParams& params) {
  const double t_peak = find_t_peak(params);
  // Independent dense log-spaced scan.
  constexpr int kPoints = 200000;
  double best_t = 0.0, best = -1.0;
  for (int i = 0; i <= kPoints; ++i) {
    const double t = 1e-9 * std::pow(1e12, static_cast<double>(i) / kPoints);
    const double v = cir_value(params, t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  const double step = std::pow(1e12, 1.0 / kPoints) - 1.0;
  const double rel = std::abs(t_peak - best_t) / best_t;
  const bool not_lower = cir_value(params, t_peak) >= best * (1.0 - 1e-12);
  auto r = at_most("cir-peak-vs-scan", rel, step, format("t_peak=%.10g s, scan=%.10g s", t_peak, best_t));
  r.passed = r.passed && not_lower;
  return r;
}

// --- second-order statistics ----------------------------------------------

CheckResult check_symmetric_pd(std::string name, const Eigen::MatrixXd& m) {
  const double scale = m.cwiseAbs().maxCoeff();
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  CheckResult r{std::move(name), asym <= 1e-14 && min_eig > 0.0, asym, 1e-14,
                format("relative asymmetry %.3g, smallest eigenvalue %.6g", asym, min_eig)};
  return r;
}

struct LinearOracle {
  CovarianceAccumulator cov;
  RegressionAccumulator reg;
  // error e = s - v: moments for the MSE, bias and orthogonality checks
  double e_sum = 0.0, e2_sum = 0.0, e4_sum = 0.0;
  Eigen::VectorXd eq_sum, eq2_sum, q_sum;
  std::uint64_t n = 0;

  explicit LinearOracle(int dim)
      : cov(dim), reg(dim), eq_sum(Eigen::VectorXd::Zero(dim)), eq2_sum(Eigen::VectorXd::Zero(dim)),
        q_sum(Eigen::VectorXd::Zero(dim)) {}
};

std::vector<CheckResult> check_linear(const CirTable& cir, double eta, int half_window, const ValidateOptions& opt,
                                      Rng& rng) {
  std::vector<CheckResult> out;
  const SecondOrderStats stats = build_stats(cir, eta, SampleIndexMap::centered(half_window, cir.samples()));
  const LinearTaps taps = design_linear_fse(cir, eta, half_window);
  const int n = stats.map.size();

  out.push_back(check_symmetric_pd("gamma-symmetric-pd", stats.gamma));

  LinearOracle o(n);
  for_each_window(cir, eta, stats.map, 0, opt.windows, rng, [&](const WindowDraw& w) {
    o.cov.add(w.q);
    o.reg.add(w.q, w.symbol);
    // Centred on the model mean so that the per-entry spread is not
    // dominated by E{q}.
    const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(w.q.data(), n) - stats.mean_q;
    const double e = w.symbol - linear_fse_output(taps, w.q);
    o.e_sum += e;
    o.e2_sum += e * e;
    o.e4_sum += e * e * e * e;
    o.eq_sum += e * q;
    o.eq2_sum += (e * q).cwiseAbs2();
    o.q_sum += q;
    ++o.n;
  });

  // Covariance oracle: every entry within 5 standard errors (Gaussian
  // fourth-moment approximation) of the Monte Carlo estimate.
  Eigen::MatrixXd gamma = stats.gamma;
  if (opt.corrupt_gamma) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) gamma(i, j) *= 1.25;
  }
  const Eigen::MatrixXd emp = o.cov.covariance();
  const double nn = static_cast<double>(o.n);
  double worst_z = 0.0, worst_rel = 0.0;
  const double floor = 0.01 * emp.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double se = std::sqrt((emp(i, i) * emp(j, j) + emp(i, j) * emp(i, j)) / nn);
      worst_z = std::max(worst_z, std::abs(gamma(i, j) - emp(i, j)) / se);
      if (std::abs(gamma(i, j)) >= floor) worst_rel = std::max(worst_rel, std::abs(gamma(i, j) - emp(i, j)) / std::abs(gamma(i, j)));
    }
  }
  out.push_back(at_most("covariance-oracle", worst_z, 5.0,
                        format("max |z| over entries; max relative deviation %.4f", worst_rel)));

  const Eigen::VectorXd mean_dev = (o.cov.mean() - stats.mean_q).cwiseAbs();
  double mean_z = 0.0;
  for (int i = 0; i < n; ++i) mean_z = std::max(mean_z, mean_dev[i] / std::sqrt(emp(i, i) / nn));
  out.push_back(at_most("mean-oracle", mean_z, 5.0, "max |z| of E{q} entries"));

  out.push_back(CheckResult{"mmse-in-range", taps.mse >= 0.0 && taps.mse <= 0.25, taps.mse, 0.25,
                            format("linear FSE analytical MMSE %.6g", taps.mse)});

  const double mse = o.e2_sum / nn;
  const double mse_se = std::sqrt(std::max(0.0, o.e4_sum / nn - mse * mse) / nn);
  out.push_back(at_most("mmse-vs-simulation", std::abs(mse - taps.mse) / mse_se, 5.0,
                        format("empirical %.6g, analytical %.6g", mse, taps.mse)));

  const double bias = o.e_sum / nn;
  const double bias_se = std::sqrt(std::max(0.0, mse - bias * bias) / nn);
  out.push_back(at_most("unbiased-output", std::abs(bias) / bias_se, 5.0, format("E{s - v} = %.3g", bias)));

  // E{e (q - E q)} = 0 for the MMSE taps.
  double orth_z = 0.0;
  const Eigen::VectorXd q_mean = o.q_sum / nn;
  for (int i = 0; i < n; ++i) {
    const double cross = o.eq_sum[i] / nn - bias * q_mean[i];
    const double se = std::sqrt(std::max(0.0, o.eq2_sum[i] / nn - (o.eq_sum[i] / nn) * (o.eq_sum[i] / nn)) / nn);
    orth_z = std::max(orth_z, std::abs(cross) / se);
  }
  out.push_back(at_most("orthogonality-of-error", orth_z, 4.0, "max |z| of E{e (q - E q)}"));

  const auto fit = o.reg.fit();
  double reg_z = 0.0;
  for (int i = 0; i < n; ++i) reg_z = std::max(reg_z, std::abs(fit.coef[i] - taps.b[i]) / fit.coef_se[i]);
  reg_z = std::max(reg_z, std::abs(fit.intercept - taps.b_c) / fit.intercept_se);
  out.push_back(at_most("regression-linear", reg_z, 5.0,
                        format("max |z| of taps and offset; max tap deviation %.3g",
                               (fit.coef - taps.b).cwiseAbs().maxCoeff())));
  return out;
}

std::vector<CheckResult> check_dfe(const CirTable& cir, double eta, const SchemeParams& rx, const ValidateOptions& opt,
                                   Rng& rng) {
  std::vector<CheckResult> out;
  const DfeTaps taps = design_dfe(cir, eta, rx.ff_lookahead, rx.fb_taps);
  const int n = taps.map.size();
  const int fb = rx.fb_taps;

  const SecondOrderStats stats = build_stats(cir, eta, taps.map);
  out.push_back(check_symmetric_pd("dfe-system-symmetric-pd",
                                   stats.gamma - 4.0 * build_h_sq(cir, rx.ff_lookahead, rx.fb_taps)));
  out.push_back(CheckResult{"dfe-mmse-in-range", taps.mse >= 0.0 && taps.mse <= 0.25, taps.mse, 0.25,
                            format("genie MMSE %.6g", taps.mse)});

  // Genie regression: s_k on (q_k, s_{k-1}, ..., s_{k-L2}).
  RegressionAccumulator reg(n + fb);
  std::vector<double> x(static_cast<std::size_t>(n + fb));
  for_each_window(cir, eta, taps.map, fb, opt.windows, rng, [&](const WindowDraw& w) {
    std::copy(w.q.begin(), w.q.end(), x.begin());
    for (int t = 0; t < fb; ++t) x[static_cast<std::size_t>(n + t)] = w.past[static_cast<std::size_t>(t)];
    reg.add(x, w.symbol);
  });
  const auto fit = reg.fit();
  double z = 0.0;
  for (int i = 0; i < n; ++i) z = std::max(z, std::abs(fit.coef[i] - taps.b[i]) / fit.coef_se[i]);
  for (int t = 0; t < fb; ++t) z = std::max(z, std::abs(fit.coef[n + t] + taps.a[t]) / fit.coef_se[n + t]);
  z = std::max(z, std::abs(fit.intercept - taps.b_c) / fit.intercept_se);
  out.push_back(at_most("regression-dfe", z, 5.0, format("genie residual variance %.6g, design %.6g",
                                                         fit.residual_variance, taps.mse)));
  return out;
}

// --- trellis ---------------------------------------------------------------

std::vector<CheckResult> check_trellis(const ChannelParams& base, const ValidateOptions& opt, Rng& rng) {
  double worst_mlsd = 0.0, worst_full = 0.0, worst_reduced = 0.0;
  bool reduced_bounded = true;
  const double molecule_grid[] = {2e3, 1e4, 3e4};
  std::uniform_int_distribution<int> length(1, opt.max_trial_length);
  for (int trial = 0; trial < opt.viterbi_trials; ++trial) {
    ChannelParams p = base;
    p.molecules = molecule_grid[trial % 3];
    const CirTable cir = build_cir_table(p);
    const Bits bits = generate_bits(length(rng), rng);
    const ObservationMatrix obs = simulate_observations(cir, bits, p.eta, rng);
    const auto exact = exhaustive_mlsd(obs, cir, p.eta);
    const double scale = std::max(1.0, std::abs(exact.log_likelihood));
    const auto mlsd = mlsd_viterbi(obs, cir, p.eta);
    worst_mlsd = std::max(worst_mlsd, std::abs(mlsd.log_likelihood - exact.log_likelihood) / scale);
    const auto full = dfsd_viterbi(obs, cir, p.eta, cir.memory());
    worst_full = std::max(worst_full, std::abs(full.log_likelihood - exact.log_likelihood) / scale);
    const auto reduced = dfsd_viterbi(obs, cir, p.eta, std::min(2, cir.memory()));
    const double own = sequence_log_likelihood(obs, cir, p.eta, reduced.bits);
    worst_reduced = std::max(worst_reduced, std::abs(own - reduced.log_likelihood) / scale);
    if (reduced.log_likelihood > exact.log_likelihood + 1e-9 * scale) reduced_bounded = false;
  }
  std::vector<CheckResult> out;
  out.push_back(at_most("mlsd-vs-exhaustive", worst_mlsd, 1e-9, "max relative log-likelihood gap"));
  out.push_back(at_most("dfsd-full-state-vs-exhaustive", worst_full, 1e-9, "lambda = L"));
  auto r = at_most("dfsd-reduced-consistent", worst_reduced, 1e-9,
                   "lambda = 2 metric equals the sequence likelihood and never beats the optimum");
  r.passed = r.passed && reduced_bounded;
  out.push_back(r);
  return out;
}

// --- scalar identities -----------------------------------------------------

CheckResult check_log_pmf() {
  double worst = 0.0;
  double mass_gap = 0.0;
  for (const double mu : {0.05, 1.0, 3.7, 25.0, 180.0, 1500.0, 2.0e4}) {
    // ln p(g) = ln p(g - 1) + ln mu - ln g, started from ln p(0) = -mu.
    double log_p = -mu;
    double mass = 0.0;
    const auto top = static_cast<std::int64_t>(mu + 12.0 * std::sqrt(mu) + 30.0);
    for (std::int64_t g = 0; g <= top; ++g) {
      if (g > 0) log_p += std::log(mu) - std::log(static_cast<double>(g));
      const double got = poisson_log_pmf(g, mu);
      worst = std::max(worst, std::abs(got - log_p) / std::max(1.0, std::abs(log_p)));
      mass += std::exp(got);
    }
    mass_gap = std::max(mass_gap, std::abs(mass - 1.0));
  }
  auto r = at_most("poisson-log-pmf", worst, 1e-10, format("max relative deviation; total-mass error %.2g", mass_gap));
  r.passed = r.passed && mass_gap < 1e-9;
  return r;
}

CheckResult check_q_function() {
  double worst = std::abs(q_function(0.0) - 0.5);
  worst = std::max(worst, std::abs(q_function(1.959963984540054) - 0.025) / 0.025);
  for (double x = -8.0; x <= 8.0; x += 0.25) worst = std::max(worst, std::abs(q_function(x) + q_function(-x) - 1.0));
  // Composite Simpson integral of the normal density on [x, x + 12].
  bool bounds = true;
  for (const double x : {0.3, 1.0, 2.5, 4.0, 6.0}) {
    constexpr int kSteps = 20000;
    const double h = 12.0 / kSteps;
    double acc = 0.0;
    for (int i = 0; i <= kSteps; ++i) {
      const double t = x + i * h;
      const double w = (i == 0 || i == kSteps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      acc += w * std::exp(-0.5 * t * t);
    }
    const double integral = acc * h / 3.0 / std::sqrt(2.0 * std::numbers::pi);
    worst = std::max(worst, std::abs(q_function(x) - integral) / integral);
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (!(q_function(x) > pdf * x / (1.0 + x * x) && q_function(x) < pdf / x)) bounds = false;
  }
  auto r = at_most("q-function-identities", worst, 1e-10, "symmetry, known quantile, quadrature, Mills-ratio bounds");
  r.passed = r.passed && bounds;
  return r;
}

std::vector<CheckResult> check_moments(const CirTable& cir, double eta, int half_window, Rng& rng) {
  std::vector<CheckResult> out;
  const LinearTaps taps = design_linear_fse(cir, eta, half_window);
  const SecondOrderStats stats = build_stats(cir, eta, taps.map);
  // Same taps through an unrelated solve path.
  const Eigen::VectorXd b_direct = stats.gamma.fullPivLu().solve(stats.xi);
  LinearTaps direct = taps;
  direct.b = b_direct;
  direct.b_c = 0.5 - b_direct.dot(stats.mean_q);

  const int window_len = 2 * half_window + cir.memory();
  double worst_form = 0.0, worst_z = 0.0;
  PoissonSampler sampler;
  for (int trial = 0; trial < 4; ++trial) {
    const Bits window = generate_bits(window_len, rng);
    const auto nu0 = build_nu(cir, eta, half_window, window, 0);
    const auto nu1 = build_nu(cir, eta, half_window, window, 1);
    const auto a = conditional_moments(taps, nu0, nu1);
    const auto b = conditional_moments(direct, nu0, nu1);
    for (const auto& [x, y] : {std::pair{a.mu0, b.mu0}, {a.mu1, b.mu1}, {a.var0, b.var0}, {a.var1, b.var1}})
      worst_form = std::max(worst_form, std::abs(x - y) / std::max(1e-300, std::abs(y)));

    // Rates built from the raw channel model, then sampled.
    for (const std::uint8_t alpha : {std::uint8_t{0}, std::uint8_t{1}}) {
      Bits seq = window;
      seq[static_cast<std::size_t>(half_window)] = alpha;
      // seq[p] = s_{k+T-p}; reorder oldest-first for mean_rate.
      Bits chrono(seq.rbegin(), seq.rend());
      const std::int64_t k = static_cast<std::int64_t>(window_len) - 1 - half_window;
      Eigen::VectorXd rate(taps.map.size());
      for (int j = 0; j < taps.map.rows(); ++j)
        for (int m = 0; m < cir.samples(); ++m)
          rate[taps.map.index(j, m)] = mean_rate(cir, chrono, eta, k + taps.map.symbol_offset(j), m);
      constexpr int kDraws = 100000;
      double s1 = 0.0, s2 = 0.0;
      for (int d = 0; d < kDraws; ++d) {
        double v = taps.b_c;
        for (int i = 0; i < rate.size(); ++i) v += taps.b[i] * static_cast<double>(sampler(rng, rate[i]));
        s1 += v;
        s2 += v * v;
      }
      const double mean = s1 / kDraws;
      const double var = s2 / kDraws - mean * mean;
      const double mu = alpha ? a.mu1 : a.mu0;
      const double sig2 = alpha ? a.var1 : a.var0;
      worst_z = std::max(worst_z, std::abs(mean - mu) / std::sqrt(sig2 / kDraws));
      // Var of a sample variance is about 2 sigma^4 / n for near-Gaussian v.
      worst_z = std::max(worst_z, std::abs(var - sig2) / (sig2 * std::sqrt(2.0 / kDraws) * 1.5));
    }
  }
  out.push_back(at_most("conditional-moments-two-forms", worst_form, 1e-10, "tap solve via Cholesky vs full-pivot LU"));
  out.push_back(at_most("conditional-moments-vs-simulation", worst_z, 5.0, "max |z| of mean and variance of v_k"));
  return out;
}

CheckResult check_poisson_sampler(Rng& rng) {
  PoissonSampler sampler;
  double worst = 0.0;
  for (const double rate : {0.3, 5.0, 40.0, 2000.0}) {
    constexpr int kDraws = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < kDraws; ++i) {
      const double g = static_cast<double>(sampler(rng, rate));
      s1 += g;
      s2 += g * g;
    }
    const double mean = s1 / kDraws;
    const double var = s2 / kDraws - mean * mean;
    worst = std::max(worst, std::abs(mean - rate) / std::sqrt(rate / kDraws));
    // Var of the sample variance of Poisson(r): (r + 2 r^2) / n.
    worst = std::max(worst, std::abs(var - rate) / std::sqrt((rate + 2.0 * rate * rate) / kDraws));
  }
  return at_most("poisson-sampler-moments", worst, 5.0, "max |z| of mean and variance");
}

CheckResult check_analytical_reduction(const CirTable& cir, double eta, int half_window) {
  const auto par = analytical_ber_linear(cir, eta, half_window);
  const auto ser = analytical_ber_linear_serial(cir, eta, half_window);
  return CheckResult{"analytical-parallel-equals-serial", par.ber == ser.ber && par.windows == ser.windows,
                     std::abs(par.ber - ser.ber), 0.0, format("BER %.10g", ser.ber)};
}

}  // namespace

std::vector<CheckResult> run_validation(const ExperimentConfig& config, const ValidateOptions& options) {
  config.validate();
  ChannelParams params = config.channel;
  if (!config.molecules.empty()) params.molecules = config.molecules.front();
  const CirTable cir = build_cir_table(params);
  const double eta = params.eta;
  const SchemeParams& rx = config.receiver;

  std::vector<CheckResult> out;
  auto append = [&out](std::vector<CheckResult> more) {
    for (auto& r : more) out.push_back(std::move(r));
  };

  out.push_back(check_peak(params));
  Rng rng_linear = derive_stream(options.seed, {1});
  append(check_linear(cir, eta, rx.half_window, options, rng_linear));
  Rng rng_dfe = derive_stream(options.seed, {2});
  append(check_dfe(cir, eta, rx, options, rng_dfe));

  const CirTable slice = symbol_rate_slice(cir);
  const LinearTaps sr = design_symbol_rate_eq(cir, eta, rx.half_window);
  out.push_back(check_symmetric_pd("symbol-rate-gamma-symmetric-pd",
                                   build_stats(slice, eta, sr.map).gamma));
  out.push_back(CheckResult{"symbol-rate-mmse-in-range", sr.mse >= 0.0 && sr.mse <= 0.25, sr.mse, 0.25,
                            format("symbol-rate analytical MMSE %.6g", sr.mse)});

  Rng rng_trellis = derive_stream(options.seed, {3});
  append(check_trellis(params, options, rng_trellis));
  out.push_back(check_log_pmf());
  out.push_back(check_q_function());
  Rng rng_moments = derive_stream(options.seed, {4});
  append(check_moments(cir, eta, rx.half_window, rng_moments));
  Rng rng_sampler = derive_stream(options.seed, {5});
  out.push_back(check_poisson_sampler(rng_sampler));
  out.push_back(check_analytical_reduction(cir, eta, rx.half_window));
  return out;
}

}  // namespace mcfse
