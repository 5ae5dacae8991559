#include "mcfse/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <exception>

#include <boost/math/distributions/normal.hpp>

#include "mcfse/detect.hpp"
#include "mcfse/equalize.hpp"
#include "mcfse/errors.hpp"

namespace mcfse {

namespace {

constexpr std::array<std::pair<Scheme, std::string_view>, 6> kSchemeNames{{
    {Scheme::LinearFse, "linear-fse"},
    {Scheme::Dfe, "dfe"},
    {Scheme::SymbolRate, "symbol-rate"},
    {Scheme::MatchedFilter, "matched-filter"},
    {Scheme::Mlsd, "mlsd"},
    {Scheme::Dfsd, "dfsd"},
}};

// v_k = b^T q_k + b_c over a centered window, read straight from the frame.
class LinearReceiver final : public Receiver {
 public:
  LinearReceiver(LinearTaps taps, double threshold, int column)
      : taps_(std::move(taps)), threshold_(threshold), column_(column) {}

  Bits detect(const ObservationMatrix& obs) const override {
    const auto& map = taps_.map;
    Bits out(static_cast<std::size_t>(obs.frame()));
    for (std::int64_t k = 0; k < obs.frame(); ++k) {
      double v = taps_.b_c;
      for (int j = 0; j < map.rows(); ++j) {
        const auto row = obs.row(k + map.symbol_offset(j));
        for (int m = 0; m < map.samples; ++m)
          v += taps_.b[map.index(j, m)] * row[static_cast<std::size_t>(column_ >= 0 ? column_ : m)];
      }
      out[static_cast<std::size_t>(k)] = threshold_detect(v, threshold_);
    }
    return out;
  }

 private:
  LinearTaps taps_;
  double threshold_;
  int column_;  // -1: all samples
};

// Feedback uses the receiver's own decisions, so errors propagate.
class DfeReceiver final : public Receiver {
 public:
  DfeReceiver(DfeTaps taps, double threshold) : taps_(std::move(taps)), threshold_(threshold) {}

  Bits detect(const ObservationMatrix& obs) const override {
    const auto& map = taps_.map;
    const auto fb = static_cast<std::int64_t>(taps_.a.size());
    Bits out(static_cast<std::size_t>(obs.frame()));
    for (std::int64_t k = 0; k < obs.frame(); ++k) {
      double v = taps_.b_c;
      for (int j = 0; j < map.rows(); ++j) {
        const auto row = obs.row(k + j);
        for (int m = 0; m < map.samples; ++m) v += taps_.b[map.index(j, m)] * row[static_cast<std::size_t>(m)];
      }
      for (std::int64_t t = 1; t <= fb && k - t >= 0; ++t)
        v -= taps_.a[t - 1] * out[static_cast<std::size_t>(k - t)];
      out[static_cast<std::size_t>(k)] = threshold_detect(v, threshold_);
    }
    return out;
  }

 private:
  DfeTaps taps_;
  double threshold_;
};

class MatchedFilterReceiver final : public Receiver {
 public:
  MatchedFilterReceiver(const CirTable& cir, double eta)
      : weights_(cir.h.row(0).transpose()), threshold_(matched_filter_threshold(cir, eta)) {}

  Bits detect(const ObservationMatrix& obs) const override {
    Bits out(static_cast<std::size_t>(obs.frame()));
    for (std::int64_t k = 0; k < obs.frame(); ++k) {
      const auto row = obs.row(k);
      double v = 0.0;
      for (Eigen::Index m = 0; m < weights_.size(); ++m) v += weights_[m] * row[static_cast<std::size_t>(m)];
      out[static_cast<std::size_t>(k)] = threshold_detect(v, threshold_);
    }
    return out;
  }

 private:
  Eigen::VectorXd weights_;
  double threshold_;
};

class SequenceReceiver final : public Receiver {
 public:
  SequenceReceiver(CirTable cir, double eta, int lambda) : cir_(std::move(cir)), eta_(eta), lambda_(lambda) {}

  Bits detect(const ObservationMatrix& obs) const override {
    if (lambda_ == cir_.memory()) return mlsd_viterbi(obs, cir_, eta_).bits;
    return dfsd_viterbi(obs, cir_, eta_, lambda_).bits;
  }

 private:
  CirTable cir_;
  double eta_;
  int lambda_;
};

std::uint64_t frame_count(const ExperimentConfig& config) {
  const auto K = static_cast<std::uint64_t>(config.channel.frame_length);
  return (config.target_bits + K - 1) / K;
}

int frame_length_of(const ExperimentConfig& config, std::uint64_t f) {
  const auto K = static_cast<std::uint64_t>(config.channel.frame_length);
  return static_cast<int>(std::min(K, config.target_bits - f * K));
}

std::uint64_t count_frame_errors(const Bits& truth, const Bits& decided) {
  std::uint64_t errors = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) errors += truth[k] != decided[k];
  return errors;
}

FrameTally make_tally(const ExperimentConfig& config, std::size_t receivers) {
  config.validate();
  FrameTally tally;
  tally.frames = frame_count(config);
  tally.bits = config.target_bits;
  tally.errors.assign(receivers, 0);
  return tally;
}

}  // namespace

std::string_view scheme_name(Scheme scheme) {
  for (const auto& [s, name] : kSchemeNames)
    if (s == scheme) return name;
  return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  for (const auto& [s, n] : kSchemeNames)
    if (n == name) return s;
  return std::nullopt;
}

const std::vector<Scheme>& all_schemes() {
  static const std::vector<Scheme> schemes = [] {
    std::vector<Scheme> out;
    for (const auto& entry : kSchemeNames) out.push_back(entry.first);
    return out;
  }();
  return schemes;
}

bool is_linear(Scheme scheme) { return scheme == Scheme::LinearFse || scheme == Scheme::SymbolRate; }

void SchemeParams::validate(int memory) const {
  if (half_window < 0) throw InvalidArgument("half window T must be >= 0");
  if (ff_lookahead < 0) throw InvalidArgument("feed-forward look-ahead L1 must be >= 0");
  if (fb_taps < 0) throw InvalidArgument("feedback length L2 must be >= 0");
  if (lambda < 1 || lambda > memory) throw InvalidArgument("trellis memory lambda must satisfy 1 <= lambda <= L");
  if (!std::isfinite(threshold)) throw InvalidArgument("threshold must be finite");
}

void ExperimentConfig::validate() const {
  channel.validate();
  receiver.validate(channel.memory);
  if (schemes.empty()) throw InvalidArgument("no scheme selected");
  if (target_bits < static_cast<std::uint64_t>(channel.frame_length))
    throw InvalidArgument("target bits must be at least one frame");
  if (workers < 1) throw InvalidArgument("worker count must be >= 1");
  for (double a : molecules)
    if (!std::isfinite(a) || a < 0.0) throw InvalidArgument("A values must be finite and >= 0");
}

std::pair<double, double> wilson_ci(std::uint64_t errors, std::uint64_t n, double level) {
  if (n == 0 || errors > n) throw InvalidArgument("Wilson interval needs 0 <= errors <= n and n >= 1");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must be in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(errors) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  const double low = errors == 0 ? 0.0 : std::max(0.0, centre - half);
  const double high = errors == n ? 1.0 : std::min(1.0, centre + half);
  return {std::min(low, p), std::max(high, p)};
}

std::unique_ptr<Receiver> make_receiver(Scheme scheme, const CirTable& cir, double eta, const SchemeParams& params) {
  params.validate(cir.memory());
  switch (scheme) {
    case Scheme::LinearFse:
      return std::make_unique<LinearReceiver>(design_linear_fse(cir, eta, params.half_window), params.threshold, -1);
    case Scheme::SymbolRate:
      return std::make_unique<LinearReceiver>(design_symbol_rate_eq(cir, eta, params.half_window), params.threshold,
                                              cir.peak_sample());
    case Scheme::Dfe:
      return std::make_unique<DfeReceiver>(design_dfe(cir, eta, params.ff_lookahead, params.fb_taps),
                                           params.threshold);
    case Scheme::MatchedFilter:
      return std::make_unique<MatchedFilterReceiver>(cir, eta);
    case Scheme::Mlsd:
      return std::make_unique<SequenceReceiver>(cir, eta, cir.memory());
    case Scheme::Dfsd:
      return std::make_unique<SequenceReceiver>(cir, eta, params.lambda);
  }
  throw InvalidArgument("unknown scheme");
}

std::pair<Bits, ObservationMatrix> simulate_frame(const ExperimentConfig& config, const CirTable& cir,
                                                  std::uint64_t frame_index, int frame_length) {
  auto rng = derive_stream(config.seed, {key_of(config.channel.molecules), frame_index});
  Bits bits = generate_bits(frame_length, rng);
  auto obs = simulate_observations(cir, bits, config.channel.eta, rng, config.receiver.lead_rows(),
                                   config.receiver.trail_rows());
  return {std::move(bits), std::move(obs)};
}

FrameTally count_errors_serial(const ExperimentConfig& config, const CirTable& cir,
                               std::span<const Receiver* const> receivers) {
  FrameTally tally = make_tally(config, receivers.size());
  for (std::uint64_t f = 0; f < tally.frames; ++f) {
    const auto [bits, obs] = simulate_frame(config, cir, f, frame_length_of(config, f));
    for (std::size_t r = 0; r < receivers.size(); ++r)
      tally.errors[r] += count_frame_errors(bits, receivers[r]->detect(obs));
  }
  return tally;
}

FrameTally count_errors(const ExperimentConfig& config, const CirTable& cir,
                        std::span<const Receiver* const> receivers) {
  FrameTally tally = make_tally(config, receivers.size());
  const std::size_t R = receivers.size();
  std::vector<std::uint64_t> per_frame(tally.frames * R, 0);
  std::exception_ptr failure;
  const auto frames = static_cast<std::int64_t>(tally.frames);

#pragma omp parallel for schedule(dynamic, 4) num_threads(config.workers)
  for (std::int64_t f = 0; f < frames; ++f) {
    try {
      const auto uf = static_cast<std::uint64_t>(f);
      const auto [bits, obs] = simulate_frame(config, cir, uf, frame_length_of(config, uf));
      for (std::size_t r = 0; r < R; ++r) per_frame[uf * R + r] = count_frame_errors(bits, receivers[r]->detect(obs));
    } catch (...) {
#pragma omp critical(mcfse_frame_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  for (std::uint64_t f = 0; f < tally.frames; ++f)
    for (std::size_t r = 0; r < R; ++r) tally.errors[r] += per_frame[f * R + r];
  return tally;
}

namespace {

BerReport make_report(const ExperimentConfig& config, Scheme scheme, std::uint64_t bits, std::uint64_t errors,
                      double seconds) {
  BerReport report;
  report.scheme = scheme;
  report.molecules = config.channel.molecules;
  report.bits = bits;
  report.errors = errors;
  report.ber = static_cast<double>(errors) / static_cast<double>(bits);
  std::tie(report.ci_low, report.ci_high) = wilson_ci(errors, bits);
  report.wall_time_s = seconds;
  report.seed = config.seed;
  return report;
}

// Runs every scheme of `config` at its channel.molecules value on shared frames.
std::vector<BerReport> run_schemes(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<BerReport> reports;
  const auto cir = build_cir_table(config.channel);

  std::vector<std::unique_ptr<Receiver>> owned;
  std::vector<const Receiver*> active;
  std::vector<Scheme> active_schemes;
  for (Scheme scheme : config.schemes) {
    try {
      owned.push_back(make_receiver(scheme, cir, config.channel.eta, config.receiver));
      active.push_back(owned.back().get());
      active_schemes.push_back(scheme);
    } catch (const std::exception& e) {
      BerReport failed;
      failed.scheme = scheme;
      failed.molecules = config.channel.molecules;
      failed.seed = config.seed;
      failed.failure = e.what();
      reports.push_back(failed);
    }
  }
  if (!active.empty()) {
    const auto tally = count_errors(config, cir, active);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (std::size_t r = 0; r < active.size(); ++r)
      reports.push_back(make_report(config, active_schemes[r], tally.bits, tally.errors[r], seconds));
  }
  // Report in configured scheme order.
  std::vector<BerReport> ordered;
  for (Scheme scheme : config.schemes)
    for (const auto& r : reports)
      if (r.scheme == scheme) ordered.push_back(r);
  return ordered;
}

}  // namespace

BerReport run_point(const ExperimentConfig& config, Scheme scheme, double molecules) {
  ExperimentConfig point = config;
  point.channel.molecules = molecules;
  point.schemes = {scheme};
  point.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto cir = build_cir_table(point.channel);
  const auto receiver = make_receiver(scheme, cir, point.channel.eta, point.receiver);
  const Receiver* active[] = {receiver.get()};
  const auto tally = count_errors(point, cir, active);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return make_report(point, scheme, tally.bits, tally.errors[0], seconds);
}

std::vector<BerReport> run_sweep(const ExperimentConfig& config) {
  config.validate();
  std::vector<Scheme> unique;
  for (Scheme s : config.schemes)
    if (std::find(unique.begin(), unique.end(), s) == unique.end()) unique.push_back(s);

  std::vector<BerReport> out;
  for (double a : config.molecules) {
    ExperimentConfig point = config;
    point.channel.molecules = a;
    point.schemes = unique;
    std::vector<BerReport> reports;
    try {
      reports = run_schemes(point);
    } catch (const std::exception& e) {
      for (Scheme s : unique) {
        BerReport failed;
        failed.scheme = s;
        failed.molecules = a;
        failed.seed = config.seed;
        failed.failure = e.what();
        reports.push_back(failed);
      }
    }
    out.insert(out.end(), reports.begin(), reports.end());
  }
  return out;
}

}  // namespace mcfse
