#include "mcfse/channel.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

#include "mcfse/errors.hpp"

namespace mcfse {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw InvalidArgument(what);
}

// ln of the impulse response without the amplitude A*V/(4 pi D)^{3/2}.
double log_shape(const ChannelParams& p, double t) {
  const double along = p.distance - p.flow_parallel * t;
  const double across = p.flow_perpendicular * t;
  return -1.5 * std::log(t) - (along * along + across * across) / (4.0 * p.diffusion * t);
}

constexpr int kMaxPatternMemory = 16;

}  // namespace

void ChannelParams::validate() const {
  require(std::isfinite(diffusion) && diffusion > 0.0, "diffusion coefficient must be > 0");
  require(std::isfinite(distance) && distance > 0.0, "distance must be > 0");
  require(std::isfinite(rx_radius) && rx_radius > 0.0, "receiver radius must be > 0");
  require(rx_radius < distance, "receiver radius must be smaller than the distance");
  require(std::isfinite(flow_parallel) && std::isfinite(flow_perpendicular), "flow must be finite");
  require(std::isfinite(molecules) && molecules >= 0.0, "molecule count must be >= 0");
  require(std::isfinite(eta) && eta >= 0.0, "eta must be >= 0");
  require(samples_per_symbol >= 1, "samples per symbol must be >= 1");
  require(memory >= 1, "channel memory must be >= 1");
  require(std::isfinite(beta) && beta > 0.0, "beta must be > 0");
  require(frame_length >= 1, "frame length must be >= 1");
}

double ChannelParams::rx_volume() const {
  return 4.0 / 3.0 * std::numbers::pi * rx_radius * rx_radius * rx_radius;
}

double cir_value(const ChannelParams& p, double elapsed) {
  if (!std::isfinite(elapsed) || elapsed <= 0.0)
    throw InvalidArgument("impulse response needs a finite elapsed time > 0");
  const double spread = 4.0 * std::numbers::pi * p.diffusion * elapsed;
  const double along = p.distance - p.flow_parallel * elapsed;
  const double across = p.flow_perpendicular * elapsed;
  return p.molecules * p.rx_volume() / (spread * std::sqrt(spread)) *
         std::exp(-(along * along + across * across) / (4.0 * p.diffusion * elapsed));
}

double find_t_peak(const ChannelParams& p) {
  constexpr double lo = 1e-9;
  constexpr double hi = 1e3;
  constexpr double ratio = 1.05;

  // Coarse geometric scan for the bracket.
  std::vector<double> grid;
  for (double t = lo; t <= hi; t *= ratio) grid.push_back(t);
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = log_shape(p, grid[i]);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  if (!std::isfinite(best_value) || best == 0 || best + 1 >= grid.size())
    throw SearchFailure("could not bracket the impulse-response maximum in [1e-9 s, 1e3 s]");

  // Golden-section refinement on [grid[best-1], grid[best+1]].
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = grid[best - 1];
  double b = grid[best + 1];
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = log_shape(p, c);
  double fd = log_shape(p, d);
  while (b - a > 1e-10 * 0.5 * (a + b)) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = log_shape(p, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = log_shape(p, d);
    }
  }
  return 0.5 * (a + b);
}

int CirTable::peak_sample() const {
  int best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int m = 0; m < samples(); ++m) {
    const double gap = std::abs((m + 1) * sample_interval - t_peak);
    if (gap < best_gap) {
      best_gap = gap;
      best = m;
    }
  }
  return best;
}

CirTable build_cir_table(const ChannelParams& p) {
  p.validate();
  CirTable cir;
  cir.t_peak = find_t_peak(p);
  cir.symbol_time = p.beta * cir.t_peak;
  cir.sample_interval = cir.symbol_time / p.samples_per_symbol;
  cir.h.resize(p.memory, p.samples_per_symbol);
  for (int l = 0; l < p.memory; ++l)
    for (int m = 0; m < p.samples_per_symbol; ++m) cir.h(l, m) = cir_value(p, cir.elapsed(l, m));
  return cir;
}

double mean_rate(const CirTable& cir, std::span<const std::uint8_t> bits, double eta, std::int64_t k,
                 int m) {
  if (m < 0 || m >= cir.samples()) throw InvalidArgument("sample index out of range");
  const auto n = static_cast<std::int64_t>(bits.size());
  double rate = 0.0;
  for (int l = 0; l < cir.memory(); ++l) {
    const std::int64_t j = k - l;
    if (j >= 0 && j < n && bits[static_cast<std::size_t>(j)]) rate += cir.h(l, m);
  }
  return rate + eta;
}

ObservationMatrix::ObservationMatrix(int frame, int samples, int lead, int trail)
    : frame_(frame), samples_(samples), lead_(lead), trail_(trail) {
  if (frame < 0 || samples < 1 || lead < 0 || trail < 0)
    throw InvalidArgument("invalid observation matrix shape");
  counts_.assign(static_cast<std::size_t>(lead + frame + trail) * samples, 0);
}

std::size_t ObservationMatrix::offset(std::int64_t k, int m) const {
  if (!has_row(k) || m < 0 || m >= samples_) throw InvalidArgument("observation index out of range");
  return static_cast<std::size_t>(k + lead_) * samples_ + m;
}

std::int32_t& ObservationMatrix::at(std::int64_t k, int m) { return counts_[offset(k, m)]; }
std::int32_t ObservationMatrix::at(std::int64_t k, int m) const { return counts_[offset(k, m)]; }

std::span<const std::int32_t> ObservationMatrix::row(std::int64_t k) const {
  return {counts_.data() + offset(k, 0), static_cast<std::size_t>(samples_)};
}

Bits generate_bits(int length, Rng& rng) {
  if (length < 1) throw InvalidArgument("bit sequence length must be >= 1");
  Bits bits(static_cast<std::size_t>(length));
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng() >> 63);
  return bits;
}

ObservationMatrix simulate_observations(const CirTable& cir, std::span<const std::uint8_t> bits,
                                        double eta, Rng& rng, int lead, int trail) {
  const int L = cir.memory();
  const int M = cir.samples();
  const auto K = static_cast<int>(bits.size());
  ObservationMatrix obs(K, M, lead, trail);
  PoissonSampler poisson;

  auto store = [&](std::int64_t k, int m, std::int64_t draw) {
    if (draw > std::numeric_limits<std::int32_t>::max()) throw NumericalError("count overflow");
    obs.at(k, m) = static_cast<std::int32_t>(draw);
  };

  if (L > kMaxPatternMemory) {
    for (std::int64_t k = obs.first_row(); k < obs.end_row(); ++k)
      for (int m = 0; m < M; ++m) store(k, m, poisson(rng, mean_rate(cir, bits, eta, k, m)));
    return obs;
  }

  // Rates depend only on the last L bits, so precompute one Poisson parameter
  // per (pattern, sample). Bit l of a pattern is the symbol l steps back.
  const std::size_t patterns = std::size_t{1} << L;
  std::vector<std::optional<PoissonSampler::param_type>> params(patterns * M);
  for (std::size_t p = 0; p < patterns; ++p) {
    for (int m = 0; m < M; ++m) {
      double rate = 0.0;
      for (int l = 0; l < L; ++l)
        if ((p >> l) & 1U) rate += cir.h(l, m);
      rate += eta;
      if (!std::isfinite(rate)) throw NumericalError("non-finite Poisson rate");
      if (rate > 0.0) params[p * M + m] = PoissonSampler::param(rate);
    }
  }

  const std::size_t mask = patterns - 1;
  std::size_t pattern = 0;
  for (std::int64_t k = obs.first_row(); k < obs.end_row(); ++k) {
    const bool on = k >= 0 && k < K && bits[static_cast<std::size_t>(k)];
    pattern = ((pattern << 1) | (on ? 1U : 0U)) & mask;
    for (int m = 0; m < M; ++m) {
      const auto& param = params[pattern * M + m];
      store(k, m, param ? poisson(rng, *param) : 0);
    }
  }
  return obs;
}

}  // namespace mcfse
