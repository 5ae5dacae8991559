#include "mcfse/detect.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "mcfse/errors.hpp"

namespace mcfse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::int64_t kFactorialTable = 1 << 16;
constexpr int kMaxTrellisMemory = 20;

const std::vector<double>& factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kFactorialTable);
    for (std::int64_t g = 0; g < kFactorialTable; ++g) t[g] = std::lgamma(static_cast<double>(g) + 1.0);
    return t;
  }();
  return table;
}

// Per-pattern Poisson rates for one channel. Pattern bit l is the symbol l
// steps before the current one.
class PatternModel {
 public:
  PatternModel(const CirTable& cir, double eta) : samples_(cir.samples()) {
    const int L = cir.memory();
    if (L > kMaxTrellisMemory) throw InvalidArgument("channel memory too large for trellis detection");
    const std::size_t patterns = std::size_t{1} << L;
    rate_.resize(patterns * samples_);
    log_rate_.resize(patterns * samples_);
    for (std::size_t p = 0; p < patterns; ++p) {
      for (int m = 0; m < samples_; ++m) {
        double rate = 0.0;
        for (int l = 0; l < L; ++l)
          if ((p >> l) & 1U) rate += cir.h(l, m);
        rate += eta;
        rate_[p * samples_ + m] = rate;
        log_rate_[p * samples_ + m] = rate > 0.0 ? std::log(rate) : kNegInf;
      }
    }
  }

  // Sum over the row of ln p(g | pattern), given the row's sum of ln(g!).
  double branch(std::size_t pattern, std::span<const std::int32_t> row, double log_fact) const {
    const double* rate = &rate_[pattern * samples_];
    const double* log_rate = &log_rate_[pattern * samples_];
    double acc = -log_fact;
    for (int m = 0; m < samples_; ++m) {
      const std::int32_t g = row[static_cast<std::size_t>(m)];
      if (g == 0) {
        acc -= rate[m];
      } else {
        if (rate[m] == 0.0) return kNegInf;
        acc += g * log_rate[m] - rate[m];
      }
    }
    return acc;
  }

 private:
  int samples_;
  std::vector<double> rate_;
  std::vector<double> log_rate_;
};

double row_log_factorial(std::span<const std::int32_t> row) {
  double acc = 0.0;
  for (std::int32_t g : row) acc += log_factorial(g);
  return acc;
}

}  // namespace

double log_factorial(std::int64_t g) {
  if (g < 0) throw InvalidArgument("factorial of a negative count");
  if (g < kFactorialTable) return factorial_table()[static_cast<std::size_t>(g)];
  // Stirling series; the first omitted term is below 1e-35 here.
  const double n = static_cast<double>(g);
  const double inv = 1.0 / n;
  const double inv2 = inv * inv;
  return n * std::log(n) - n + 0.5 * std::log(2.0 * std::numbers::pi * n) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

double poisson_log_pmf(std::int64_t g, double mu) {
  if (g < 0) throw InvalidArgument("Poisson count must be >= 0");
  if (!(mu >= 0.0)) throw InvalidArgument("Poisson rate must be >= 0");
  if (mu == 0.0) return g == 0 ? 0.0 : kNegInf;
  if (g == 0) return -mu;
  return static_cast<double>(g) * std::log(mu) - mu - log_factorial(g);
}

void TrellisConfig::validate() const {
  if (memory < 1 || memory > kMaxTrellisMemory) throw InvalidArgument("trellis memory out of range");
  if (lambda < 1 || lambda > memory) throw InvalidArgument("trellis memory lambda must satisfy 1 <= lambda <= L");
}

double sequence_log_likelihood(const ObservationMatrix& obs, const CirTable& cir, double eta,
                               std::span<const std::uint8_t> bits) {
  if (static_cast<int>(bits.size()) != obs.frame()) throw InvalidArgument("sequence length does not match the frame");
  double total = 0.0;
  for (std::int64_t k = 0; k < obs.frame(); ++k)
    for (int m = 0; m < cir.samples(); ++m) total += poisson_log_pmf(obs.at(k, m), mean_rate(cir, bits, eta, k, m));
  return total;
}

DecisionSequence mlsd_viterbi(const ObservationMatrix& obs, const CirTable& cir, double eta) {
  const int L = cir.memory();
  TrellisConfig{L, L}.validate();
  if (obs.samples() != cir.samples()) throw InvalidArgument("observations and impulse response disagree on samples");
  const PatternModel model(cir, eta);
  const int K = obs.frame();
  const std::size_t S = std::size_t{1} << (L - 1);
  const std::size_t state_mask = S - 1;

  // State bit j holds s_{k-1-j}. Extending state st with bit b gives the
  // L-bit pattern (st << 1) | b whose low L-1 bits are the next state.
  std::vector<double> metric(S, kNegInf), next(S);
  metric[0] = 0.0;
  std::vector<std::uint32_t> chosen(static_cast<std::size_t>(K) * S);

  for (int k = 0; k < K; ++k) {
    const auto row = obs.row(k);
    const double log_fact = row_log_factorial(row);
    for (std::size_t ns = 0; ns < S; ++ns) {
      double best = kNegInf;
      std::size_t best_pattern = ns;
      for (std::size_t oldest = 0; oldest < 2; ++oldest) {
        const std::size_t pattern = ns | (oldest << (L - 1));
        const double prev = metric[pattern >> 1];
        if (prev == kNegInf) continue;
        const double m = prev + model.branch(pattern, row, log_fact);
        if (m > best) {
          best = m;
          best_pattern = pattern;
        }
      }
      next[ns] = best;
      chosen[static_cast<std::size_t>(k) * S + ns] = static_cast<std::uint32_t>(best_pattern);
    }
    metric.swap(next);
  }

  std::size_t state = 0;
  for (std::size_t s = 1; s < S; ++s)
    if (metric[s] > metric[state]) state = s;

  DecisionSequence out;
  out.log_likelihood = metric[state];
  out.bits.assign(static_cast<std::size_t>(K), 0);
  for (int k = K - 1; k >= 0; --k) {
    const std::size_t pattern = chosen[static_cast<std::size_t>(k) * S + state];
    out.bits[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(pattern & 1U);
    state = (pattern >> 1) & state_mask;
  }
  return out;
}

DecisionSequence dfsd_viterbi(const ObservationMatrix& obs, const CirTable& cir, double eta, int lambda) {
  const int L = cir.memory();
  const TrellisConfig config{L, lambda};
  config.validate();
  if (obs.samples() != cir.samples()) throw InvalidArgument("observations and impulse response disagree on samples");
  const PatternModel model(cir, eta);
  const int K = obs.frame();
  const std::size_t S = config.states();
  const std::size_t tail_mask = (std::size_t{1} << (L - lambda)) - 1;

  // Each state carries its survivor's older symbols s_{k-lambda} .. s_{k-L+1}
  // (bit t = s_{k-lambda-t}). The full L-bit register is
  // b | state << 1 | tail << lambda.
  struct Survivor {
    double metric = kNegInf;
    std::size_t tail = 0;
  };
  std::vector<Survivor> current(S), next(S);
  current[0].metric = 0.0;

  struct Back {
    std::uint32_t prev;
    std::uint8_t bit;
  };
  std::vector<Back> back(static_cast<std::size_t>(K) * S);

  for (int k = 0; k < K; ++k) {
    const auto row = obs.row(k);
    const double log_fact = row_log_factorial(row);
    for (std::size_t ns = 0; ns < S; ++ns) {
      Survivor best;
      Back best_back{0, 0};
      for (std::size_t c = 0; c < 2; ++c) {
        // Predecessors of ns: for lambda = 1 the single state with either bit,
        // otherwise the two states differing in their oldest symbol.
        const std::size_t prev = lambda == 1 ? 0 : (ns >> 1) | (c << (lambda - 2));
        const std::size_t bit = lambda == 1 ? c : (ns & 1U);
        const Survivor& from = current[prev];
        if (from.metric == kNegInf) continue;
        const std::size_t reg = bit | (prev << 1) | (from.tail << lambda);
        const double m = from.metric + model.branch(reg, row, log_fact);
        if (m > best.metric) {
          best.metric = m;
          best.tail = (reg >> (lambda - 1)) & tail_mask;
          best_back = {static_cast<std::uint32_t>(prev), static_cast<std::uint8_t>(bit)};
        }
      }
      next[ns] = best;
      back[static_cast<std::size_t>(k) * S + ns] = best_back;
    }
    current.swap(next);
  }

  std::size_t state = 0;
  for (std::size_t s = 1; s < S; ++s)
    if (current[s].metric > current[state].metric) state = s;

  DecisionSequence out;
  out.log_likelihood = current[state].metric;
  out.bits.assign(static_cast<std::size_t>(K), 0);
  for (int k = K - 1; k >= 0; --k) {
    const Back& b = back[static_cast<std::size_t>(k) * S + state];
    out.bits[static_cast<std::size_t>(k)] = b.bit;
    state = b.prev;
  }
  return out;
}

DecisionSequence exhaustive_mlsd(const ObservationMatrix& obs, const CirTable& cir, double eta) {
  const int K = obs.frame();
  if (K < 1 || K > kMaxExhaustiveLength) throw InvalidArgument("exhaustive search limited to 1 <= K <= 20");
  DecisionSequence best;
  best.log_likelihood = kNegInf;
  Bits bits(static_cast<std::size_t>(K));
  const std::uint64_t count = std::uint64_t{1} << K;
  bool found = false;
  for (std::uint64_t x = 0; x < count; ++x) {
    // The first symbol is the most significant bit: lexicographic order.
    for (int k = 0; k < K; ++k) bits[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>((x >> (K - 1 - k)) & 1U);
    const double ll = sequence_log_likelihood(obs, cir, eta, bits);
    if (!found || ll > best.log_likelihood) {
      best.bits = bits;
      best.log_likelihood = ll;
      found = true;
    }
  }
  return best;
}

}  // namespace mcfse
