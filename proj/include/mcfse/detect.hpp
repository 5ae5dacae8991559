#pragma once

#include <cstdint>

#include "mcfse/channel.hpp"

namespace mcfse {

/// Symbol-by-symbol decision: 1 iff v >= gamma.
inline std::uint8_t threshold_detect(double v, double gamma = 0.5) { return v >= gamma ? 1 : 0; }

/// ln(g!) for g >= 0.
double log_factorial(std::int64_t g);

/// ln P(G = g) for G ~ Poisson(mu). mu = 0 gives 0 for g = 0 and -inf otherwise.
double poisson_log_pmf(std::int64_t g, double mu);

/// Reduced-state trellis: states are the last (lambda - 1) hypothesized
/// symbols; the remaining memory - lambda taps come from each state's survivor.
struct TrellisConfig {
  int memory = 1;
  int lambda = 1;

  void validate() const;
  std::size_t states() const { return std::size_t{1} << (lambda - 1); }
};

struct DecisionSequence {
  Bits bits;
  double log_likelihood = 0.0;  // natural log, over symbols 0..K-1
};

/// The sequence-detection objective: sum of Poisson log-likelihoods of all
/// in-frame samples given the hypothesized bits (silence before the frame).
double sequence_log_likelihood(const ObservationMatrix& obs, const CirTable& cir, double eta,
                               std::span<const std::uint8_t> bits);

/// Maximum-likelihood sequence detection over the full 2^(L-1)-state trellis.
/// The trellis starts in the all-zero state; the best final state wins.
DecisionSequence mlsd_viterbi(const ObservationMatrix& obs, const CirTable& cir, double eta);

/// Decision-feedback sequence detection with 2^(lambda-1) states and
/// per-survivor feedback of the older symbols.
DecisionSequence dfsd_viterbi(const ObservationMatrix& obs, const CirTable& cir, double eta, int lambda);

/// Brute force over all 2^K sequences (K <= 20). Exact ties resolve to the
/// lexicographically smallest sequence.
DecisionSequence exhaustive_mlsd(const ObservationMatrix& obs, const CirTable& cir, double eta);

inline constexpr int kMaxExhaustiveLength = 20;

}  // namespace mcfse
