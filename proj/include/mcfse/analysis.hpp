#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "mcfse/channel.hpp"
#include "mcfse/equalize.hpp"

namespace mcfse {

/// Symbols that influence the centered-window equalizer output for s_k:
/// element p is s_{k+T-p}, so element T is s_k and the last element is
/// s_{k-L-T+1}. Length 2T + L.
using SequenceWindow = Bits;

/// Conditional Poisson rates of the (2T+1) x M window given the sequence
/// window with s_k replaced by `alpha`. Row j is symbol k - T + j.
Eigen::MatrixXd build_nu(const CirTable& cir, double eta, int half_window, std::span<const std::uint8_t> window,
                         std::uint8_t alpha);

struct ConditionalMoments {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double var0 = 0.0;
  double var1 = 0.0;
};

/// Gaussian-approximation moments of v_k = b^T q + b_c when q has
/// independent Poisson entries with rates nu0 (s_k = 0) or nu1 (s_k = 1).
ConditionalMoments conditional_moments(const LinearTaps& taps, const Eigen::MatrixXd& nu0,
                                       const Eigen::MatrixXd& nu1);

/// Q(x) = P(N(0,1) > x).
double q_function(double x);

struct AnalyticalBer {
  double ber = 0.0;
  std::uint64_t windows = 0;  // interfering-symbol patterns visited
};

inline constexpr int kMaxAnalyticalWindow = 24;

/// Gaussian-approximation BER of a linear equalizer with threshold `gamma`,
/// averaged over all 2^(2T+L-1) interfering patterns and both values of s_k.
/// OpenMP-parallel over patterns with a fixed-order final sum.
AnalyticalBer analytical_ber_linear(const CirTable& cir, double eta, int half_window, double gamma = 0.5);

/// Single-threaded reference for analytical_ber_linear; bit-identical result.
AnalyticalBer analytical_ber_linear_serial(const CirTable& cir, double eta, int half_window, double gamma = 0.5);

}  // namespace mcfse
