#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "mcfse/channel.hpp"

namespace mcfse {

enum class WindowKind { Centered, Causal };

/// Layout of an equalizer input vector: `rows()` consecutive symbol
/// intervals with `samples` observations each, flattened row-major so that
/// element i holds sample (i % samples) of row (i / samples).
///
/// A centered window of half-width T spans symbols k-T .. k+T; a causal
/// window with look-ahead L1 spans symbols k .. k+L1.
struct SampleIndexMap {
  WindowKind kind = WindowKind::Centered;
  int span = 0;  // T for centered, L1 for causal
  int samples = 1;

  static SampleIndexMap centered(int half_width, int samples);
  static SampleIndexMap causal(int lookahead, int samples);

  int rows() const { return kind == WindowKind::Centered ? 2 * span + 1 : span + 1; }
  int size() const { return rows() * samples; }
  int row_of(int i) const { return i / samples; }
  int sample_of(int i) const { return i % samples; }
  int index(int row, int sample) const { return row * samples + sample; }

  /// Symbol offset of a window row relative to the detected symbol k.
  int symbol_offset(int row) const { return kind == WindowKind::Centered ? row - span : row; }
  /// Number of rows before / after the detected symbol that must be observed.
  int lookback() const { return kind == WindowKind::Centered ? span : 0; }
  int lookahead() const { return span; }
};

/// Mean and covariance of the received window vector q_k for i.i.d.
/// equiprobable bits, and its cross-covariance with s_k.
struct SecondOrderStats {
  SampleIndexMap map;
  Eigen::MatrixXd gamma;   // Cov(q_k)
  Eigen::VectorXd xi;      // Cov(q_k, s_k)
  Eigen::VectorXd mean_q;  // E{q_k}
  Eigen::MatrixXd H;       // rows() x samples, xi = vec(H^T) / 4
};

SecondOrderStats build_stats(const CirTable& cir, double eta, const SampleIndexMap& map);

struct LinearTaps {
  SampleIndexMap map;
  Eigen::VectorXd b;
  double b_c = 0.0;
  double mse = 0.0;  // analytical MMSE, 1/4 - xi^T b
  double condition = 0.0;
};

struct DfeTaps {
  SampleIndexMap map;  // causal feed-forward window
  Eigen::VectorXd b;   // feed-forward
  Eigen::VectorXd a;   // feedback, a[0] weights the decision for s_{k-1}
  double b_c = 0.0;
  double mse = 0.0;    // genie-aided MMSE
  double condition = 0.0;
};

/// MMSE linear equalizer over a centered window of half-width `half_window`.
LinearTaps design_linear_fse(const CirTable& cir, double eta, int half_window);

double linear_fse_output(const LinearTaps& taps, std::span<const double> q);

/// Sum over feedback delays tau = 1..fb_taps of outer products of the
/// post-cursor responses H^(tau)(j, m) = h(tau + j, m) / 4.
Eigen::MatrixXd build_h_sq(const CirTable& cir, int lookahead, int fb_taps);

/// MMSE decision-feedback equalizer, designed assuming correct past decisions.
DfeTaps design_dfe(const CirTable& cir, double eta, int lookahead, int fb_taps);

/// `past` holds the previous decisions, most recent first.
double dfe_output(const DfeTaps& taps, std::span<const double> q, std::span<const std::uint8_t> past);

/// The impulse response restricted to the single sample nearest t_peak.
CirTable symbol_rate_slice(const CirTable& cir);

/// Linear MMSE equalizer on one sample per symbol (see symbol_rate_slice).
LinearTaps design_symbol_rate_eq(const CirTable& cir, double eta, int half_window);

struct MatchedFilterOutput {
  double v = 0.0;
  double threshold = 0.0;
};

/// Correlates one symbol's samples with the first-tap response. The threshold
/// is the midpoint of the two conditional means under average ISI.
MatchedFilterOutput matched_filter(const CirTable& cir, double eta, std::span<const std::int32_t> row);

double matched_filter_threshold(const CirTable& cir, double eta);

/// Collects q_k for symbol k from `obs`. With `column` set, only that sample
/// of each row is taken (map.samples must then be 1).
Eigen::VectorXd gather_window(const ObservationMatrix& obs, const SampleIndexMap& map, std::int64_t k,
                              int column = -1);

}  // namespace mcfse
