#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mcfse/random.hpp"

namespace mcfse {

/// Diffusion-with-flow link between a point release and a passive spherical
/// receiver, plus the on-off keying protocol parameters.
///
/// Defaults are the reference parameter set; `eta` (background count per
/// sample) and `molecules` have no reference value and are set by callers.
struct ChannelParams {
  double diffusion = 4.3e-10;         // m^2/s
  double distance = 5e-7;             // transmitter to receiver centre, m
  double rx_radius = 5e-8;            // m
  double flow_parallel = 3e-3;        // m/s, along the link
  double flow_perpendicular = 3e-3;   // m/s
  double molecules = 1e4;             // released per "1"
  double eta = 1.0;                   // expected external count per sample
  int samples_per_symbol = 3;         // M
  int memory = 5;                     // L, symbols
  double beta = 1.5;                  // symbol time / peak time
  int frame_length = 1000;            // K, symbols

  /// Throws InvalidArgument if any field is outside its domain.
  void validate() const;

  double rx_volume() const;
};

/// Expected count at the receiver a time `elapsed` (s) after one release.
double cir_value(const ChannelParams& params, double elapsed);

/// Time of the impulse-response maximum. Bracketed by a geometric scan over
/// [1e-9 s, 1e3 s] and refined by golden-section search to relative 1e-10.
/// Independent of `molecules`.
double find_t_peak(const ChannelParams& params);

/// Expected counts on the sampling grid.
///
/// Indexing is zero-based: `h(l, m)` is the mean count seen at sample m
/// (taken (m+1)*sample_interval into a symbol) from a release l symbols
/// earlier, i.e. at elapsed time l*symbol_time + (m+1)*sample_interval.
struct CirTable {
  Eigen::MatrixXd h;  // memory() x samples()
  double t_peak = 0.0;
  double symbol_time = 0.0;
  double sample_interval = 0.0;

  int memory() const { return static_cast<int>(h.rows()); }
  int samples() const { return static_cast<int>(h.cols()); }

  /// Sampling instant of tap (l, m) relative to its release.
  double elapsed(int l, int m) const { return l * symbol_time + (m + 1) * sample_interval; }

  /// Sample column nearest to t_peak inside one symbol interval.
  int peak_sample() const;
};

CirTable build_cir_table(const ChannelParams& params);

using Bits = std::vector<std::uint8_t>;

/// Poisson rate of sample m of symbol k (both zero-based). Symbols outside
/// [0, bits.size()) are silent.
double mean_rate(const CirTable& cir, std::span<const std::uint8_t> bits, double eta, std::int64_t k,
                 int m);

/// Received counts for one frame, with `lead` silent rows before symbol 0
/// and `trail` rows after the last symbol (bits past the frame are 0).
class ObservationMatrix {
 public:
  ObservationMatrix() = default;
  ObservationMatrix(int frame, int samples, int lead, int trail);

  int frame() const { return frame_; }
  int samples() const { return samples_; }
  int lead() const { return lead_; }
  int trail() const { return trail_; }

  /// First and one-past-last stored symbol index.
  std::int64_t first_row() const { return -lead_; }
  std::int64_t end_row() const { return static_cast<std::int64_t>(frame_) + trail_; }

  bool has_row(std::int64_t k) const { return k >= first_row() && k < end_row(); }

  std::int32_t& at(std::int64_t k, int m);
  std::int32_t at(std::int64_t k, int m) const;

  std::span<const std::int32_t> row(std::int64_t k) const;

 private:
  std::size_t offset(std::int64_t k, int m) const;

  int frame_ = 0;
  int samples_ = 0;
  int lead_ = 0;
  int trail_ = 0;
  std::vector<std::int32_t> counts_;
};

/// I.i.d. equiprobable bits.
Bits generate_bits(int length, Rng& rng);

/// Draws every g(k, m) independently from Poisson(mean_rate(k, m)).
ObservationMatrix simulate_observations(const CirTable& cir, std::span<const std::uint8_t> bits,
                                        double eta, Rng& rng, int lead = 0, int trail = 0);

}  // namespace mcfse
