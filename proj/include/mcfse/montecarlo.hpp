#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcfse/channel.hpp"

namespace mcfse {

enum class Scheme { LinearFse, Dfe, SymbolRate, MatchedFilter, Mlsd, Dfsd };

std::string_view scheme_name(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);
const std::vector<Scheme>& all_schemes();

/// True for the schemes whose BER has a closed-form Gaussian approximation.
bool is_linear(Scheme scheme);

/// Receiver parameters shared by every scheme in an experiment.
struct SchemeParams {
  int half_window = 1;    // T, centered equalizers
  int ff_lookahead = 1;   // L1, DFE feed-forward span after s_k
  int fb_taps = 3;        // L2, DFE feedback length
  int lambda = 2;         // DFSD trellis memory
  double threshold = 0.5; // equalizer decision threshold

  void validate(int memory) const;

  /// Observation rows needed before the frame / after it by any scheme.
  int lead_rows() const { return half_window; }
  int trail_rows() const { return half_window > ff_lookahead ? half_window : ff_lookahead; }
};

struct ExperimentConfig {
  ChannelParams channel;
  std::vector<Scheme> schemes{Scheme::LinearFse};
  SchemeParams receiver;
  std::vector<double> molecules{1e4};  // A values to sweep
  std::uint64_t target_bits = 10'000'000;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

struct BerReport {
  Scheme scheme = Scheme::LinearFse;
  double molecules = 0.0;
  std::uint64_t bits = 0;
  std::uint64_t errors = 0;
  double ber = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  std::string failure;  // empty on success

  bool ok() const { return failure.empty(); }
};

/// Wilson score interval for a binomial proportion.
std::pair<double, double> wilson_ci(std::uint64_t errors, std::uint64_t n, double level = 0.95);

/// A complete receiver chain for one frame. Immutable once built; detect()
/// may be called concurrently.
class Receiver {
 public:
  virtual ~Receiver() = default;
  virtual Bits detect(const ObservationMatrix& obs) const = 0;
};

/// Designs the scheme's equalizer (if any) for this channel.
std::unique_ptr<Receiver> make_receiver(Scheme scheme, const CirTable& cir, double eta, const SchemeParams& params);

/// Error counts per receiver over all frames of one A value.
struct FrameTally {
  std::uint64_t bits = 0;
  std::uint64_t frames = 0;
  std::vector<std::uint64_t> errors;
};

/// Frame f of an A value always uses the stream derived from (seed, A, f),
/// so every scheme sees the same bits and noise and results do not depend
/// on the worker count. OpenMP-parallel over frames.
FrameTally count_errors(const ExperimentConfig& config, const CirTable& cir,
                        std::span<const Receiver* const> receivers);

/// Single-threaded reference for count_errors; identical result.
FrameTally count_errors_serial(const ExperimentConfig& config, const CirTable& cir,
                               std::span<const Receiver* const> receivers);

/// The transmitted bits and observations of one frame, as the kernels see them.
std::pair<Bits, ObservationMatrix> simulate_frame(const ExperimentConfig& config, const CirTable& cir,
                                                  std::uint64_t frame_index, int frame_length);

BerReport run_point(const ExperimentConfig& config, Scheme scheme, double molecules);

/// All configured schemes at every A value. Schemes at one A share frames.
/// Failures are recorded in BerReport::failure and the sweep continues.
std::vector<BerReport> run_sweep(const ExperimentConfig& config);

}  // namespace mcfse
