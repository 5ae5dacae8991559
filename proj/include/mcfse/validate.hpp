#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcfse/channel.hpp"
#include "mcfse/equalize.hpp"
#include "mcfse/montecarlo.hpp"

namespace mcfse {

// Monte Carlo oracles. They only use the channel simulator and generic
// statistics, never the tap-design or trellis code they are used to check.

/// One equalizer input window with the symbol it should recover and the
/// `past` symbols before it (most recent first).
struct WindowDraw {
  std::span<const double> q;
  std::uint8_t symbol = 0;
  std::span<const std::uint8_t> past;
};

/// Draws `count` statistically independent windows in steady state (every
/// observed row has its full ISI history) and hands each to `visit`.
void for_each_window(const CirTable& cir, double eta, const SampleIndexMap& map, int past, std::uint64_t count,
                     Rng& rng, const std::function<void(const WindowDraw&)>& visit);

/// Streaming mean and covariance (divisor n - 1).
class CovarianceAccumulator {
 public:
  explicit CovarianceAccumulator(int dim);
  void add(std::span<const double> x);
  std::uint64_t count() const { return n_; }
  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;

 private:
  std::uint64_t n_ = 0;
  Eigen::VectorXd shift_, sum_;
  Eigen::MatrixXd outer_;
};

/// Streaming ordinary least squares y ~ x + intercept.
class RegressionAccumulator {
 public:
  explicit RegressionAccumulator(int dim);
  void add(std::span<const double> x, double y);

  struct Fit {
    Eigen::VectorXd coef;
    Eigen::VectorXd coef_se;
    double intercept = 0.0;
    double intercept_se = 0.0;
    double residual_variance = 0.0;
  };
  Fit fit() const;

 private:
  int dim_;
  std::uint64_t n_ = 0;
  Eigen::VectorXd shift_;
  Eigen::MatrixXd xtx_;
  Eigen::VectorXd xty_;
  double yty_ = 0.0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct ValidateOptions {
  std::uint64_t seed = 20240601;
  std::uint64_t windows = 1'000'000;
  int viterbi_trials = 300;
  int max_trial_length = 10;
  /// Negative control: inflate the off-diagonal covariance entries by 25%
  /// before comparing them with the Monte Carlo estimate.
  bool corrupt_gamma = false;
};

/// Oracle and property suite at the configured channel (`config.channel`,
/// first A value of `config.molecules` if any).
std::vector<CheckResult> run_validation(const ExperimentConfig& config, const ValidateOptions& options);

}  // namespace mcfse
