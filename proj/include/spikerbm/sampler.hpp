#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "spikerbm/rbm.hpp"

namespace spikerbm {

// Leak firing probability. `half` is the idealized 0.5; `hardware` is the
// substrate's |lambda| >= rho rule with an 8-bit rho, i.e. 129/256 for lambda = 128.
enum class LeakProbability { half, hardware };

const char* to_string(LeakProbability mode);
LeakProbability leak_probability_from_string(const std::string& s);

// Digital neuron logistic sampler: for `window` ticks the potential gains
// `leak` with probability p (clipped at the saturation), then is compared with
// a uniform threshold in [threshold, threshold + 2^threshold_bits - 1].
struct SamplerConfig {
  int scale = 50;
  int window = 8;
  int threshold = 79;
  int threshold_bits = 9;
  int leak = 49;
  std::optional<int> saturation;  // defaults to threshold + threshold_range()
  LeakProbability leak_mode = LeakProbability::half;

  int threshold_range() const { return (1 << threshold_bits) - 1; }
  int top_threshold() const { return threshold + threshold_range(); }
  int saturation_potential() const { return saturation.value_or(top_threshold()); }
  double leak_probability() const;
  // Number of states of the potential chain: [-sat, +sat].
  int state_count() const { return 2 * saturation_potential() + 1; }
  void validate() const;
  std::string describe() const;
};

// Named presets reproducing the five reference configurations (scale 50).
struct NamedConfig {
  std::string name;
  SamplerConfig config;
};
std::vector<NamedConfig> preset_configs(LeakProbability mode = LeakProbability::half);
SamplerConfig preset_config(const std::string& name, LeakProbability mode = LeakProbability::half);

// Dense transition matrices over potentials [-sat, +sat]; row/col k is potential k - sat.
struct DtmcMatrices {
  int saturation = 0;
  Eigen::MatrixXd leak;
  Eigen::MatrixXd threshold;
  Eigen::MatrixXd coupled;  // leak * threshold
  Eigen::MatrixXd sample;   // coupled ^ window

  Index state(int potential) const { return Index(potential) + saturation; }
};

DtmcMatrices build_dtmc(const SamplerConfig& cfg);

// Spike probability as a function of the initial potential.
class SpikeProbabilityCurve {
 public:
  SpikeProbabilityCurve() = default;
  SpikeProbabilityCurve(int saturation, Eigen::VectorXd values)
      : saturation_(saturation), values_(std::move(values)) {}

  int saturation() const { return saturation_; }
  const Eigen::VectorXd& values() const { return values_; }
  // Potentials beyond the state range are clipped, mirroring a saturating membrane.
  double operator()(int potential) const {
    const int v = potential < -saturation_ ? -saturation_ : potential > saturation_ ? saturation_ : potential;
    return values_(Index(v) + saturation_);
  }

 private:
  int saturation_ = 0;
  Eigen::VectorXd values_;
};

// Computed with `window` sparse matrix-vector products; equals the last column
// of build_dtmc(cfg).sample without forming the dense power.
SpikeProbabilityCurve spike_probability_curve(const SamplerConfig& cfg);

// One tick-by-tick run of the sampling algorithm.
bool simulate_sampler(const SamplerConfig& cfg, int initial_potential, Rng& rng);

// Real drive x maps to potential round(x * scale).
inline int drive_to_potential(double x, int scale) { return round_half_away(x * scale); }

// Transition-operator shortcut: one uniform draw against the analytic curve.
class FastUnitSampler {
 public:
  FastUnitSampler(SpikeProbabilityCurve curve, int scale) : curve_(std::move(curve)), scale_(scale) {}
  explicit FastUnitSampler(const SamplerConfig& cfg)
      : curve_(spike_probability_curve(cfg)), scale_(cfg.scale) {}
  bool operator()(double x, Rng& rng) const {
    return uniform01(rng) < curve_(drive_to_potential(x, scale_));
  }
  const SpikeProbabilityCurve& curve() const { return curve_; }

 private:
  SpikeProbabilityCurve curve_;
  int scale_;
};

// Runs the tick-level algorithm for every unit update.
class TickUnitSampler {
 public:
  explicit TickUnitSampler(SamplerConfig cfg) : cfg_(std::move(cfg)) {}
  bool operator()(double x, Rng& rng) const {
    const int sat = cfg_.saturation_potential();
    int v = drive_to_potential(x, cfg_.scale);
    v = v < -sat ? -sat : v > sat ? sat : v;
    return simulate_sampler(cfg_, v, rng);
  }

 private:
  SamplerConfig cfg_;
};

struct IntInterval {
  int lo = 0;
  int hi = 0;
};

enum class ErrorReduction { mean, sum };

// Squared error of the curve against logistic(V / scale) over integer V in the
// domain, averaged (default) or summed.
double mse_vs_logistic(const SpikeProbabilityCurve& curve, int scale, IntInterval domain,
                       ErrorReduction reduction = ErrorReduction::mean);
inline IntInterval default_domain(int scale) { return {-6 * scale, 6 * scale}; }

struct IntRange {
  int lo = 0;
  int hi = 0;
  int step = 1;
};

struct SearchSpace {
  IntRange threshold;
  IntRange threshold_bits;
  IntRange leak;
};

struct FitOptions {
  std::optional<IntInterval> domain;     // default [-6s, 6s]
  double admissible_multiple = 5.0;      // require top threshold >= multiple * s
  LeakProbability leak_mode = LeakProbability::half;
  ErrorReduction reduction = ErrorReduction::mean;
};

struct FitResult {
  SamplerConfig config;
  double mse = 0.0;
  std::size_t evaluated = 0;
};

// Exhaustive grid search. Equal errors prefer fewer threshold bits, then a
// lower threshold, then a smaller leak.
FitResult fit_sampler(int scale, int window, const SearchSpace& space, const FitOptions& opts = {});

}  // namespace spikerbm
