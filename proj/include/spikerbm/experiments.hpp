#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spikerbm/compiler.hpp"
#include "spikerbm/dataset.hpp"
#include "spikerbm/rbm.hpp"
#include "spikerbm/sampler.hpp"

namespace spikerbm {

inline constexpr const char* kCodeVersion = "spikerbm 1.0.0";

// One experiment's outputs: a config snapshot, CSV series and provenance.
// Written as <out_dir>/<id>/{config.json, *.csv, manifest.json}; nothing in it
// depends on wall-clock time, so equal configs give byte-identical directories.
struct ExperimentReport {
  std::string id;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> series;  // file name -> CSV text
  std::string model_hash;

  void add_csv(const std::string& name, std::string text) { series.emplace_back(name, std::move(text)); }
  const std::string& csv(const std::string& name) const;
  std::string manifest() const;
  std::filesystem::path write(const std::filesystem::path& out_dir) const;
};

nlohmann::json sampler_to_json(const SamplerConfig& c);
SamplerConfig sampler_from_json(const nlohmann::json& j);
const char* to_string(OcclusionGeometry g);
const char* to_string(HammingNormalization n);

// Missing model, dataset or other input a command needs. The CLI maps it to exit code 3.
struct MissingPrerequisite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Pattern completion.

enum class Backend { ideal, neural_fast, neural_tick, placed_substrate };

const char* to_string(Backend b);
Backend backend_from_string(const std::string& s);

struct ReconstructionConfig {
  Backend backend = Backend::neural_fast;
  SamplerConfig sampler = preset_config("G5");  // used by every backend except ideal
  CompileConfig compile;      // placed_substrate only; its sampler is replaced by `sampler`
  int n_samples = 50;
  bool clamp = true;          // re-impose known pixels every period, else only at the start
  OcclusionSpec occlusion;
  HammingNormalization normalization = HammingNormalization::all_pixels_over_known;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct ReconstructionResult {
  Eigen::MatrixXd hd;  // image x sample, sample k in column k - 1
  std::vector<std::vector<BinaryVector>> samples;  // only filled when requested
  Eigen::VectorXd mean_by_sample() const;
};

// Each image gets its own RNG stream derived from (seed, image index), so
// results do not depend on the thread count.
ReconstructionResult reconstruct(const Rbm& model, const Dataset& images, const ReconstructionConfig& cfg,
                                 bool keep_samples = false);

// First sample index (1-based) from which the series stays within `tolerance`
// (relative) of its settled level, the mean over its second half.
int convergence_index(const Eigen::VectorXd& series, double tolerance = 0.05);

ExperimentReport reconstruction_report(const Rbm& model, const Dataset& images, const ReconstructionConfig& cfg,
                                       const ReconstructionResult& r);

// ---------------------------------------------------------------------------
// Figure and table data.

struct FigureOptions {
  std::uint64_t seed = 1;
  LeakProbability leak_mode = LeakProbability::half;
  // fig4
  int fig4_trials = 2000;
  int fig4_stride = 10;
  // fig8 / fig9-kl
  int n_models = 100;
  int kl_nets = 10;
  int n_runs = 15;
  int chain_samples = 100000;
  std::vector<int> scales = {5, 10, 15, 20, 30, 50, 75, 100};
  int small_visible = 5;
  int small_hidden = 5;
  double small_weight_sd = 1.0;
  double small_bias_sd = 0.5;
  // fig15 / fig16 / table2
  const Rbm* model = nullptr;
  const Dataset* images = nullptr;
  std::vector<double> occlusion_levels = {0.10, 0.25, 0.35, 0.50};
  int n_samples = 50;
  SamplerConfig sampler = preset_config("G5");
  int accumulation = 32;
};

const std::vector<std::string>& figure_names();
ExperimentReport make_figure(const std::string& which, const FigureOptions& opt);

ExperimentReport figure_fig4(const FigureOptions& opt);
ExperimentReport figure_table1(const FigureOptions& opt);
ExperimentReport figure_fig8(const FigureOptions& opt);
ExperimentReport figure_fig9_kl(const FigureOptions& opt);
ExperimentReport figure_fig13(const FigureOptions& opt);
ExperimentReport figure_fig15(const FigureOptions& opt);
ExperimentReport figure_fig16(const FigureOptions& opt);
ExperimentReport figure_table2(const FigureOptions& opt);

// Sum of squared error against the logistic over [-6s, 6s], the figure used
// when ranking the reference configurations.
double table1_error(const SamplerConfig& cfg);

// KL(empirical visible histogram || exact visible marginal of `reference`)
// for a Gibbs chain run on the quantized model with the fast sampler.
double chain_kl(const Rbm& reference, const SamplerConfig& cfg, int n_samples, std::uint64_t seed);

// The three compile configurations compared in the resource table.
struct ResourceCase {
  std::string name;
  std::string strategies;
  CompileConfig config;
};
std::vector<ResourceCase> resource_cases(const SamplerConfig& sampler, int accumulation);

}  // namespace spikerbm
