#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "spikerbm/compiler.hpp"
#include "spikerbm/dataset.hpp"
#include "spikerbm/experiments.hpp"
#include "spikerbm/io.hpp"
#include "spikerbm/parallel.hpp"
#include "spikerbm/training.hpp"

#ifndef SPIKERBM_DATA_DIR
#define SPIKERBM_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace spikerbm;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kMissing = 3 };

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";
};

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw MissingPrerequisite(what + " not given");
  if (!fs::exists(path)) throw MissingPrerequisite(what + " not found: " + path);
}

std::string default_data(const std::string& name) { return (fs::path(SPIKERBM_DATA_DIR) / name).string(); }

// Sampler flags shared by several commands.
struct SamplerFlags {
  std::string preset;
  std::string json_file;
  std::optional<int> scale, window, threshold, bits, leak, saturation;
  std::string leak_mode = "half";

  void add(CLI::App* app) {
    app->add_option("--preset", preset, "Start from a reference configuration G1..G5 (default G5)");
    app->add_option("--sampler-json", json_file, "Sampler configuration file (as written by fit-sampler)");
    app->add_option("--scale", scale, "Scaling factor s");
    app->add_option("--window", window, "Sampling window in ticks");
    app->add_option("--threshold", threshold, "Base threshold");
    app->add_option("--bits", bits, "Random threshold bits");
    app->add_option("--leak", leak, "Stochastic leak step");
    app->add_option("--saturation", saturation, "Positive saturation (default: top threshold)");
    app->add_option("--leak-mode", leak_mode, "Leak probability: half or hardware")
        ->check(CLI::IsMember({"half", "hardware"}));
  }

  SamplerConfig build() const {
    const LeakProbability mode = leak_probability_from_string(leak_mode);
    SamplerConfig c = preset.empty() ? preset_config("G5", mode) : preset_config(preset, mode);
    if (!json_file.empty()) {
      require_file(json_file, "sampler file");
      c = sampler_from_json(json::parse(read_file(json_file)));
    }
    if (scale) c.scale = *scale;
    if (window) c.window = *window;
    if (threshold) c.threshold = *threshold;
    if (bits) c.threshold_bits = *bits;
    if (leak) c.leak = *leak;
    if (saturation) c.saturation = *saturation;
    c.leak_mode = mode;
    c.validate();
    return c;
  }
};

struct CompileFlags {
  int accumulation = 32;
  std::string packing = "s1.2";
  std::optional<int> central_weight, c_minus;
  bool no_axon_sharing = false, no_core_packing = false;

  void add(CLI::App* app) {
    app->add_option("--accumulation", accumulation, "Accumulation ticks T_A");
    app->add_option("--packing", packing, "Weight packing: none, s1.1 or s1.2");
    app->add_option("--central-weight", central_weight, "Central weight for s1.2 (default: sweep)");
    app->add_option("--c-minus", c_minus, "Splitter floor (negative)");
    app->add_flag("--no-axon-sharing", no_axon_sharing, "Place quantizer units in index order without sharing");
    app->add_flag("--no-core-packing", no_core_packing, "Fill splitter and sampler cores next-fit");
  }

  CompileConfig build(const SamplerConfig& s) const {
    CompileConfig c;
    c.sampler = s;
    c.accumulation = accumulation;
    c.packing = packing_strategy_from_string(packing);
    c.central_weight = central_weight;
    c.c_minus = c_minus;
    c.axon_sharing = !no_axon_sharing;
    c.core_packing = !no_core_packing;
    c.validate();
    return c;
  }
};

struct ImageFlags {
  std::string images;
  std::string labels;
  std::optional<long> limit;
  long offset = 0;

  void add(CLI::App* app, const std::string& default_images) {
    images = default_images;
    app->add_option("--images", images, "IDX image file (gzip or plain)")->capture_default_str();
    app->add_option("--labels", labels, "IDX label file");
    app->add_option("--limit", limit, "Use at most this many images");
    app->add_option("--offset", offset, "Skip this many images first");
  }

  Dataset load() const {
    require_file(images, "image file");
    if (!labels.empty()) require_file(labels, "label file");
    std::optional<fs::path> lab;
    if (!labels.empty()) lab = labels;
    std::optional<Index> cap;
    if (limit) cap = Index(offset + *limit);
    Dataset d = load_mnist(images, lab, cap);
    if (offset > 0 || limit) {
      const Index first = std::min<Index>(offset, d.size());
      d = d.slice(first, d.size() - first);
    }
    return d;
  }
};

LoadedModel load_model_checked(const std::string& path) {
  require_file(path, "model file");
  return load_model(path);
}

IntRange parse_range(const std::string& s) {
  IntRange r;
  char c1 = 0, c2 = 0;
  std::istringstream is(s);
  if (!(is >> r.lo)) throw std::invalid_argument("range must look like lo:hi[:step], got " + s);
  r.hi = r.lo;
  if (is >> c1) {
    if (c1 != ':' || !(is >> r.hi)) throw std::invalid_argument("range must look like lo:hi[:step], got " + s);
    if (is >> c2) {
      if (c2 != ':' || !(is >> r.step)) throw std::invalid_argument("range must look like lo:hi[:step], got " + s);
    }
  }
  if (r.step < 1 || r.hi < r.lo) throw std::invalid_argument("bad range " + s);
  return r;
}

void write_out(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
  std::cerr << "wrote " << path.string() << "\n";
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os.precision(12);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << m(r, c);
    os << '\n';
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking RBM sampler, compiler and experiment harness"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed for every stochastic step");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--out-dir", g.out_dir, "Directory for experiment outputs");

  // train
  auto* train = app.add_subcommand("train", "Train an RBM with persistent contrastive divergence");
  ImageFlags train_images;
  train_images.add(train, default_data("mnist-train.images.idx.gz"));
  int patch = 8, dense_hidden = 0;
  TrainConfig tcfg;
  std::string train_out;
  bool train_json = false;
  train->add_option("--patch", patch, "Patch side for the sparse mask (0 = dense)");
  train->add_option("--hidden", dense_hidden, "Hidden units when dense");
  train->add_option("--lr", tcfg.learning_rate, "Learning rate");
  train->add_option("--epochs", tcfg.epochs, "Epochs");
  train->add_option("--batch", tcfg.batch_size, "Mini-batch size");
  train->add_option("--chains", tcfg.persistent_chains, "Persistent chains");
  train->add_option("--init-sd", tcfg.init_weight_sd, "Initial weight standard deviation");
  train->add_option("-o,--output", train_out, "Model file (default <out-dir>/model.srbm)");
  train->add_flag("--json", train_json, "Also write the JSON export next to the model");

  // fit-sampler
  auto* fit = app.add_subcommand("fit-sampler", "Grid-search sampler parameters against the logistic");
  int fit_scale = 50, fit_window = 8;
  std::string r_thr = "0:300:1", r_bits = "5:10", r_leak = "1:150";
  std::string fit_reduction = "mean", fit_mode = "half";
  std::optional<int> dom_lo, dom_hi;
  double fit_mult = 5.0;
  fit->add_option("--scale", fit_scale, "Scaling factor s");
  fit->add_option("--window", fit_window, "Sampling window");
  fit->add_option("--threshold-range", r_thr, "lo:hi[:step]");
  fit->add_option("--bits-range", r_bits, "lo:hi[:step]");
  fit->add_option("--leak-range", r_leak, "lo:hi[:step]");
  fit->add_option("--reduction", fit_reduction, "mean or sum")->check(CLI::IsMember({"mean", "sum"}));
  fit->add_option("--leak-mode", fit_mode, "half or hardware")->check(CLI::IsMember({"half", "hardware"}));
  fit->add_option("--domain-lo", dom_lo, "Lower end of the evaluation domain (default -6s)");
  fit->add_option("--domain-hi", dom_hi, "Upper end of the evaluation domain (default 6s)");
  fit->add_option("--admissible-multiple", fit_mult, "Require top threshold >= multiple * s");

  // analyze-dtmc
  auto* dtmc = app.add_subcommand("analyze-dtmc", "Spike-probability curve and transition matrices");
  SamplerFlags dtmc_s;
  dtmc_s.add(dtmc);
  bool dtmc_matrices = false;
  dtmc->add_flag("--matrices", dtmc_matrices, "Also write the dense transition matrices");

  // map
  auto* map = app.add_subcommand("map", "Compile a model onto cores");
  SamplerFlags map_s;
  map_s.add(map);
  CompileFlags map_c;
  map_c.add(map);
  std::string map_model;
  map->add_option("--model", map_model, "Model file")->required();

  // validate
  auto* val = app.add_subcommand("validate", "Check a network file against the core constraints");
  std::string val_file;
  val->add_option("network", val_file, "Network file")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a network tick by tick");
  std::string sim_net, sim_events, sim_model;
  std::int64_t sim_ticks = 100;
  std::vector<std::string> sim_probes;
  SamplerFlags sim_s;
  sim_s.add(sim);
  CompileFlags sim_c;
  sim_c.add(sim);
  sim->add_option("--network", sim_net, "Network file");
  sim->add_option("--model", sim_model, "Compile this model and drive it with its control schedule");
  sim->add_option("--events", sim_events, "CSV of external events: tick,core,axon");
  sim->add_option("--ticks", sim_ticks, "Ticks to run");
  sim->add_option("--probe", sim_probes, "Record potentials of core:neuron");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "Pattern completion on occluded images");
  std::string rec_model, rec_backend = "neural-fast", rec_geometry = "block", rec_norm = "all-over-known";
  ImageFlags rec_images;
  rec_images.add(rec, default_data("mnist-test.images.idx.gz"));
  SamplerFlags rec_s;
  rec_s.add(rec);
  CompileFlags rec_c;
  rec_c.add(rec);
  ReconstructionConfig rcfg;
  bool rec_init_only = false, rec_keep = false;
  std::optional<std::uint64_t> rec_occ_seed;
  rec->add_option("--model", rec_model, "Model file")->required();
  rec->add_option("--backend", rec_backend, "ideal, neural-fast, neural-tick or placed-substrate")
      ->check(CLI::IsMember({"ideal", "neural-fast", "neural-tick", "placed-substrate"}));
  rec->add_option("--samples", rcfg.n_samples, "Gibbs periods per image");
  rec->add_option("--occlusion", rcfg.occlusion.fraction, "Fraction of pixels hidden");
  rec->add_option("--geometry", rec_geometry, "block or random")->check(CLI::IsMember({"block", "random"}));
  rec->add_option("--occlusion-seed", rec_occ_seed, "Seed for random occlusion (default --seed)");
  rec->add_option("--normalization", rec_norm, "all-over-known, known-only or all")
      ->check(CLI::IsMember({"all-over-known", "known-only", "all"}));
  rec->add_flag("--init-only", rec_init_only, "Impose known pixels only at the start");
  rec->add_flag("--keep-samples", rec_keep, "Write every intermediate visible sample");

  // figures
  auto* figs = app.add_subcommand("figures", "Data behind the figures and tables");
  std::vector<std::string> fig_which;
  std::string fig_model;
  ImageFlags fig_images;
  fig_images.add(figs, default_data("mnist-test.images.idx.gz"));
  SamplerFlags fig_s;
  fig_s.add(figs);
  FigureOptions fopt;
  figs->add_option("which", fig_which, "fig4 fig8 fig9-kl fig13 fig15 fig16 table1 table2, or all")->required();
  figs->add_option("--model", fig_model, "Trained model (fig15, fig16, table2)");
  figs->add_option("--trials", fopt.fig4_trials, "fig4: Monte Carlo trials per potential");
  figs->add_option("--stride", fopt.fig4_stride, "fig4: potential step");
  figs->add_option("--models", fopt.n_models, "fig8: random models");
  figs->add_option("--nets", fopt.kl_nets, "fig9-kl: random nets");
  figs->add_option("--runs", fopt.n_runs, "fig9-kl: chains per net");
  figs->add_option("--chain-samples", fopt.chain_samples, "fig9-kl: samples per chain");
  figs->add_option("--scales", fopt.scales, "fig8: scaling factors");
  figs->add_option("--levels", fopt.occlusion_levels, "fig15: occlusion fractions");
  figs->add_option("--samples", fopt.n_samples, "fig15/fig16: samples per image");
  figs->add_option("--accumulation", fopt.accumulation, "table2: accumulation ticks");

  // ais
  auto* ais = app.add_subcommand("ais", "Annealed importance sampling estimate of log Z and log-likelihood");
  std::string ais_model;
  ImageFlags ais_images;
  ais_images.add(ais, default_data("mnist-test.images.idx.gz"));
  AisConfig acfg;
  ais->add_option("--model", ais_model, "Model file")->required();
  ais->add_option("--steps", acfg.n_intermediate, "Intermediate distributions");
  ais->add_option("--runs", acfg.n_runs, "Independent AIS runs");

  // occlude
  auto* occ = app.add_subcommand("occlude", "Write occluded copies of images");
  ImageFlags occ_images;
  occ_images.add(occ, default_data("mnist-test.images.idx.gz"));
  OcclusionSpec ospec;
  std::string occ_geometry = "block";
  occ->add_option("--fraction", ospec.fraction, "Fraction of pixels hidden");
  occ->add_option("--geometry", occ_geometry, "block or random")->check(CLI::IsMember({"block", "random"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  default_threads() = g.threads <= 0 ? std::max(1u, std::thread::hardware_concurrency()) : std::size_t(g.threads);
  const fs::path out(g.out_dir);

  try {
    if (*train) {
      const Dataset data = train_images.load();
      Mask mask;
      if (patch > 0) {
        if (data.rows != data.cols) throw std::invalid_argument("train: patch masks need square images");
        mask = patch_mask(data.rows, patch);
      } else {
        if (dense_hidden < 1) throw std::invalid_argument("train: --hidden is required when --patch 0");
        mask = Mask::Ones(data.dimension(), dense_hidden);
      }
      tcfg.seed = g.seed;
      const Rbm model = train_pcd(data, mask, tcfg, [](int epoch, const Rbm&) { std::cerr << "epoch " << epoch << "\n"; });
      const fs::path path = train_out.empty() ? out / "model.srbm" : fs::path(train_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      save_model(path, model);
      if (train_json) export_model_text(fs::path(path).replace_extension(".json"), model);
      std::cout << path.string() << "\n";
      return kOk;
    }

    if (*fit) {
      SearchSpace space{parse_range(r_thr), parse_range(r_bits), parse_range(r_leak)};
      FitOptions fo;
      if (dom_lo || dom_hi) fo.domain = IntInterval{dom_lo.value_or(-6 * fit_scale), dom_hi.value_or(6 * fit_scale)};
      fo.admissible_multiple = fit_mult;
      fo.leak_mode = leak_probability_from_string(fit_mode);
      fo.reduction = fit_reduction == "sum" ? ErrorReduction::sum : ErrorReduction::mean;
      const FitResult r = fit_sampler(fit_scale, fit_window, space, fo);
      json j = sampler_to_json(r.config);
      j["error"] = r.mse;
      j["reduction"] = fit_reduction;
      j["evaluated"] = r.evaluated;
      write_out(out / "fit-sampler" / "sampler.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return kOk;
    }

    if (*dtmc) {
      const SamplerConfig c = dtmc_s.build();
      const SpikeProbabilityCurve curve = spike_probability_curve(c);
      std::ostringstream os;
      os.precision(12);
      os << "potential,spike_probability,logistic\n";
      for (int v = -curve.saturation(); v <= curve.saturation(); ++v)
        os << v << ',' << curve(v) << ',' << logistic(double(v) / c.scale) << '\n';
      const fs::path dir = out / "analyze-dtmc";
      write_out(dir / "curve.csv", os.str());
      json j = sampler_to_json(c);
      j["sse"] = table1_error(c);
      j["mse"] = mse_vs_logistic(curve, c.scale, default_domain(c.scale));
      j["states"] = c.state_count();
      write_out(dir / "summary.json", j.dump(2) + "\n");
      if (dtmc_matrices) {
        if (c.state_count() > 4001) throw std::invalid_argument("analyze-dtmc: too many states for dense matrices");
        const DtmcMatrices m = build_dtmc(c);
        write_out(dir / "leak.csv", matrix_csv(m.leak));
        write_out(dir / "threshold.csv", matrix_csv(m.threshold));
        write_out(dir / "coupled.csv", matrix_csv(m.coupled));
        write_out(dir / "sample.csv", matrix_csv(m.sample));
      }
      std::cout << j.dump(2) << "\n";
      return kOk;
    }

    if (*map) {
      const LoadedModel lm = load_model_checked(map_model);
      const SamplerConfig s = map_s.build();
      const QuantizedRbm q = lm.quantized && lm.quantized->scale == s.scale ? *lm.quantized : quantize(lm.model, s.scale);
      const PlacedNetwork p = compile(q, map_c.build(s));
      const fs::path dir = out / "map";
      write_out(dir / "network.json", network_to_json(p.network));
      write_out(dir / "placement.json", placement_to_json(p));
      write_out(dir / "resources.json", p.report.to_json());
      write_out(dir / "resources.csv", p.report.to_csv());
      const auto viol = validate_network(p.network);
      std::cout << p.report.to_json();
      if (!viol.empty()) {
        for (const auto& v : viol) std::cerr << v.describe() << "\n";
        return kValidation;
      }
      return kOk;
    }

    if (*val) {
      require_file(val_file, "network file");
      const Network net = load_network(val_file);
      const auto viol = validate_network(net);
      for (const auto& v : viol) std::cout << v.describe() << "\n";
      std::cerr << net.cores.size() << " cores, " << viol.size() << " violations\n";
      return viol.empty() ? kOk : kValidation;
    }

    if (*sim) {
      if (sim_net.empty() == sim_model.empty()) throw std::invalid_argument("simulate: give exactly one of --network, --model");
      std::vector<NeuronAddress> probes;
      for (const auto& p : sim_probes) {
        const auto colon = p.find(':');
        if (colon == std::string::npos) throw std::invalid_argument("probe must be core:neuron");
        probes.push_back({std::stoi(p.substr(0, colon)), std::stoi(p.substr(colon + 1))});
      }
      const SamplerConfig s = sim_s.build();
      SimOptions so{g.seed, s.leak_mode};
      TickTrace trace;
      if (!sim_net.empty()) {
        require_file(sim_net, "network file");
        const Network net = load_network(sim_net);
        std::map<std::int64_t, std::vector<AxonAddress>> events;
        if (!sim_events.empty()) {
          require_file(sim_events, "events file");
          std::istringstream is(read_file(sim_events));
          std::string line;
          while (std::getline(is, line)) {
            if (line.empty() || line[0] < '0' || line[0] > '9') continue;
            std::int64_t t;
            int c, a;
            char d1, d2;
            std::istringstream ls(line);
            if (!(ls >> t >> d1 >> c >> d2 >> a)) throw std::invalid_argument("events: bad line " + line);
            events[t].push_back({c, a});
          }
        }
        trace = run(
            net,
            [&](std::int64_t t, std::vector<AxonAddress>& ev) {
              auto it = events.find(t);
              if (it != events.end()) ev.insert(ev.end(), it->second.begin(), it->second.end());
            },
            sim_ticks, probes, so);
      } else {
        const LoadedModel lm = load_model_checked(sim_model);
        const PlacedNetwork p = compile(quantize(lm.model, s.scale), sim_c.build(s));
        trace = run(
            p.network, [&](std::int64_t t, std::vector<AxonAddress>& ev) { p.schedule.events(t, ev); }, sim_ticks,
            probes, so);
      }
      const fs::path dir = out / "simulate";
      write_out(dir / "spikes.csv", trace.spikes_csv());
      if (!probes.empty()) write_out(dir / "potentials.csv", trace.potentials_csv());
      std::cout << trace.spikes.size() << " spikes in " << sim_ticks << " ticks\n";
      return kOk;
    }

    if (*rec) {
      const LoadedModel lm = load_model_checked(rec_model);
      const Dataset images = rec_images.load();
      rcfg.backend = backend_from_string(rec_backend);
      rcfg.sampler = rec_s.build();
      rcfg.compile = rec_c.build(rcfg.sampler);
      rcfg.clamp = !rec_init_only;
      rcfg.occlusion.geometry = rec_geometry == "random" ? OcclusionGeometry::random_pixels
                                                          : OcclusionGeometry::contiguous_block;
      rcfg.occlusion.seed = rec_occ_seed.value_or(g.seed);
      rcfg.normalization = hamming_normalization_from_string(rec_norm);
      rcfg.seed = g.seed;
      const ReconstructionResult r = reconstruct(lm.model, images, rcfg, rec_keep);
      ExperimentReport rep = reconstruction_report(lm.model, images, rcfg, r);
      rep.config["images"] = rec_images.images;
      rep.config["offset"] = rec_images.offset;
      const fs::path dir = rep.write(out);
      const Eigen::VectorXd m = r.mean_by_sample();
      std::cout << "final mean HD " << m(m.size() - 1) << ", settles by sample " << convergence_index(m) << "\n"
                << dir.string() << "\n";
      return kOk;
    }

    if (*figs) {
      std::vector<std::string> which = fig_which;
      if (which.size() == 1 && which[0] == "all") which = figure_names();
      for (const auto& w : which)
        if (std::find(figure_names().begin(), figure_names().end(), w) == figure_names().end())
          throw std::invalid_argument("unknown figure " + w);
      std::optional<LoadedModel> lm;
      std::optional<Dataset> images;
      if (!fig_model.empty()) lm = load_model_checked(fig_model);
      fopt.seed = g.seed;
      fopt.sampler = fig_s.build();
      fopt.leak_mode = fopt.sampler.leak_mode;
      if (lm) fopt.model = &lm->model;
      for (const auto& w : which) {
        if ((w == "fig15" || w == "fig16") && !images && fs::exists(fig_images.images)) {
          images = fig_images.load();
          fopt.images = &*images;
        }
        const fs::path dir = make_figure(w, fopt).write(out);
        std::cout << dir.string() << "\n";
      }
      return kOk;
    }

    if (*ais) {
      const LoadedModel lm = load_model_checked(ais_model);
      const Dataset data = ais_images.load();
      acfg.seed = g.seed;
      const AisResult r = ais_log_prob(lm.model, data, acfg);
      json j{{"log_z", r.log_z},          {"log_z_stderr", r.log_z_stderr}, {"log_z_base", r.log_z_base},
             {"mean_log_prob", r.mean_log_prob}, {"stderr", r.stderr},   {"steps", acfg.n_intermediate},
             {"runs", acfg.n_runs},       {"images", data.size()},        {"seed", g.seed}};
      write_out(out / "ais" / "result.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
      return kOk;
    }

    if (*occ) {
      const Dataset data = occ_images.load();
      ospec.geometry = occ_geometry == "random" ? OcclusionGeometry::random_pixels : OcclusionGeometry::contiguous_block;
      std::ostringstream os;
      os << "image,known,pixels\n";
      for (Index k = 0; k < data.size(); ++k) {
        OcclusionSpec s = ospec;
        s.seed = derive_seed(g.seed, std::uint64_t(k));
        const Occluded o = occlude(data.image(k), s);
        os << k << ',';
        for (Index i = 0; i < o.known.size(); ++i) os << char('0' + o.known(i));
        os << ',';
        for (Index i = 0; i < o.image.size(); ++i) os << char('0' + o.image(i));
        os << '\n';
      }
      write_out(out / "occlude" / "occluded.csv", os.str());
      return kOk;
    }
  } catch (const MissingPrerequisite& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissing;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kUsage;
}
