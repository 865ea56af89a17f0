#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "spikerbm/experiments.hpp"
#include "spikerbm/io.hpp"
#include "spikerbm/parallel.hpp"

namespace spikerbm {

using nlohmann::json;

namespace {

std::ostringstream csv_stream() {
  std::ostringstream os;
  os.precision(10);
  return os;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double pos = q * double(xs.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - double(lo)) * (xs[hi] - xs[lo]);
}

std::vector<NamedConfig> presets(LeakProbability mode) { return preset_configs(mode); }

void require_model(const FigureOptions& opt, const std::string& which, bool images) {
  if (!opt.model)
    throw MissingPrerequisite(which + " needs a trained model; run `spikerbm train` and pass --model");
  if (images && !opt.images)
    throw MissingPrerequisite(which + " needs test images; pass --images (IDX file) or build data/ first");
}

Rbm small_model(const FigureOptions& opt, std::uint64_t stream) {
  Rng rng = make_rng(derive_seed(opt.seed, stream));
  return random_rbm(opt.small_visible, opt.small_hidden, opt.small_weight_sd, opt.small_bias_sd, rng);
}

}  // namespace

double table1_error(const SamplerConfig& cfg) {
  return mse_vs_logistic(spike_probability_curve(cfg), cfg.scale, default_domain(cfg.scale), ErrorReduction::sum);
}

double chain_kl(const Rbm& reference, const SamplerConfig& cfg, int n_samples, std::uint64_t seed) {
  if (n_samples < 1) throw std::invalid_argument("chain_kl: n_samples must be >= 1");
  const QuantizedRbm q = quantize(reference, cfg.scale);
  const FastUnitSampler sampler(cfg);
  Rng rng = make_rng(seed);
  UnitState s(reference.n_visible(), reference.n_hidden());
  for (Index i = 0; i < s.v.size(); ++i) s.v(i) = bernoulli(rng, 0.5) ? 1 : 0;
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(Index(1) << reference.n_visible());
  for (int k = 0; k < n_samples; ++k) {
    s = gibbs_sweep(q, s, sampler, rng);
    hist(Index(visible_index(s.v))) += 1.0;
  }
  hist /= double(n_samples);
  return kl_divergence(hist, exact_visible_distribution(reference));
}

std::vector<ResourceCase> resource_cases(const SamplerConfig& sampler, int accumulation) {
  std::vector<ResourceCase> out(3);
  for (auto& c : out) {
    c.config.sampler = sampler;
    c.config.accumulation = accumulation;
  }
  out[0].name = "case1";
  out[0].strategies = "none";
  out[0].config.packing = PackingStrategy::none;
  out[0].config.axon_sharing = false;
  out[0].config.core_packing = false;
  out[1].name = "case2";
  out[1].strategies = "1.1,2,3";
  out[1].config.packing = PackingStrategy::sequential;
  out[2].name = "case3";
  out[2].strategies = "1.2,2,3";
  out[2].config.packing = PackingStrategy::central;
  return out;
}

ExperimentReport figure_fig4(const FigureOptions& opt) {
  ExperimentReport rep;
  rep.id = "fig4";
  rep.config = {{"trials", opt.fig4_trials}, {"stride", opt.fig4_stride}, {"seed", opt.seed},
                {"leak_mode", to_string(opt.leak_mode)}};
  const auto cfgs = presets(opt.leak_mode);
  struct Point {
    int v;
    double curve, mc, logistic;
  };
  std::vector<std::vector<Point>> points(cfgs.size());
  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    const SamplerConfig& sc = cfgs[c].config;
    const SpikeProbabilityCurve curve = spike_probability_curve(sc);
    const int sat = sc.saturation_potential();
    for (int v = -sat; v <= sat; v += std::max(1, opt.fig4_stride))
      points[c].push_back({v, curve(v), 0.0, logistic(double(v) / sc.scale)});
    parallel_for(points[c].size(), [&](std::size_t k) {
      Rng rng = make_rng(derive_seed(derive_seed(opt.seed, c), k));
      int hits = 0;
      for (int t = 0; t < opt.fig4_trials; ++t) hits += simulate_sampler(sc, points[c][k].v, rng) ? 1 : 0;
      points[c][k].mc = double(hits) / opt.fig4_trials;
    });
  }
  auto os = csv_stream();
  auto summary = csv_stream();
  os << "config,potential,dtmc,monte_carlo,band_lo,band_hi,logistic\n";
  summary << "config,points,inside_band,max_gap\n";
  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    int inside = 0;
    double max_gap = 0.0;
    for (const auto& p : points[c]) {
      const double half = 3.0 * std::sqrt(std::max(p.curve * (1.0 - p.curve), 0.0) / opt.fig4_trials);
      const double lo = p.curve - half, hi = p.curve + half;
      // A point with zero variance is inside only when it matches exactly.
      if (p.mc >= lo - 1e-12 && p.mc <= hi + 1e-12) ++inside;
      max_gap = std::max(max_gap, std::abs(p.mc - p.curve));
      os << cfgs[c].name << ',' << p.v << ',' << p.curve << ',' << p.mc << ',' << lo << ',' << hi << ',' << p.logistic
         << '\n';
    }
    summary << cfgs[c].name << ',' << points[c].size() << ',' << inside << ',' << max_gap << '\n';
  }
  rep.add_csv("curves.csv", os.str());
  rep.add_csv("summary.csv", summary.str());
  return rep;
}

ExperimentReport figure_table1(const FigureOptions& opt) {
  ExperimentReport rep;
  rep.id = "table1";
  rep.config = {{"leak_mode", to_string(opt.leak_mode)}, {"domain", "[-6s, 6s]"}};
  auto os = csv_stream();
  os << "config,scale,window,threshold,threshold_bits,leak,sse,mse\n";
  for (const auto& nc : presets(opt.leak_mode)) {
    const SamplerConfig& c = nc.config;
    const auto curve = spike_probability_curve(c);
    os << nc.name << ',' << c.scale << ',' << c.window << ',' << c.threshold << ',' << c.threshold_bits << ','
       << c.leak << ',' << table1_error(c) << ','
       << mse_vs_logistic(curve, c.scale, default_domain(c.scale), ErrorReduction::mean) << '\n';
  }
  rep.add_csv("table1.csv", os.str());
  return rep;
}

ExperimentReport figure_fig8(const FigureOptions& opt) {
  ExperimentReport rep;
  rep.id = "fig8";
  rep.config = {{"n_models", opt.n_models}, {"visible", opt.small_visible}, {"hidden", opt.small_hidden},
                {"weight_sd", opt.small_weight_sd}, {"bias_sd", opt.small_bias_sd}, {"scales", opt.scales},
                {"seed", opt.seed}};
  const std::size_t ns = opt.scales.size();
  std::vector<std::vector<double>> kl(ns, std::vector<double>(std::size_t(opt.n_models)));
  parallel_for(std::size_t(opt.n_models), [&](std::size_t m) {
    const Rbm model = small_model(opt, m);
    const Eigen::VectorXd exact = exact_visible_distribution(model);
    for (std::size_t s = 0; s < ns; ++s)
      kl[s][m] = kl_divergence(exact_visible_distribution(quantize(model, opt.scales[s]).dequantized()), exact);
  });
  auto per = csv_stream();
  auto agg = csv_stream();
  per << "model,scale,kl\n";
  agg << "scale,median_kl,q25_kl,q75_kl\n";
  for (std::size_t s = 0; s < ns; ++s) {
    for (int m = 0; m < opt.n_models; ++m) per << m << ',' << opt.scales[s] << ',' << kl[s][std::size_t(m)] << '\n';
    agg << opt.scales[s] << ',' << quantile(kl[s], 0.5) << ',' << quantile(kl[s], 0.25) << ','
        << quantile(kl[s], 0.75) << '\n';
  }
  rep.add_csv("kl_by_model.csv", per.str());
  rep.add_csv("kl_by_scale.csv", agg.str());
  return rep;
}

ExperimentReport figure_fig9_kl(const FigureOptions& opt) {
  ExperimentReport rep;
  rep.id = "fig9-kl";
  rep.config = {{"nets", opt.kl_nets}, {"runs", opt.n_runs}, {"samples", opt.chain_samples},
                {"visible", opt.small_visible}, {"hidden", opt.small_hidden}, {"weight_sd", opt.small_weight_sd},
                {"bias_sd", opt.small_bias_sd}, {"seed", opt.seed}, {"leak_mode", to_string(opt.leak_mode)}};
  const auto cfgs = presets(opt.leak_mode);
  const std::size_t cells = cfgs.size() * std::size_t(opt.kl_nets) * std::size_t(opt.n_runs);
  std::vector<double> kl(cells);
  std::vector<Rbm> nets;
  for (int n = 0; n < opt.kl_nets; ++n) nets.push_back(small_model(opt, 1000 + std::uint64_t(n)));
  parallel_for(cells, [&](std::size_t i) {
    const std::size_t c = i / (std::size_t(opt.kl_nets) * std::size_t(opt.n_runs));
    const std::size_t n = (i / std::size_t(opt.n_runs)) % std::size_t(opt.kl_nets);
    kl[i] = chain_kl(nets[n], cfgs[c].config, opt.chain_samples, derive_seed(opt.seed, 1 + i));
  });
  auto per = csv_stream();
  auto agg = csv_stream();
  per << "config,net,run,kl\n";
  agg << "config,sse,mean_kl,sd_kl\n";
  for (std::size_t c = 0; c < cfgs.size(); ++c) {
    double sum = 0.0, sq = 0.0;
    const std::size_t per_cfg = std::size_t(opt.kl_nets) * std::size_t(opt.n_runs);
    for (std::size_t k = 0; k < per_cfg; ++k) {
      const double x = kl[c * per_cfg + k];
      per << cfgs[c].name << ',' << (k / std::size_t(opt.n_runs)) << ',' << (k % std::size_t(opt.n_runs)) << ',' << x
          << '\n';
      sum += x;
      sq += x * x;
    }
    const double mean = sum / double(per_cfg);
    const double sd = per_cfg > 1 ? std::sqrt(std::max(0.0, (sq - per_cfg * mean * mean) / double(per_cfg - 1))) : 0.0;
    agg << cfgs[c].name << ',' << table1_error(cfgs[c].config) << ',' << mean << ',' << sd << '\n';
  }
  rep.add_csv("kl_by_run.csv", per.str());
  rep.add_csv("kl_by_config.csv", agg.str());
  return rep;
}

ExperimentReport figure_fig13(const FigureOptions& opt) {
  (void)opt;
  ExperimentReport rep;
  rep.id = "fig13";
  const int ta = 4;
  std::vector<int> weights;
  for (int w = -20; w <= 20; ++w)
    if (w != 0) weights.push_back(std::abs(w));
  rep.config = {{"weights", "-20..20 without 0"}, {"accumulation", ta}};
  const std::size_t none = unpacked_neuron_count(weights, ta);
  const std::size_t s11 = pack_weights_sequential(weights, ta).size();
  auto os = csv_stream();
  os << "central_weight,none,s1.1,s1.2\n";
  for (const auto& p : central_weight_sweep(weights, ta, 0, 20))
    os << p.central_weight << ',' << none << ',' << s11 << ',' << p.neurons << '\n';
  rep.add_csv("packing.csv", os.str());
  return rep;
}

ExperimentReport figure_fig15(const FigureOptions& opt) {
  require_model(opt, "fig15", true);
  ExperimentReport rep;
  rep.id = "fig15";
  rep.model_hash = model_hash(*opt.model);
  rep.config = {{"levels", opt.occlusion_levels}, {"samples", opt.n_samples}, {"images", opt.images->size()},
                {"sampler", sampler_to_json(opt.sampler)}, {"seed", opt.seed}};
  auto os = csv_stream();
  os << "occlusion,backend,tail_mean_hd,final_mean_hd\n";
  for (double level : opt.occlusion_levels)
    for (Backend b : {Backend::ideal, Backend::neural_fast}) {
      ReconstructionConfig rc;
      rc.backend = b;
      rc.sampler = opt.sampler;
      rc.n_samples = opt.n_samples;
      rc.occlusion.fraction = level;
      rc.seed = opt.seed;
      const Eigen::VectorXd m = reconstruct(*opt.model, *opt.images, rc).mean_by_sample();
      const Index half = m.size() / 2;
      os << level << ',' << to_string(b) << ',' << m.tail(m.size() - half).mean() << ',' << m(m.size() - 1) << '\n';
    }
  rep.add_csv("hamming_by_occlusion.csv", os.str());
  return rep;
}

ExperimentReport figure_fig16(const FigureOptions& opt) {
  require_model(opt, "fig16", true);
  ExperimentReport rep;
  rep.id = "fig16";
  rep.model_hash = model_hash(*opt.model);
  const double level = 0.35;
  rep.config = {{"occlusion", level}, {"samples", opt.n_samples}, {"images", opt.images->size()},
                {"sampler", sampler_to_json(opt.sampler)}, {"seed", opt.seed}};
  auto os = csv_stream();
  auto conv = csv_stream();
  os << "sample,backend,mean_hd\n";
  conv << "backend,convergence_sample\n";
  for (Backend b : {Backend::ideal, Backend::neural_fast}) {
    ReconstructionConfig rc;
    rc.backend = b;
    rc.sampler = opt.sampler;
    rc.n_samples = opt.n_samples;
    rc.occlusion.fraction = level;
    rc.seed = opt.seed;
    const Eigen::VectorXd m = reconstruct(*opt.model, *opt.images, rc).mean_by_sample();
    for (Index s = 0; s < m.size(); ++s) os << (s + 1) << ',' << to_string(b) << ',' << m(s) << '\n';
    conv << to_string(b) << ',' << convergence_index(m) << '\n';
  }
  rep.add_csv("hamming_by_sample.csv", os.str());
  rep.add_csv("convergence.csv", conv.str());
  return rep;
}

ExperimentReport figure_table2(const FigureOptions& opt) {
  require_model(opt, "table2", false);
  ExperimentReport rep;
  rep.id = "table2";
  rep.model_hash = model_hash(*opt.model);
  rep.config = {{"accumulation", opt.accumulation}, {"sampler", sampler_to_json(opt.sampler)}};
  const QuantizedRbm q = quantize(*opt.model, opt.sampler.scale);
  auto os = csv_stream();
  os << "case,strategies,cores,neurons,chip_utilization_percent,stage1_cores,stage2_cores,stage3_cores,central_weight\n";
  for (const auto& rc : resource_cases(opt.sampler, opt.accumulation)) {
    const ResourceReport r = compile(q, rc.config).report;
    os << rc.name << ",\"" << rc.strategies << "\"," << r.total_cores << ',' << r.total_neurons << ','
       << r.chip_utilization << ',' << r.stage[0].cores << ',' << r.stage[1].cores << ',' << r.stage[2].cores << ','
       << r.central_weight << '\n';
  }
  rep.add_csv("resources.csv", os.str());
  return rep;
}

const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names = {"fig4", "fig8", "fig9-kl", "fig13", "fig15", "fig16", "table1", "table2"};
  return names;
}

ExperimentReport make_figure(const std::string& which, const FigureOptions& opt) {
  if (which == "fig4") return figure_fig4(opt);
  if (which == "fig8") return figure_fig8(opt);
  if (which == "fig9-kl") return figure_fig9_kl(opt);
  if (which == "fig13") return figure_fig13(opt);
  if (which == "fig15") return figure_fig15(opt);
  if (which == "fig16") return figure_fig16(opt);
  if (which == "table1") return figure_table1(opt);
  if (which == "table2") return figure_table2(opt);
  throw std::invalid_argument("unknown figure " + which);
}

}  // namespace spikerbm
