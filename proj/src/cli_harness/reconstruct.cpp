#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "spikerbm/experiments.hpp"
#include "spikerbm/io.hpp"
#include "spikerbm/parallel.hpp"

namespace spikerbm {

using nlohmann::json;

json sampler_to_json(const SamplerConfig& c) {
  json j{{"scale", c.scale},
         {"window", c.window},
         {"threshold", c.threshold},
         {"threshold_bits", c.threshold_bits},
         {"leak", c.leak},
         {"leak_mode", to_string(c.leak_mode)}};
  j["saturation"] = c.saturation ? json(*c.saturation) : json(nullptr);
  return j;
}

SamplerConfig sampler_from_json(const json& j) {
  SamplerConfig c;
  c.scale = j.value("scale", c.scale);
  c.window = j.value("window", c.window);
  c.threshold = j.value("threshold", c.threshold);
  c.threshold_bits = j.value("threshold_bits", c.threshold_bits);
  c.leak = j.value("leak", c.leak);
  if (j.contains("leak_mode")) c.leak_mode = leak_probability_from_string(j.at("leak_mode").get<std::string>());
  if (j.contains("saturation") && !j.at("saturation").is_null()) c.saturation = j.at("saturation").get<int>();
  c.validate();
  return c;
}

const char* to_string(OcclusionGeometry g) {
  return g == OcclusionGeometry::contiguous_block ? "block" : "random";
}

const char* to_string(HammingNormalization n) {
  switch (n) {
    case HammingNormalization::all_pixels_over_known: return "all-over-known";
    case HammingNormalization::known_pixels_only: return "known-only";
    case HammingNormalization::all_pixels: return "all";
  }
  return "?";
}

const char* to_string(Backend b) {
  switch (b) {
    case Backend::ideal: return "ideal";
    case Backend::neural_fast: return "neural-fast";
    case Backend::neural_tick: return "neural-tick";
    case Backend::placed_substrate: return "placed-substrate";
  }
  return "?";
}

Backend backend_from_string(const std::string& s) {
  if (s == "ideal") return Backend::ideal;
  if (s == "neural-fast") return Backend::neural_fast;
  if (s == "neural-tick") return Backend::neural_tick;
  if (s == "placed-substrate") return Backend::placed_substrate;
  throw std::invalid_argument("backend must be ideal, neural-fast, neural-tick or placed-substrate");
}

void ReconstructionConfig::validate() const {
  if (n_samples < 1) throw std::invalid_argument("reconstruct: n_samples must be >= 1");
  if (!(occlusion.fraction >= 0.0 && occlusion.fraction <= 1.0))
    throw std::invalid_argument("reconstruct: occlusion fraction must be in [0, 1]");
  if (backend != Backend::ideal) sampler.validate();
  if (backend == Backend::placed_substrate) {
    CompileConfig c = compile;
    c.sampler = sampler;
    c.validate();
  }
}

json ReconstructionConfig::to_json() const {
  json j;
  j["backend"] = to_string(backend);
  j["sampler"] = sampler_to_json(sampler);
  if (backend == Backend::placed_substrate) {
    j["accumulation"] = compile.accumulation;
    j["packing"] = to_string(compile.packing);
    j["central_weight"] = compile.central_weight ? json(*compile.central_weight) : json(nullptr);
    j["axon_sharing"] = compile.axon_sharing;
    j["core_packing"] = compile.core_packing;
  }
  j["n_samples"] = n_samples;
  j["clamp"] = clamp ? "every-period" : "initial-only";
  j["occlusion"] = {{"fraction", occlusion.fraction},
                    {"geometry", to_string(occlusion.geometry)},
                    {"seed", occlusion.seed}};
  j["normalization"] = to_string(normalization);
  j["seed"] = seed;
  return j;
}

Eigen::VectorXd ReconstructionResult::mean_by_sample() const {
  if (hd.rows() == 0) return Eigen::VectorXd::Zero(hd.cols());
  return hd.colwise().mean().transpose();
}

ReconstructionResult reconstruct(const Rbm& model, const Dataset& images, const ReconstructionConfig& cfg,
                                 bool keep_samples) {
  cfg.validate();
  model.check();
  const Index nv = model.n_visible(), nh = model.n_hidden();
  if (images.dimension() != nv)
    throw std::invalid_argument("reconstruct: images have " + std::to_string(images.dimension()) +
                                " pixels but the model has " + std::to_string(nv) + " visible units");
  const Index n = images.size();

  QuantizedRbm q;
  std::unique_ptr<FastUnitSampler> fast;
  std::unique_ptr<TickUnitSampler> tick;
  std::unique_ptr<PlacedNetwork> placed;
  if (cfg.backend != Backend::ideal) q = quantize(model, cfg.sampler.scale);
  if (cfg.backend == Backend::neural_fast) fast = std::make_unique<FastUnitSampler>(cfg.sampler);
  if (cfg.backend == Backend::neural_tick) tick = std::make_unique<TickUnitSampler>(cfg.sampler);
  if (cfg.backend == Backend::placed_substrate) {
    CompileConfig cc = cfg.compile;
    cc.sampler = cfg.sampler;
    placed = std::make_unique<PlacedNetwork>(compile(q, cc));
  }

  ReconstructionResult r;
  r.hd.resize(n, cfg.n_samples);
  if (keep_samples) r.samples.resize(std::size_t(n));

  parallel_for(std::size_t(n), [&](std::size_t k) {
    const BinaryVector original = images.image(Index(k));
    OcclusionSpec os = cfg.occlusion;
    os.seed = derive_seed(cfg.occlusion.seed, k);
    const Occluded o = occlude(original, os);
    Rng rng = make_rng(derive_seed(cfg.seed, k));
    const BinaryVector* clamp = cfg.clamp ? &o.known : nullptr;
    auto record = [&](int s, const BinaryVector& v) {
      r.hd(Index(k), s) = hamming_metric(original, v, o.known, cfg.normalization);
      if (keep_samples) r.samples[k].push_back(v);
    };
    UnitState st(nv, nh);
    st.v = o.image;
    switch (cfg.backend) {
      case Backend::ideal:
        for (int s = 0; s < cfg.n_samples; ++s) {
          st = gibbs_sweep(model, st, IdealSampler{}, rng, clamp);
          record(s, st.v);
        }
        break;
      case Backend::neural_fast:
        for (int s = 0; s < cfg.n_samples; ++s) {
          st = gibbs_sweep(q, st, *fast, rng, clamp);
          record(s, st.v);
        }
        break;
      case Backend::neural_tick:
        for (int s = 0; s < cfg.n_samples; ++s) {
          st = gibbs_sweep(q, st, *tick, rng, clamp);
          record(s, st.v);
        }
        break;
      case Backend::placed_substrate: {
        PlacedChain chain(*placed, SimOptions{derive_seed(cfg.seed, k), cfg.sampler.leak_mode});
        chain.start(o.image);
        for (int s = 0; s < cfg.n_samples; ++s) {
          // Known pixels are injected on the frame tick itself, so the read-out already carries them.
          const UnitState u = cfg.clamp ? chain.next(&o.known, &o.image) : chain.next();
          record(s, u.v);
        }
        break;
      }
    }
  });
  return r;
}

int convergence_index(const Eigen::VectorXd& series, double tolerance) {
  const Index n = series.size();
  if (n == 0) return 0;
  const Index half = n / 2;
  const double settled = series.tail(n - half).mean();
  const double band = tolerance * std::abs(settled);
  Index k = n;
  while (k > 0 && std::abs(series(k - 1) - settled) <= band) --k;
  return int(std::min(k + 1, n));
}

ExperimentReport reconstruction_report(const Rbm& model, const Dataset& images, const ReconstructionConfig& cfg,
                                       const ReconstructionResult& r) {
  ExperimentReport rep;
  rep.id = std::string("reconstruct-") + to_string(cfg.backend);
  rep.config = cfg.to_json();
  rep.config["n_images"] = images.size();
  rep.model_hash = model_hash(model);

  std::ostringstream hd, mean, samples;
  hd.precision(10);
  mean.precision(10);
  hd << "image,sample,hd\n";
  for (Index k = 0; k < r.hd.rows(); ++k)
    for (Index s = 0; s < r.hd.cols(); ++s) hd << k << ',' << (s + 1) << ',' << r.hd(k, s) << '\n';
  const Eigen::VectorXd m = r.mean_by_sample();
  mean << "sample,mean_hd,sd_hd\n";
  for (Index s = 0; s < m.size(); ++s) {
    const double sd = r.hd.rows() > 1
                          ? std::sqrt((r.hd.col(s).array() - m(s)).square().sum() / double(r.hd.rows() - 1))
                          : 0.0;
    mean << (s + 1) << ',' << m(s) << ',' << sd << '\n';
  }
  rep.add_csv("hamming.csv", hd.str());
  rep.add_csv("hamming_mean.csv", mean.str());
  if (!r.samples.empty()) {
    samples << "image,sample,pixels\n";
    for (std::size_t k = 0; k < r.samples.size(); ++k)
      for (std::size_t s = 0; s < r.samples[k].size(); ++s) {
        samples << k << ',' << (s + 1) << ',';
        for (Index i = 0; i < r.samples[k][s].size(); ++i) samples << char('0' + r.samples[k][s](i));
        samples << '\n';
      }
    rep.add_csv("samples.csv", samples.str());
  }
  rep.config["convergence_sample"] = convergence_index(m);
  return rep;
}

}  // namespace spikerbm
