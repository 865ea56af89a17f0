#include "spikerbm/sampler.hpp"

#include <Eigen/Sparse>

#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "spikerbm/parallel.hpp"

namespace spikerbm {

const char* to_string(LeakProbability mode) { return mode == LeakProbability::half ? "half" : "hardware"; }

LeakProbability leak_probability_from_string(const std::string& s) {
  if (s == "half") return LeakProbability::half;
  if (s == "hardware") return LeakProbability::hardware;
  throw std::invalid_argument("leak probability mode must be 'half' or 'hardware'");
}

double SamplerConfig::leak_probability() const {
  // The leak neuron runs with lambda = 128.
  return leak_mode == LeakProbability::half ? 0.5 : 129.0 / 256.0;
}

void SamplerConfig::validate() const {
  if (scale < 1) throw std::invalid_argument("sampler: scale must be >= 1");
  if (window < 1) throw std::invalid_argument("sampler: window must be >= 1");
  if (threshold_bits < 0 || threshold_bits > 20) throw std::invalid_argument("sampler: threshold bits out of range");
  if (leak < 1) throw std::invalid_argument("sampler: leak must be positive");
  if (saturation_potential() < 1) throw std::invalid_argument("sampler: saturation must be positive");
  if (top_threshold() > saturation_potential())
    throw std::invalid_argument("sampler: threshold + range exceeds saturation");
}

std::string SamplerConfig::describe() const {
  std::ostringstream os;
  os << "scale=" << scale << " window=" << window << " threshold=" << threshold
     << " bits=" << threshold_bits << " leak=" << leak << " saturation=" << saturation_potential()
     << " leak_mode=" << to_string(leak_mode);
  return os.str();
}

std::vector<NamedConfig> preset_configs(LeakProbability mode) {
  auto make = [mode](int window, int threshold, int bits, int leak) {
    SamplerConfig c;
    c.scale = 50;
    c.window = window;
    c.threshold = threshold;
    c.threshold_bits = bits;
    c.leak = leak;
    c.leak_mode = mode;
    return c;
  };
  return {{"G1", make(1, 0, 7, 125)},
          {"G2", make(2, 0, 8, 100)},
          {"G3", make(4, 66, 8, 77)},
          {"G4", make(8, 79, 9, 49)},
          {"G5", make(16, 186, 9, 36)}};
}

SamplerConfig preset_config(const std::string& name, LeakProbability mode) {
  for (auto& nc : preset_configs(mode))
    if (nc.name == name) return nc.config;
  throw std::invalid_argument("unknown sampler preset '" + name + "'");
}

namespace {

typedef Eigen::SparseMatrix<double, Eigen::RowMajor> SparseRows;

// Probability that a potential crosses the random threshold on one comparison.
double hit_probability(const SamplerConfig& cfg, int v) {
  if (v < cfg.threshold) return 0.0;
  if (v >= cfg.top_threshold()) return 1.0;
  return double(v - cfg.threshold + 1) / double(cfg.threshold_range() + 1);
}

SparseRows sparse_leak(const SamplerConfig& cfg) {
  const int sat = cfg.saturation_potential();
  const double p = cfg.leak_probability();
  std::vector<Eigen::Triplet<double>> t;
  for (int v = -sat; v <= sat; ++v) {
    const Index r = Index(v) + sat;
    if (v == sat) {
      t.emplace_back(r, r, 1.0);
      continue;
    }
    t.emplace_back(r, r, 1.0 - p);
    t.emplace_back(r, Index(std::min(v + cfg.leak, sat)) + sat, p);
  }
  SparseRows m(cfg.state_count(), cfg.state_count());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseRows sparse_threshold(const SamplerConfig& cfg) {
  const int sat = cfg.saturation_potential();
  const Index top = Index(2) * sat;
  std::vector<Eigen::Triplet<double>> t;
  for (int v = -sat; v <= sat; ++v) {
    const Index r = Index(v) + sat;
    const double q = v == sat ? 1.0 : hit_probability(cfg, v);
    if (q < 1.0) t.emplace_back(r, r, 1.0 - q);
    if (q > 0.0) t.emplace_back(r, top, q);
  }
  SparseRows m(cfg.state_count(), cfg.state_count());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

DtmcMatrices build_dtmc(const SamplerConfig& cfg) {
  cfg.validate();
  const SparseRows leak = sparse_leak(cfg);
  const SparseRows thr = sparse_threshold(cfg);
  const SparseRows coupled = leak * thr;
  DtmcMatrices d;
  d.saturation = cfg.saturation_potential();
  d.leak = Eigen::MatrixXd(leak);
  d.threshold = Eigen::MatrixXd(thr);
  d.coupled = Eigen::MatrixXd(coupled);
  Eigen::MatrixXd power = d.coupled;
  for (int k = 1; k < cfg.window; ++k) power = coupled * power;
  d.sample = std::move(power);
  return d;
}

SpikeProbabilityCurve spike_probability_curve(const SamplerConfig& cfg) {
  cfg.validate();
  const SparseRows coupled = sparse_leak(cfg) * sparse_threshold(cfg);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(cfg.state_count());
  x(x.size() - 1) = 1.0;
  for (int k = 0; k < cfg.window; ++k) x = coupled * x;
  return SpikeProbabilityCurve(cfg.saturation_potential(), std::move(x));
}

bool simulate_sampler(const SamplerConfig& cfg, int initial_potential, Rng& rng) {
  const int sat = cfg.saturation_potential();
  if (initial_potential < -sat || initial_potential > sat)
    throw std::out_of_range("simulate_sampler: initial potential outside [-sat, sat]");
  const double p = cfg.leak_probability();
  const std::uint64_t span = std::uint64_t(cfg.threshold_range()) + 1;
  int v = initial_potential;
  for (int t = 0; t < cfg.window; ++t) {
    if (bernoulli(rng, p)) v = std::min(v + cfg.leak, sat);
    const int drawn = cfg.threshold + int(uniform_below(rng, span));
    if (v >= drawn) return true;  // the spike is absorbing, later ticks cannot undo it
  }
  return false;
}

double mse_vs_logistic(const SpikeProbabilityCurve& curve, int scale, IntInterval domain,
                       ErrorReduction reduction) {
  if (domain.hi < domain.lo) throw std::invalid_argument("mse_vs_logistic: empty domain");
  if (scale < 1) throw std::invalid_argument("mse_vs_logistic: scale must be >= 1");
  double acc = 0.0;
  for (int v = domain.lo; v <= domain.hi; ++v) {
    const double e = curve(v) - logistic(double(v) / scale);
    acc += e * e;
  }
  return reduction == ErrorReduction::sum ? acc : acc / double(domain.hi - domain.lo + 1);
}

namespace {

std::vector<int> expand(const IntRange& r) {
  if (r.step < 1) throw std::invalid_argument("fit_sampler: range step must be >= 1");
  std::vector<int> out;
  for (int x = r.lo; x <= r.hi; x += r.step) out.push_back(x);
  return out;
}

}  // namespace

FitResult fit_sampler(int scale, int window, const SearchSpace& space, const FitOptions& opts) {
  const IntInterval domain = opts.domain.value_or(default_domain(scale));
  const std::vector<int> thresholds = expand(space.threshold);
  const std::vector<int> bits = expand(space.threshold_bits);
  const std::vector<int> leaks = expand(space.leak);

  // Tie-break order: bits, then threshold, then leak; lexicographic grid order
  // makes "first minimum wins" implement it.
  std::vector<SamplerConfig> grid;
  for (int m : bits)
    for (int th : thresholds)
      for (int l : leaks) {
        SamplerConfig c;
        c.scale = scale;
        c.window = window;
        c.threshold = th;
        c.threshold_bits = m;
        c.leak = l;
        c.leak_mode = opts.leak_mode;
        if (m < 0 || l < 1 || c.top_threshold() < 1) continue;
        if (double(c.top_threshold()) < opts.admissible_multiple * scale) continue;
        grid.push_back(c);
      }
  if (grid.empty()) throw std::invalid_argument("fit_sampler: no admissible configuration in search space");

  std::vector<double> err(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    err[i] = mse_vs_logistic(spike_probability_curve(grid[i]), scale, domain, opts.reduction);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (err[i] < err[best]) best = i;
  return {grid[best], err[best], grid.size()};
}

}  // namespace spikerbm
