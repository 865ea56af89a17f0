#include <gtest/gtest.h>

#include <json.hpp>

#include <map>
#include <numeric>

#include "spikerbm/compiler.hpp"

namespace spikerbm {
namespace {

std::vector<int> symmetric_range(int n) {
  std::vector<int> w;
  for (int k = 1; k <= n; ++k) {
    w.push_back(k);
    w.push_back(-k);
  }
  return w;
}

// Next-fit oracle written from the packing rule alone: full chunks get their
// own neuron, partial chunks share the latest partial neuron when capacity and
// the 4-value limit allow.
std::size_t next_fit_count(const std::vector<int>& weights, int ta) {
  std::size_t count = 0;
  int open_total = -1;
  std::vector<int> open_values;
  for (int w : weights) {
    int m = std::abs(w);
    count += std::size_t(m / ta);
    const int rest = m % ta;
    if (rest == 0) continue;
    std::vector<int> values = open_values;
    if (std::find(values.begin(), values.end(), rest) == values.end()) values.push_back(rest);
    if (open_total >= 0 && open_total + rest <= ta && values.size() <= 4) {
      open_total += rest;
      open_values = values;
    } else {
      ++count;
      open_total = rest;
      open_values = {rest};
    }
  }
  return count;
}

TEST(SchedulePeriod, ReferenceFigures) {
  CompileConfig c;
  c.accumulation = 8;
  c.sampler.window = 10;
  EXPECT_EQ(schedule_period(c).layer, 20);
  EXPECT_EQ(schedule_period(c).image, 40);
  c.accumulation = 32;
  c.sampler.window = 16;
  EXPECT_EQ(schedule_period(c).image, 100);
  c.accumulation = 1;
  c.sampler.window = 1;
  EXPECT_EQ(schedule_period(c).layer, 4);
}

TEST(SchedulePeriod, FormulaEverywhere) {
  CompileConfig c;
  for (int ta = 1; ta <= 64; ++ta)
    for (int ts = 1; ts <= 32; ++ts) {
      c.accumulation = ta;
      c.sampler.window = ts;
      const Periods p = schedule_period(c);
      ASSERT_EQ(p.layer, ta + ts + 2);
      ASSERT_EQ(p.image, 2 * p.layer);
    }
}

TEST(Packing, AscendingOneToSix) {
  const Packing p = pack_weights_s11({1, 2, 3, 4, 5, 6}, 4);
  EXPECT_EQ(p.size(), 6u);
  EXPECT_TRUE(check_packing({1, 2, 3, 4, 5, 6}, p, 4).empty());
}

TEST(Packing, DescendingSixToOne) {
  const Packing p = pack_weights_s11({6, 5, 4, 3, 2, 1}, 4);
  EXPECT_TRUE(check_packing({6, 5, 4, 3, 2, 1}, p, 4).empty());
  EXPECT_EQ(p.size(), 7u);
}

TEST(Packing, UnpackedBaseline) {
  const std::vector<int> w = symmetric_range(20);
  EXPECT_EQ(unpacked_neuron_count(w, 4), 120u);
  EXPECT_EQ(pack_weights_unpacked(w, 4).size(), 120u);
  EXPECT_TRUE(check_packing(w, pack_weights_unpacked(w, 4), 4).empty());
}

TEST(Packing, SequentialOnSymmetricRange) {
  const std::vector<int> w = symmetric_range(20);
  const std::size_t n = pack_weights_s11(w, 4).size();
  EXPECT_EQ(n, next_fit_count(w, 4));
  EXPECT_NEAR(double(n), 110.0, 2.0);
}

TEST(Packing, CentralSweepOnSymmetricRange) {
  const std::vector<int> w = symmetric_range(20);
  const auto sweep = central_weight_sweep(w, 4, 1, 8);
  ASSERT_EQ(sweep.size(), 8u);
  const std::vector<std::size_t> frozen = {110, 110, 110, 109, 110, 109, 110, 108};
  std::size_t best = SIZE_MAX;
  for (std::size_t k = 0; k < sweep.size(); ++k) {
    EXPECT_EQ(sweep[k].central_weight, int(k) + 1);
    EXPECT_EQ(sweep[k].neurons, frozen[k]);
    best = std::min(best, sweep[k].neurons);
  }
  EXPECT_LE(best, pack_weights_s11(w, 4).size());
  EXPECT_GE(best, 105u);
  EXPECT_LE(best, 110u);
}

TEST(Packing, CentralOrderMatchesOracle) {
  const std::vector<int> w = symmetric_range(20);
  for (int cw = 0; cw <= 10; ++cw) {
    std::vector<int> sorted = w;
    std::stable_sort(sorted.begin(), sorted.end(), [&](int a, int b) {
      const int da = std::abs(a - cw), db = std::abs(b - cw);
      return da != db ? da < db : a < b;
    });
    EXPECT_EQ(pack_weights_s12(w, 4, cw).size(), next_fit_count(sorted, 4)) << "cw " << cw;
  }
}

TEST(Packing, SingleWeightIgnoresCentralWeight) {
  for (int w : {1, 3, 9, 17})
    for (int cw = 0; cw < 12; ++cw) EXPECT_EQ(pack_weights_s12({w}, 4, cw).size(), pack_weights_s11({w}, 4).size());
}

TEST(Packing, ConservationOnRandomInputs) {
  Rng rng = make_rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int ta = 1 + int(uniform_below(rng, 40));
    std::vector<int> w(1 + uniform_below(rng, 60));
    for (int& x : w) x = int(uniform_below(rng, 201)) - 100;
    const Packing a = pack_weights_s11(w, ta);
    const Packing b = pack_weights_s12(w, ta, int(uniform_below(rng, 2 * ta + 1)));
    const Packing c = pack_weights_unpacked(w, ta);
    EXPECT_TRUE(check_packing(w, a, ta).empty());
    EXPECT_TRUE(check_packing(w, b, ta).empty());
    EXPECT_TRUE(check_packing(w, c, ta).empty());
    EXPECT_EQ(a.size(), next_fit_count(w, ta));
    EXPECT_LE(a.size(), c.size());
    for (const auto& n : a) {
      EXPECT_LE(n.total(), ta);
      EXPECT_LE(n.distinct_values(), 4);
    }
  }
}

TEST(Packing, CheckerCatchesDamage) {
  Packing p = pack_weights_s11({5, 3}, 4);
  p.back().chunks.back().value += 1;
  EXPECT_FALSE(check_packing({5, 3}, p, 4).empty());
  Packing over = {PackedNeuron{{{0, 3}, {1, 3}}}};
  EXPECT_FALSE(check_packing({3, 3}, over, 4).empty());
}

TEST(CorePacking, ExactFits) {
  const std::vector<Footprint> g(5, Footprint{256, 10});
  EXPECT_EQ(pack_cores_s3(g, {256, 256}, PackKey::neurons).size(), 5u);
  const auto cores = pack_cores_s3({{200, 1}, {56, 1}, {100, 1}}, {256, 256}, PackKey::neurons);
  ASSERT_EQ(cores.size(), 2u);
  EXPECT_EQ(cores[0], (std::vector<int>{0, 1}));
  EXPECT_EQ(cores[1], (std::vector<int>{2}));
}

TEST(CorePacking, NeverWorseThanOnePerCore) {
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Footprint> g(1 + uniform_below(rng, 40));
    for (auto& f : g) f = {1 + int(uniform_below(rng, 256)), 1 + int(uniform_below(rng, 256))};
    for (PackKey key : {PackKey::neurons, PackKey::axons}) {
      const auto cores = pack_cores_s3(g, {256, 256}, key);
      EXPECT_LE(cores.size(), g.size());
      std::vector<int> seen;
      for (const auto& core : cores) {
        int n = 0, a = 0;
        for (int i : core) {
          n += g[std::size_t(i)].neurons;
          a += g[std::size_t(i)].axons;
          seen.push_back(i);
        }
        EXPECT_LE(n, 256);
        EXPECT_LE(a, 256);
      }
      std::sort(seen.begin(), seen.end());
      std::vector<int> all(g.size());
      std::iota(all.begin(), all.end(), 0);
      EXPECT_EQ(seen, all);
    }
    EXPECT_LE(pack_cores_s3(g, {256, 256}, PackKey::neurons).size(), pack_cores_sequential(g, {256, 256}).size() + 1);
  }
  EXPECT_THROW(pack_cores_s3({{300, 1}}, {256, 256}, PackKey::neurons), std::invalid_argument);
}

UnitDemand demand(int unit, const std::vector<std::pair<int, int>>& inputs) {
  UnitDemand d;
  d.unit = unit;
  StageTwoNeuronSpec n;
  n.dest = unit;
  n.inputs = inputs;
  d.neurons.push_back(n);
  return d;
}

std::size_t axon_total(const std::vector<StageTwoCorePlan>& plan) {
  std::size_t n = 0;
  for (const auto& c : plan) n += c.axons.size();
  return n;
}

TEST(UnitPacking, IdenticalPatchesShareAxons) {
  const std::vector<std::pair<int, int>> in = {{0, 2}, {1, 3}, {2, 1}};
  const auto shared = pack_units_s2({demand(0, in), demand(1, in)}, 3, true);
  ASSERT_EQ(shared.size(), 1u);
  EXPECT_EQ(shared[0].axons.size(), 3u);
  const auto separate = pack_units_s2({demand(0, in), demand(1, in)}, 3, false);
  EXPECT_EQ(axon_total(separate), 6u);
}

TEST(UnitPacking, DisjointPatchesDoNotShare) {
  const auto plan = pack_units_s2({demand(0, {{0, 2}, {1, 3}}), demand(1, {{2, 2}, {3, 1}})}, 4, true);
  EXPECT_EQ(axon_total(plan), 4u);
}

TEST(UnitPacking, PrefersUnitWithMostSharedSources) {
  // Unit 2 overlaps unit 0 completely, unit 1 not at all; with a two-unit
  // capacity the core should hold units 0 and 2.
  const auto plan = pack_units_s2({demand(0, {{0, 1}, {1, 1}}), demand(1, {{2, 1}, {3, 1}}),
                                   demand(2, {{0, 1}, {1, 1}})},
                                  4, true, 256, 2);
  ASSERT_EQ(plan.size(), 2u);
  EXPECT_EQ(plan[0].units, (std::vector<int>{0, 2}));
}

// ---------------------------------------------------------------------------
// Network-level checks from routes and crossbars only.

struct Source {
  int layer = 0;  // 0 visible, 1 hidden, 2 bias
  int unit = 0;
  auto operator<=>(const Source&) const = default;
};

struct Conservation {
  std::map<std::pair<Source, std::pair<int, int>>, long> sums;  // (source, (dest layer, dest unit))
  int max_quantizer_total = 0;
  int bad_signs = 0;
};

Conservation walk(const PlacedNetwork& p) {
  const Network& net = p.network;
  std::map<NeuronAddress, Source> splitter_unit;
  for (int l = 0; l < 2; ++l)
    for (const auto& u : l == 0 ? p.visible : p.hidden)
      for (const auto& s : u.splitter) splitter_unit[s] = {l, u.index};
  std::map<AxonAddress, Source> axon_source;
  std::map<NeuronAddress, AxonAddress> route_of;
  for (const auto& r : net.routes) {
    route_of[r.source] = r.target;
    auto it = splitter_unit.find(r.source);
    if (it != splitter_unit.end()) axon_source[r.target] = it->second;
  }
  for (const char* name : {"bias/visible", "bias/hidden"}) {
    auto it = net.inputs.find(name);
    if (it == net.inputs.end()) continue;
    for (const auto& a : it->second) axon_source[a] = {2, 0};
  }
  Conservation c;
  for (int l = 0; l < 2; ++l)
    for (const auto& u : l == 0 ? p.visible : p.hidden)
      for (const auto& q : u.quantizers) {
        const AxonAddress t = route_of.at(q);
        const int sign = net.cores[std::size_t(t.core)].effective_weight(t.axon, u.sampler.neuron);
        if (std::abs(sign) != 1 || t.core != u.sampler.core) ++c.bad_signs;
        int total = 0;
        for (const Synapse& s : net.cores[std::size_t(q.core)].intended) {
          if (s.neuron != q.neuron) continue;
          total += s.weight;
          c.sums[{axon_source.at({q.core, s.axon}), {l, u.index}}] += long(sign) * s.weight;
        }
        c.max_quantizer_total = std::max(c.max_quantizer_total, total);
      }
  return c;
}

void expect_conserved(const PlacedNetwork& p, const QuantizedRbm& q) {
  const Conservation c = walk(p);
  EXPECT_EQ(c.bad_signs, 0);
  EXPECT_LE(c.max_quantizer_total, p.config.accumulation);
  auto sum = [&](Source s, int layer, int unit) {
    auto it = c.sums.find({s, {layer, unit}});
    return it == c.sums.end() ? 0L : it->second;
  };
  for (Index i = 0; i < q.n_visible(); ++i)
    for (Index j = 0; j < q.n_hidden(); ++j) {
      EXPECT_EQ(sum({0, int(i)}, 1, int(j)), q.weights(i, j)) << i << "->h" << j;
      EXPECT_EQ(sum({1, int(j)}, 0, int(i)), q.weights(i, j)) << "h" << j << "->" << i;
    }
  for (Index j = 0; j < q.n_hidden(); ++j) EXPECT_EQ(sum({2, 0}, 1, int(j)), q.hidden_bias(j));
  for (Index i = 0; i < q.n_visible(); ++i) EXPECT_EQ(sum({2, 0}, 0, int(i)), q.visible_bias(i));
}

void expect_structurally_valid(const PlacedNetwork& p) {
  EXPECT_TRUE(validate_network(p.network).empty());
  std::set<NeuronAddress> routed;
  for (const auto& r : p.network.routes) EXPECT_TRUE(routed.insert(r.source).second);
  for (const auto& core : p.network.cores) {
    EXPECT_LE(core.axon_count(), kCoreSize);
    EXPECT_LE(core.neuron_count(), kCoreSize);
  }
}

CompileConfig small_config(int scale, int ta) {
  CompileConfig c;
  c.sampler = preset_config("G4");
  c.sampler.scale = scale;
  c.accumulation = ta;
  return c;
}

QuantizedRbm three_input_model() {
  QuantizedRbm q;
  q.scale = 50;
  q.weights.resize(3, 1);
  q.weights << 7, -12, -2;
  q.visible_bias = IntVector::Zero(3);
  q.hidden_bias = IntVector::Constant(1, 10);
  q.mask = Mask::Ones(3, 1);
  return q;
}

TEST(Compile, ThreeToOneExample) {
  const QuantizedRbm q = three_input_model();
  for (auto strategy : {PackingStrategy::none, PackingStrategy::sequential, PackingStrategy::central}) {
    CompileConfig cfg = small_config(50, 8);
    cfg.packing = strategy;
    const PlacedNetwork p = compile(q, cfg);
    expect_structurally_valid(p);
    expect_conserved(p, q);
    const auto& h = p.hidden[0];
    // 7 | 8+4 | 2 | bias 8+2 needs at least ceil(31 / 8) = 4 neurons and at most the unpacked 6.
    EXPECT_GE(h.quantizers.size(), 4u);
    EXPECT_LE(h.quantizers.size(), 6u);
    if (strategy == PackingStrategy::none) {
      EXPECT_EQ(h.quantizers.size(), 6u);
    }
  }
}

TEST(Compile, ZeroModelKeepsStagesOneAndThree) {
  QuantizedRbm q;
  q.scale = 50;
  q.weights = IntMatrix::Zero(4, 3);
  q.visible_bias = IntVector::Zero(4);
  q.hidden_bias = IntVector::Zero(3);
  q.mask = Mask::Ones(4, 3);
  const PlacedNetwork p = compile(q, small_config(50, 8));
  expect_structurally_valid(p);
  EXPECT_EQ(p.report.stage[1].cores, 0);
  EXPECT_EQ(p.report.stage[1].neurons, 0u);
  EXPECT_GT(p.report.stage[0].cores, 0);
  EXPECT_GT(p.report.stage[2].cores, 0);
  for (const auto* layer : {&p.visible, &p.hidden})
    for (const auto& u : *layer) {
      EXPECT_FALSE(u.splitter.empty());
      EXPECT_TRUE(u.quantizers.empty());
    }
}

TEST(Compile, EmptyModelUsesNoCores) {
  QuantizedRbm q;
  q.scale = 50;
  q.weights = IntMatrix::Zero(0, 0);
  q.visible_bias = IntVector::Zero(0);
  q.hidden_bias = IntVector::Zero(0);
  q.mask = Mask::Ones(0, 0);
  const PlacedNetwork p = compile(q, small_config(50, 8));
  EXPECT_EQ(p.report.total_cores, 0);
  EXPECT_EQ(resource_report(p).total_cores, 0);
  EXPECT_EQ(p.report.chip_utilization, 0.0);
}

QuantizedRbm random_patched(int side, int patch, double wsd, std::uint64_t seed, int scale = 50) {
  Rng rng = make_rng(seed);
  Rbm m(side * side, (side - patch + 1) * (side - patch + 1));
  m.mask = patch_mask(side, patch);
  for (Index i = 0; i < m.n_visible(); ++i) {
    m.visible_bias(i) = 0.2 * normal01(rng);
    for (Index j = 0; j < m.n_hidden(); ++j) m.weights(i, j) = m.mask(i, j) ? wsd * normal01(rng) : 0.0;
  }
  for (Index j = 0; j < m.n_hidden(); ++j) m.hidden_bias(j) = 0.2 * normal01(rng);
  return quantize(m, scale);
}

TEST(Compile, RandomModelsConserveWeightsAndValidate) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const QuantizedRbm q = random_patched(6, 3, 0.15, seed);
    for (auto strategy : {PackingStrategy::none, PackingStrategy::sequential, PackingStrategy::central})
      for (bool share : {false, true}) {
        CompileConfig cfg = small_config(50, 8);
        cfg.packing = strategy;
        cfg.axon_sharing = share;
        cfg.core_packing = share;
        const PlacedNetwork p = compile(q, cfg);
        expect_structurally_valid(p);
        expect_conserved(p, q);
      }
  }
}

TEST(Compile, StageOneFanOutMatchesStageTwoAxons) {
  const QuantizedRbm q = random_patched(6, 3, 0.15, 9);
  const PlacedNetwork p = compile(q, small_config(50, 8));
  std::map<NeuronAddress, int> stage;
  for (int c = 0; c < int(p.network.cores.size()); ++c)
    for (int n = 0; n < p.network.cores[std::size_t(c)].neuron_count(); ++n) stage[{c, n}] = p.core_stage[std::size_t(c)];
  for (const auto* layer : {&p.visible, &p.hidden})
    for (const auto& u : *layer) {
      std::size_t routed_to_stage2 = 0;
      for (const auto& s : u.splitter)
        for (const auto& r : p.network.routes)
          if (r.source == s && p.core_stage[std::size_t(r.target.core)] == 2) ++routed_to_stage2;
      EXPECT_EQ(routed_to_stage2, u.quantizers.empty() && u.splitter.size() == 1 ? routed_to_stage2 : u.splitter.size());
    }
}

TEST(Compile, StrategyOrdering) {
  const QuantizedRbm q = random_patched(12, 4, 0.1, 3);
  CompileConfig none = small_config(50, 32);
  none.packing = PackingStrategy::none;
  none.axon_sharing = false;
  none.core_packing = false;
  CompileConfig s11 = small_config(50, 32);
  s11.packing = PackingStrategy::sequential;
  CompileConfig s12 = small_config(50, 32);
  s12.packing = PackingStrategy::central;
  const int a = compile(q, none).report.total_cores;
  const int b = compile(q, s11).report.total_cores;
  const PlacedNetwork best = compile(q, s12);
  EXPECT_GT(a, b);
  EXPECT_GE(b, best.report.total_cores);
  EXPECT_GE(best.report.central_weight, 1);
  EXPECT_LE(best.report.central_weight, 64);
}

TEST(Compile, AxonSharingSavesStageTwoCores) {
  const QuantizedRbm q = random_patched(28, 8, 0.08, 4);
  CompileConfig on = small_config(50, 32);
  CompileConfig off = on;
  off.axon_sharing = false;
  on.central_weight = off.central_weight = 8;
  const PlacedNetwork a = compile(q, on);
  const PlacedNetwork b = compile(q, off);
  EXPECT_LT(a.report.stage[1].cores, b.report.stage[1].cores);
  EXPECT_TRUE(validate_network(a.network).empty());
}

TEST(Compile, Deterministic) {
  const QuantizedRbm q = random_patched(6, 3, 0.15, 5);
  const CompileConfig cfg = small_config(50, 8);
  EXPECT_EQ(network_to_json(compile(q, cfg).network), network_to_json(compile(q, cfg).network));
  EXPECT_EQ(placement_to_json(compile(q, cfg)), placement_to_json(compile(q, cfg)));
}

TEST(Compile, Errors) {
  const QuantizedRbm q = three_input_model();
  EXPECT_THROW(compile(q, small_config(10, 8)), std::invalid_argument);
  CompileConfig cfg = small_config(50, 8);
  cfg.c_minus = -4;  // shorter than the window
  EXPECT_THROW(compile(q, cfg), std::invalid_argument);
  cfg.c_minus = -300;
  EXPECT_THROW(compile(q, cfg), std::invalid_argument);
  cfg = small_config(50, 240);
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(50, 0);
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  QuantizedRbm wide;
  wide.scale = 50;
  wide.weights = IntMatrix::Constant(300, 1, 50);
  wide.visible_bias = IntVector::Zero(300);
  wide.hidden_bias = IntVector::Zero(1);
  wide.mask = Mask::Ones(300, 1);
  EXPECT_THROW(compile(wide, small_config(50, 8)), std::invalid_argument);
}

TEST(Report, CountsAndSerialization) {
  const QuantizedRbm q = random_patched(6, 3, 0.15, 6);
  const PlacedNetwork p = compile(q, small_config(50, 8));
  const ResourceReport& r = p.report;
  EXPECT_EQ(r.total_cores, r.stage[0].cores + r.stage[1].cores + r.stage[2].cores);
  EXPECT_EQ(r.total_cores, int(p.network.cores.size()));
  EXPECT_EQ(r.total_neurons, p.network.neuron_count());
  EXPECT_DOUBLE_EQ(r.chip_utilization, 100.0 * r.total_cores / 4096.0);
  const ResourceReport again = resource_report(p);
  EXPECT_EQ(again.total_cores, r.total_cores);
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_EQ(j.at("total_cores").get<int>(), r.total_cores);
  EXPECT_NE(r.to_csv().find('\n'), std::string::npos);
  const auto placement = nlohmann::json::parse(placement_to_json(p));
  EXPECT_EQ(placement.at("format").get<std::string>(), "spikerbm-placement");
}

TEST(Timing, WindowsFreeOfDataAndFramesAligned) {
  Rng rng = make_rng(7);
  const Rbm model = random_rbm(6, 4, 1.0, 0.5, rng);
  CompileConfig cfg;
  cfg.sampler.scale = 10;
  cfg.sampler.window = 4;
  cfg.sampler.threshold = 0;
  cfg.sampler.threshold_bits = 5;
  cfg.sampler.leak = 7;
  cfg.accumulation = 8;
  const PlacedNetwork p = compile(quantize(model, 10), cfg);
  expect_structurally_valid(p);
  PlacedChain chain(p, SimOptions{3, LeakProbability::half});
  chain.start(BinaryVector::Zero(6));
  for (int k = 0; k < 2000; ++k) chain.next();
  EXPECT_EQ(chain.window_input_violations(), 0u);
  EXPECT_EQ(chain.frame_violations(), 0u);
  EXPECT_EQ(chain.simulator().tick(), p.schedule.visible_frame(2000) + 1);
}

TEST(Timing, ControlScheduleIsPeriodic) {
  const PlacedNetwork p = compile(three_input_model(), small_config(50, 8));
  const ControlSchedule& s = p.schedule;
  EXPECT_EQ(s.image_period, schedule_period(p.config).image);
  std::vector<AxonAddress> a, b;
  for (std::int64_t t = 1; t < 3 * s.image_period; ++t) {
    a.clear();
    b.clear();
    s.events(t + s.first_visible_frame, a);
    s.events(t + s.first_visible_frame + s.image_period, b);
    EXPECT_EQ(a, b) << t;
  }
  a.clear();
  s.events(0, a);
  EXPECT_EQ(a, s.startup);
}

}  // namespace
}  // namespace spikerbm
