#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "spikerbm/compiler.hpp"
#include "spikerbm/substrate.hpp"

namespace spikerbm {
namespace {

NeuronParams unit_neuron() {
  NeuronParams p;
  p.weights = {1, 0, 0, 0};
  p.threshold = 1;
  return p;
}

NeuronParams leak_neuron() {
  NeuronParams p;
  p.leak = 128;
  p.stochastic_leak = true;
  p.threshold = 1;
  p.reset_value = 0;
  return p;
}

double sigma(double p, int n) { return std::sqrt(p * (1 - p) / n); }

TEST(Step, UnitThresholdFiresAndResets) {
  Network net;
  net.cores.emplace_back();
  Core& c = net.cores[0];
  NeuronParams p = unit_neuron();
  p.reset_value = -3;
  c.add_neuron(p);
  c.connect(c.add_axon(0), 0, 1);
  Simulator sim(net);
  EXPECT_EQ(sim.step({{0, 0}}).size(), 1u);
  EXPECT_EQ(sim.potential({0, 0}), -3);
  EXPECT_TRUE(sim.step().empty());
}

TEST(Step, StochasticLeakRate) {
  for (auto mode : {LeakProbability::hardware, LeakProbability::half}) {
    Network net;
    net.cores.emplace_back();
    net.cores[0].add_neuron(leak_neuron());
    Simulator sim(net, SimOptions{3, mode});
    const int n = 100000;
    int spikes = 0;
    for (int t = 0; t < n; ++t) spikes += int(sim.step().size());
    const double p = mode == LeakProbability::hardware ? 129.0 / 256.0 : 0.5;
    EXPECT_NEAR(spikes / double(n), p, 3 * sigma(p, n)) << to_string(mode);
  }
}

TEST(Step, LinearDecrementStreamsCharge) {
  Network net;
  net.cores.emplace_back();
  Core& c = net.cores[0];
  NeuronParams p;
  p.weights = {6, 0, 0, 0};
  p.threshold = 1;
  p.reset_mode = ResetMode::linear;
  c.add_neuron(p);
  c.connect(c.add_axon(0), 0, 6);
  const TickTrace tr = run(net, [](std::int64_t t, std::vector<AxonAddress>& out) {
    if (t == 0) out.push_back({0, 0});
  }, 20);
  ASSERT_EQ(tr.spikes.size(), 6u);
  for (int k = 0; k < 6; ++k) EXPECT_EQ(tr.spikes[std::size_t(k)].tick, k);
}

TEST(Step, RoutingToMissingAxon) {
  Network net;
  net.cores.emplace_back();
  net.cores[0].add_neuron(unit_neuron());
  net.cores[0].add_axon(0);
  Simulator sim(net);
  EXPECT_THROW(sim.step({{0, 5}}), std::out_of_range);
  EXPECT_THROW(sim.step({{2, 0}}), std::out_of_range);
  net.routes.push_back({{0, 0}, {0, 9}});
  EXPECT_THROW(Simulator{net}, std::out_of_range);
}

TEST(Run, EmptyNetworkEmptyTrace) {
  const TickTrace tr = run(Network{}, {}, 100);
  EXPECT_TRUE(tr.spikes.empty());
  EXPECT_TRUE(tr.potentials.empty());
  EXPECT_THROW(run(Network{}, {}, 0), std::invalid_argument);
}

TEST(Run, SelfLoopFiresEveryTick) {
  Network net;
  net.cores.emplace_back();
  Core& c = net.cores[0];
  c.add_neuron(unit_neuron());
  c.connect(c.add_axon(0), 0, 1);
  net.routes.push_back({{0, 0}, {0, 0}});
  const TickTrace tr = run(net, [](std::int64_t t, std::vector<AxonAddress>& out) {
    if (t == 3) out.push_back({0, 0});
  }, 50);
  ASSERT_EQ(tr.spikes.size(), 47u);
  for (std::size_t k = 0; k < tr.spikes.size(); ++k) EXPECT_EQ(tr.spikes[k].tick, std::int64_t(k) + 3);
}

// Leak neuron -> sampler neuron -> refractory neuron. Tick 0 drives the sampler
// to -sat, where no threshold can be met; tick 1 adds sat + V_init through
// 1 / +32 / -32 axons together with the first leak spike, so tick 1 is the
// first window tick. Window tick k shows up at the refractory neuron on k + 1.
struct SamplerBlock {
  Network net;
  int refractory = 2;
  int sat = 0;
  std::vector<int> unit_axons, up_axons, down_axons;

  explicit SamplerBlock(const SamplerConfig& cfg) {
    sat = cfg.saturation_potential();
    net.cores.emplace_back();
    Core& c = net.cores[0];
    const int leak = c.add_neuron(leak_neuron());
    NeuronParams s;
    s.weights = {cfg.leak, 1, 32, -32};
    s.threshold = cfg.threshold;
    s.threshold_bits = cfg.threshold_bits;
    s.reset_mode = ResetMode::none;
    s.pos_saturation = cfg.saturation_potential();
    s.neg_saturation = -cfg.saturation_potential();
    const int sampler = c.add_neuron(s);
    NeuronParams r = unit_neuron();
    r.reset_value = -cfg.window;
    r.neg_saturation = -cfg.window;
    refractory = c.add_neuron(r);
    const int leak_axon = c.add_axon(0);
    c.connect(leak_axon, sampler, cfg.leak);
    net.routes.push_back({{0, leak}, {0, leak_axon}});
    const int sampler_axon = c.add_axon(0);
    c.connect(sampler_axon, refractory, 1);
    net.routes.push_back({{0, sampler}, {0, sampler_axon}});
    for (int k = 0; k < 31; ++k) c.connect(unit_axons.emplace_back(c.add_axon(1)), sampler, 1);
    const int steps = 2 * cfg.saturation_potential() / 32 + 1;
    for (int k = 0; k < steps; ++k) c.connect(up_axons.emplace_back(c.add_axon(2)), sampler, 32);
    for (int k = 0; k < steps; ++k) c.connect(down_axons.emplace_back(c.add_axon(3)), sampler, -32);
  }

  std::vector<AxonAddress> charge(int v) const {
    std::vector<AxonAddress> out;
    int q = int(std::floor(v / 32.0));
    const int rem = v - 32 * q;
    for (int k = 0; k < rem; ++k) out.push_back({0, unit_axons[std::size_t(k)]});
    for (int k = 0; k < std::abs(q); ++k) out.push_back({0, (q > 0 ? up_axons : down_axons)[std::size_t(k)]});
    return out;
  }

  // Spikes of the refractory neuron over the window that follows the charge tick.
  int trial(int v, int window, SimOptions opts) const {
    Simulator sim(net, opts);
    sim.step(charge(-sat));
    int out = 0;
    for (int t = 1; t <= window + 1; ++t)
      for (const auto& s : sim.step(t == 1 ? charge(sat + v) : std::vector<AxonAddress>{}))
        if (s.neuron == refractory) ++out;
    return out;
  }
};

TEST(SamplerBlock, ChargeIsExact) {
  const SamplerConfig cfg = preset_config("G4");
  SamplerBlock b(cfg);
  for (int v : {-590, -33, -1, 0, 1, 31, 32, 79, 590}) {
    Simulator sim(b.net);
    sim.step(b.charge(-590));
    EXPECT_EQ(sim.potential({0, 1}), -590);
    sim.step(b.charge(590 + v));
    // The tick-0 leak spike may have landed too.
    const int got = sim.potential({0, 1});
    EXPECT_TRUE(got == v || got == std::min(v + cfg.leak, 590)) << v << " " << got;
  }
  Simulator sim(b.net);
  sim.step(b.charge(1180));
  EXPECT_EQ(sim.potential({0, 1}), 590);
}

TEST(SamplerBlock, RateMatchesCurve) {
  for (const char* name : {"G2", "G4"}) {
    const SamplerConfig cfg = preset_config(name);
    const SpikeProbabilityCurve curve = spike_probability_curve(cfg);
    const SamplerBlock block(cfg);
    const int trials = 10000;
    const int sat = cfg.saturation_potential();
    int points = 0, outside = 0;
    for (int v = -sat; v <= sat; v += 37) {
      int hits = 0;
      for (int k = 0; k < trials; ++k) {
        const int n = block.trial(v, cfg.window, {derive_seed(std::uint64_t(v + 10000), std::uint64_t(k)),
                                                  LeakProbability::half});
        ASSERT_LE(n, 1);
        hits += n;
      }
      const double p = curve(v);
      ++points;
      if (std::abs(hits / double(trials) - p) > 3 * sigma(p, trials) + 1e-12) ++outside;
    }
    EXPECT_LE(outside, points / 100) << name;
  }
}

TEST(Validate, EmptyCoreClean) { EXPECT_TRUE(validate_core(Core{}).empty()); }

TEST(Validate, FiveDistinctWeightsRejected) {
  Core c;
  NeuronParams p;
  p.weights = {1, 2, 3, 4};
  c.add_neuron(p);
  for (int w = 1; w <= 5; ++w) c.connect(c.add_axon((w - 1) % 4), 0, w);
  const auto v = validate_core(c);
  ASSERT_FALSE(v.empty());
  bool pigeonhole = false;
  for (const auto& x : v) pigeonhole |= x.message.find("distinct weights") != std::string::npos;
  EXPECT_TRUE(pigeonhole);
}

TEST(Validate, InexpressibleAndOverflow) {
  Core c;
  NeuronParams p;
  p.weights = {1, 2, 3, 300};
  p.threshold = 5;
  p.threshold_bits = 4;
  p.pos_saturation = 10;
  c.add_neuron(p);
  c.connect(c.add_axon(0), 0, 2);
  const auto v = validate_core(c);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_THROW(c.add_axon(4), std::invalid_argument);
  EXPECT_THROW(c.connect(7, 0), std::out_of_range);
}

TEST(Validate, RoutingChecks) {
  Network net;
  net.cores.emplace_back();
  net.cores[0].add_neuron(unit_neuron());
  net.cores[0].add_axon(0);
  net.routes.push_back({{0, 0}, {0, 0}});
  EXPECT_TRUE(validate_network(net).empty());
  net.routes.push_back({{0, 0}, {0, 0}});
  net.routes.push_back({{0, 0}, {1, 0}});
  net.inputs["x"] = {{0, 3}};
  EXPECT_EQ(validate_network(net).size(), 4u);
}

TEST(Validate, CompiledRandomModelIsClean) {
  Rng rng = make_rng(5);
  const QuantizedRbm q = quantize(random_rbm(6, 4, 1.0, 0.5, rng), 10);
  CompileConfig cfg;
  cfg.sampler = preset_config("G2");
  cfg.sampler.scale = 10;
  cfg.accumulation = 8;
  const PlacedNetwork placed = compile(q, cfg);
  EXPECT_TRUE(validate_network(placed.network).empty());
}

Network random_network(std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Network net;
  for (int c = 0; c < 3; ++c) {
    Core& core = net.cores.emplace_back();
    for (int n = 0; n < 20; ++n) {
      NeuronParams p;
      for (auto& w : p.weights) w = int(uniform_below(rng, 21)) - 10;
      p.leak = int(uniform_below(rng, 7)) - 3;
      p.stochastic_leak = uniform_below(rng, 2);
      p.threshold = 1 + int(uniform_below(rng, 20));
      p.threshold_bits = int(uniform_below(rng, 4));
      p.reset_mode = ResetMode(uniform_below(rng, 3));
      p.neg_saturation = -int(uniform_below(rng, 50));
      p.pos_saturation = p.threshold + (1 << p.threshold_bits) + int(uniform_below(rng, 30));
      core.add_neuron(p);
    }
    for (int a = 0; a < 30; ++a) {
      const int axon = core.add_axon(int(uniform_below(rng, 4)));
      for (int n = 0; n < 20; ++n)
        if (bernoulli(rng, 0.3)) core.connect(axon, n);
    }
  }
  for (int c = 0; c < 3; ++c)
    for (int n = 0; n < 20; ++n)
      if (bernoulli(rng, 0.7)) net.routes.push_back({{c, n}, {int(uniform_below(rng, 3)), int(uniform_below(rng, 30))}});
  return net;
}

EventSource random_events(std::uint64_t seed) {
  return [seed](std::int64_t t, std::vector<AxonAddress>& out) {
    for (int k = 0; k < 5; ++k) {
      const std::uint64_t h = counter_hash(seed, std::uint64_t(t), std::uint64_t(k), 0);
      if (h % 3 == 0) out.push_back({int((h >> 8) % 3), int((h >> 16) % 30)});
    }
  };
}

std::vector<NeuronAddress> all_neurons() {
  std::vector<NeuronAddress> out;
  for (int c = 0; c < 3; ++c)
    for (int n = 0; n < 20; ++n) out.push_back({c, n});
  return out;
}

TEST(Properties, DeterministicTrace) {
  const Network net = random_network(6);
  const TickTrace a = run(net, random_events(7), 500, all_neurons(), {11});
  const TickTrace b = run(net, random_events(7), 500, all_neurons(), {11});
  EXPECT_EQ(a.spikes_csv(), b.spikes_csv());
  EXPECT_EQ(a.potentials_csv(), b.potentials_csv());
  EXPECT_FALSE(a.spikes.empty());
  const TickTrace c = run(net, random_events(7), 500, all_neurons(), {12});
  EXPECT_NE(a.spikes_csv(), c.spikes_csv());
}

TEST(Properties, SaturationBoundsAndOneSpikePerTick) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Network net = random_network(seed);
    const TickTrace tr = run(net, random_events(seed), 400, all_neurons(), {seed});
    for (const auto& p : tr.potentials) {
      const NeuronParams& np = net.cores[std::size_t(p.core)].neurons[std::size_t(p.neuron)];
      EXPECT_GE(p.potential, *np.neg_saturation);
      EXPECT_LE(p.potential, *np.pos_saturation);
    }
    std::set<std::tuple<std::int64_t, int, int>> seen;
    for (const auto& s : tr.spikes) EXPECT_TRUE(seen.insert({s.tick, s.core, s.neuron}).second);
  }
}

TEST(Properties, SubthresholdLinearity) {
  Network net;
  net.cores.emplace_back();
  Core& c = net.cores[0];
  Rng rng = make_rng(8);
  for (int n = 0; n < 10; ++n) {
    NeuronParams p;
    for (auto& w : p.weights) w = int(uniform_below(rng, 41)) - 20;
    p.threshold = 100000;
    c.add_neuron(p);
  }
  for (int a = 0; a < 12; ++a) {
    const int axon = c.add_axon(int(uniform_below(rng, 4)));
    for (int n = 0; n < 10; ++n)
      if (bernoulli(rng, 0.5)) c.connect(axon, n);
  }
  auto potentials = [&](const std::vector<int>& axons) {
    Simulator sim(net);
    for (int t = 0; t < 3; ++t) {
      std::vector<AxonAddress> ev;
      for (int a : axons) ev.push_back({0, (a + t) % 12});
      sim.step(ev);
    }
    std::vector<int> v;
    for (int n = 0; n < 10; ++n) v.push_back(sim.potential({0, n}));
    return v;
  };
  const auto a = potentials({0, 2, 4});
  const auto b = potentials({6, 8});
  const auto ab = potentials({0, 2, 4, 6, 8});
  for (int n = 0; n < 10; ++n) EXPECT_EQ(ab[std::size_t(n)], a[std::size_t(n)] + b[std::size_t(n)]);
}

TEST(NetworkFile, JsonRoundTrip) {
  Network net = random_network(9);
  net.inputs["clamp"] = {{0, 1}, {2, 3}};
  const Network back = network_from_json(network_to_json(net));
  ASSERT_EQ(back.cores.size(), net.cores.size());
  for (std::size_t c = 0; c < net.cores.size(); ++c) {
    EXPECT_EQ(back.cores[c].axon_types, net.cores[c].axon_types);
    EXPECT_EQ(back.cores[c].crossbar, net.cores[c].crossbar);
    EXPECT_TRUE(back.cores[c].neurons == net.cores[c].neurons);
  }
  EXPECT_EQ(back.routes.size(), net.routes.size());
  EXPECT_EQ(back.inputs, net.inputs);
  EXPECT_EQ(network_to_json(back), network_to_json(net));
  const TickTrace a = run(net, random_events(1), 100, {}, {4});
  const TickTrace b = run(back, random_events(1), 100, {}, {4});
  EXPECT_EQ(a.spikes_csv(), b.spikes_csv());
}

TEST(NetworkFile, RejectsForeignInput) {
  EXPECT_THROW(network_from_json("{}"), std::runtime_error);
  EXPECT_THROW(network_from_json("not json"), std::runtime_error);
  EXPECT_THROW(network_from_json(R"({"format":"spikerbm-network","version":99})"), std::runtime_error);
}

}  // namespace
}  // namespace spikerbm
