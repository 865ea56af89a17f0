#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spikerbm/sampler.hpp"

namespace spikerbm {

constexpr int kCoreSize = 256;   // axons and neurons per core
constexpr int kWeightMin = -256;  // signed 9-bit
constexpr int kWeightMax = 255;

enum class ResetMode { to_value, linear, none };

const char* to_string(ResetMode mode);
ResetMode reset_mode_from_string(const std::string& s);

struct NeuronParams {
  std::array<int, 4> weights{};  // one per axon type
  int leak = 0;
  bool stochastic_leak = false;  // leak of +-1 with probability |leak|/256-ish instead of leak itself
  int threshold = 1;             // base threshold, >= 0
  int threshold_bits = 0;        // threshold gets a uniform offset in [0, 2^bits - 1]
  int reset_value = 0;
  ResetMode reset_mode = ResetMode::to_value;
  std::optional<int> neg_saturation;
  std::optional<int> pos_saturation;

  bool operator==(const NeuronParams&) const = default;
};

// The weight a connection is meant to carry. Cores built by the compiler keep
// this record so the validator can check the crossbar and type tables realize it.
struct Synapse {
  int axon = 0;
  int neuron = 0;
  int weight = 0;
};

struct Core {
  std::string label;
  std::vector<std::uint8_t> axon_types;                // one per axon in use
  std::vector<std::bitset<kCoreSize>> crossbar;        // row per axon, bit per neuron
  std::vector<NeuronParams> neurons;
  std::vector<Synapse> intended;

  int axon_count() const { return int(axon_types.size()); }
  int neuron_count() const { return int(neurons.size()); }
  int add_axon(int type);
  int add_neuron(const NeuronParams& p);
  void connect(int axon, int neuron, std::optional<int> intended_weight = {});
  int effective_weight(int axon, int neuron) const {
    return neurons[std::size_t(neuron)].weights[axon_types[std::size_t(axon)]];
  }
};

struct AxonAddress {
  int core = 0;
  int axon = 0;
  bool operator==(const AxonAddress&) const = default;
  auto operator<=>(const AxonAddress&) const = default;
};

struct NeuronAddress {
  int core = 0;
  int neuron = 0;
  bool operator==(const NeuronAddress&) const = default;
  auto operator<=>(const NeuronAddress&) const = default;
};

struct Route {
  NeuronAddress source;
  AxonAddress target;
};

struct Network {
  std::vector<Core> cores;
  std::vector<Route> routes;
  std::map<std::string, std::vector<AxonAddress>> inputs;  // named external-input axons

  std::size_t neuron_count() const;
};

struct Violation {
  int core = -1;
  int axon = -1;
  int neuron = -1;
  std::string message;
  std::string describe() const;
};

std::vector<Violation> validate_core(const Core& core, int core_index = 0);
// validate_core on every core plus routing checks (dangling targets, multiple routes).
std::vector<Violation> validate_network(const Network& net);

// Network file: versioned JSON.
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);
void save_network(const std::filesystem::path& path, const Network& net);
Network load_network(const std::filesystem::path& path);

struct SimOptions {
  std::uint64_t seed = 1;
  LeakProbability leak_mode = LeakProbability::hardware;
};

struct SpikeEvent {
  int core = 0;
  int neuron = 0;
};

// Tick-accurate executor. Per tick: gather this tick's active axons (spikes
// routed during the previous tick plus external events), integrate, then per
// neuron leak, threshold, spike and reset, clipping to the saturations after
// each update. Emitted spikes reach their target axon on the next tick.
// Random draws are hashes of (seed, core, neuron, tick), so results do not
// depend on evaluation order.
class Simulator {
 public:
  Simulator(const Network& net, SimOptions opts = {});

  // Advances one tick and returns the spikes emitted in it, sorted by (core, neuron).
  const std::vector<SpikeEvent>& step(const std::vector<AxonAddress>& external = {});

  std::int64_t tick() const { return tick_; }
  int potential(NeuronAddress n) const;
  // Axons that were active in the most recent tick, sorted.
  const std::vector<AxonAddress>& last_active_axons() const { return active_; }
  // Direct potential write for debugging only; experiments initialize
  // potentials through weighted axon events.
  void debug_set_potential(NeuronAddress n, int value);

 private:
  struct CoreRuntime {
    std::vector<std::vector<std::uint16_t>> fanout;  // axon -> connected neurons
    std::vector<AxonAddress> route;                   // neuron -> target axon, core -1 when none
    std::vector<std::int32_t> potential;
    std::vector<std::int64_t> input;
    std::vector<std::uint8_t> touched;
  };

  const Network& net_;
  SimOptions opts_;
  std::vector<CoreRuntime> cores_;
  std::vector<AxonAddress> pending_;
  std::vector<AxonAddress> active_;
  std::vector<SpikeEvent> emitted_;
  std::int64_t tick_ = 0;

  void check_axon(const AxonAddress& a) const;
};

struct SpikeRecord {
  std::int64_t tick = 0;
  int core = 0;
  int neuron = 0;
};

struct PotentialRecord {
  std::int64_t tick = 0;
  int core = 0;
  int neuron = 0;
  int potential = 0;
};

struct TickTrace {
  std::vector<SpikeRecord> spikes;
  std::vector<PotentialRecord> potentials;
  std::string spikes_csv() const;
  std::string potentials_csv() const;
};

// External events for a tick are appended to `out`.
using EventSource = std::function<void(std::int64_t tick, std::vector<AxonAddress>& out)>;

TickTrace run(const Network& net, const EventSource& schedule, std::int64_t n_ticks,
              const std::vector<NeuronAddress>& probes = {}, SimOptions opts = {});

}  // namespace spikerbm
