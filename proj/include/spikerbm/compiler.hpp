#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spikerbm/rbm.hpp"
#include "spikerbm/sampler.hpp"
#include "spikerbm/substrate.hpp"

namespace spikerbm {

// ---------------------------------------------------------------------------
// Weight packing onto quantization (linear-decrement) neurons.

struct WeightChunk {
  int source = 0;  // index into the packed weight list
  int value = 0;   // positive magnitude carried by this neuron for that source
};

struct PackedNeuron {
  std::vector<WeightChunk> chunks;
  int total() const;
  int distinct_values() const;
};

using Packing = std::vector<PackedNeuron>;

// Each |w| is cut into accumulation-sized chunks, largest first. A full-size
// chunk always gets its own neuron. Smaller chunks go into the open neuron
// (the latest one created for a partial chunk) when it has room and would
// still need at most 4 distinct values; otherwise they open a new neuron.
Packing pack_weights_sequential(const std::vector<int>& weights, int accumulation);
// One neuron per chunk: sum of ceil(|w| / accumulation) neurons.
Packing pack_weights_unpacked(const std::vector<int>& weights, int accumulation);
// Sequential packing after ordering by |w - central| (ties: smaller w first).
Packing pack_weights_central(const std::vector<int>& weights, int accumulation, int central_weight);

inline Packing pack_weights_s11(const std::vector<int>& w, int ta) { return pack_weights_sequential(w, ta); }
inline Packing pack_weights_s12(const std::vector<int>& w, int ta, int cw) { return pack_weights_central(w, ta, cw); }

std::size_t unpacked_neuron_count(const std::vector<int>& weights, int accumulation);

struct SweepPoint {
  int central_weight = 0;
  std::size_t neurons = 0;
};
std::vector<SweepPoint> central_weight_sweep(const std::vector<int>& weights, int accumulation, int lo, int hi);

// Problems with a packing: lost or extra weight per source, a neuron over
// capacity, or more than 4 distinct values on one neuron. Empty when valid.
std::vector<std::string> check_packing(const std::vector<int>& weights, const Packing& packing, int accumulation);

// ---------------------------------------------------------------------------
// Core packing for splitter and sampler groups.

struct Footprint {
  int neurons = 0;
  int axons = 0;
};

enum class PackKey { neurons, axons };

// Fills one core at a time with the largest remaining group (by `key`) that
// still fits both resources; a new core is opened only when nothing fits.
std::vector<std::vector<int>> pack_cores_s3(const std::vector<Footprint>& groups, Footprint capacity, PackKey key);
// Groups in index order, next-fit.
std::vector<std::vector<int>> pack_cores_sequential(const std::vector<Footprint>& groups, Footprint capacity);

// ---------------------------------------------------------------------------
// Quantization-stage placement.

struct StageTwoNeuronSpec {
  int dest = 0;                               // destination unit
  int sign = +1;                              // applied at the sampler synapse
  std::vector<std::pair<int, int>> inputs;    // (source id, value), one entry per source
};

struct UnitDemand {
  int unit = 0;
  std::vector<StageTwoNeuronSpec> neurons;
};

struct StageTwoAxon {
  int source = 0;
  int type = 0;
};

struct StageTwoCorePlan {
  std::vector<int> units;
  std::vector<StageTwoNeuronSpec> neurons;
  std::vector<std::array<int, 4>> tables;
  std::vector<StageTwoAxon> axons;
  std::vector<std::vector<std::pair<int, int>>> connections;  // per neuron: (axon, weight)
};

// Places units onto quantization cores. With `share` the next unit is the one
// with the most sources already present in the open core, and axons (source,
// type) are reused across units wherever the per-neuron weight tables allow.
// Without it, units go in index order and only share axons within a unit.
std::vector<StageTwoCorePlan> pack_units_s2(const std::vector<UnitDemand>& units, int n_sources, bool share,
                                            int axon_capacity = kCoreSize, int neuron_capacity = kCoreSize);

// ---------------------------------------------------------------------------
// Compilation.

enum class PackingStrategy { none, sequential, central };

const char* to_string(PackingStrategy s);
PackingStrategy packing_strategy_from_string(const std::string& s);

struct CompileConfig {
  int accumulation = 32;  // ticks a quantization neuron may stream, also its weight capacity
  SamplerConfig sampler;
  std::optional<int> c_minus;  // splitter floor; default -max(window, accumulation)
  PackingStrategy packing = PackingStrategy::central;
  std::optional<int> central_weight;  // default: sweep [1, 2 * accumulation]
  bool axon_sharing = true;
  bool core_packing = true;

  int splitter_floor() const;
  void validate() const;
};

struct Periods {
  int layer = 0;
  int image = 0;
};

// A layer produces a sample every accumulation + window + 2 ticks; a full
// visible-hidden-visible period takes twice that.
Periods schedule_period(const CompileConfig& cfg);

enum class Layer { visible, hidden };

struct UnitPlacement {
  Layer layer = Layer::visible;
  int index = 0;
  std::vector<NeuronAddress> splitter;   // stage-1 replicas; [0] exists even without fan-out
  AxonAddress splitter_input;            // sampler output lands here; also the clamp-on axon
  std::optional<AxonAddress> clamp_off;  // visible units only
  NeuronAddress sampler;
  NeuronAddress leak;
  NeuronAddress gate;
  std::vector<NeuronAddress> quantizers;  // stage-2 neurons feeding this unit
  std::vector<AxonAddress> sampler_data_axons;
  std::vector<AxonAddress> bias_axons;
};

// Periodic external-event program. Phase 0 is the tick on which visible
// splitters emit their frame-aligned spikes; tick t >= 1 has phase
// (t - first_visible_frame) mod image period. Tick 0 runs `startup`.
struct ControlSchedule {
  int layer_period = 0;
  int image_period = 0;
  std::int64_t first_visible_frame = 0;
  std::vector<std::vector<AxonAddress>> by_phase;
  std::vector<AxonAddress> startup;

  void events(std::int64_t tick, std::vector<AxonAddress>& out) const;
  std::int64_t visible_frame(std::int64_t k) const { return first_visible_frame + k * image_period; }
  std::int64_t hidden_frame(std::int64_t k) const { return visible_frame(k) + layer_period; }
  // Sampling window of the layer whose frame is at `frame`: [frame - window, frame - 1].
};

struct StageUsage {
  int cores = 0;
  std::size_t neurons = 0;
  std::size_t axons = 0;
};

struct ResourceReport {
  StageUsage stage[3];
  int total_cores = 0;
  std::size_t total_neurons = 0;
  double chip_utilization = 0.0;  // percent of a 4096-core chip
  int central_weight = 0;         // 0 when not applicable
  std::string to_json() const;
  std::string to_csv() const;
};

struct LayerTiming {
  int clamp_axons = 0;     // sampler reset events of -255
  int restore_events = 0;  // +leak events bringing the sampler back to 0
  int restore_axons = 0;
  int floor = 0;           // sampler negative saturation
  int ceiling = 0;         // sampler positive saturation
};

struct PlacedNetwork {
  Network network;
  std::vector<UnitPlacement> visible;
  std::vector<UnitPlacement> hidden;
  ControlSchedule schedule;
  ResourceReport report;
  CompileConfig config;
  LayerTiming visible_timing;
  LayerTiming hidden_timing;
  std::vector<int> core_stage;  // 1, 2 or 3 per core
};

PlacedNetwork compile(const QuantizedRbm& m, const CompileConfig& cfg);
ResourceReport resource_report(const PlacedNetwork& p);

// Schedule/placement snapshot for the map command; loadable for reconstruction.
std::string placement_to_json(const PlacedNetwork& p);

// Drives a placed network as a Gibbs chain: feed an initial visible vector,
// then read one (hidden, visible) pair per image period from the splitters'
// frame-aligned spikes.
class PlacedChain {
 public:
  PlacedChain(const PlacedNetwork& p, SimOptions opts);

  // Sets the initial visible state; must be called once before next().
  void start(const BinaryVector& v0);
  // Runs one image period. Known visible pixels (nonzero in `known`) are forced
  // to their value in `values` at the visible frame.
  UnitState next(const BinaryVector* known = nullptr, const BinaryVector* values = nullptr);

  const Simulator& simulator() const { return sim_; }
  // Counts of timing-contract breaches seen so far: quantizer input reaching a
  // sampler inside its window, and splitter spikes off the frame tick.
  std::size_t window_input_violations() const { return window_violations_; }
  std::size_t frame_violations() const { return frame_violations_; }

 private:
  const PlacedNetwork& p_;
  Simulator sim_;
  std::int64_t cycle_ = 0;
  std::vector<AxonAddress> events_;
  std::vector<AxonAddress> injected_;
  std::vector<int> splitter_unit_;     // per flat neuron id: +(1+i) visible, -(1+j) hidden, 0 none
  std::vector<int> data_axon_layer_;   // per flat axon id: 1 visible sampler, 2 hidden sampler, 0 none
  std::vector<std::size_t> neuron_offset_;
  std::vector<std::size_t> axon_offset_;
  std::size_t window_violations_ = 0;
  std::size_t frame_violations_ = 0;

  void inject(const BinaryVector& values, const BinaryVector* known);
  void tick_once(UnitState& s);
};

}  // namespace spikerbm
