#include "spikerbm/substrate.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "spikerbm/rng.hpp"

namespace spikerbm {

const char* to_string(ResetMode mode) {
  switch (mode) {
    case ResetMode::to_value: return "to_value";
    case ResetMode::linear: return "linear";
    case ResetMode::none: return "none";
  }
  return "?";
}

ResetMode reset_mode_from_string(const std::string& s) {
  if (s == "to_value") return ResetMode::to_value;
  if (s == "linear") return ResetMode::linear;
  if (s == "none") return ResetMode::none;
  throw std::invalid_argument("unknown reset mode '" + s + "'");
}

int Core::add_axon(int type) {
  if (type < 0 || type > 3) throw std::invalid_argument("axon type must be 0..3");
  axon_types.push_back(std::uint8_t(type));
  crossbar.emplace_back();
  return axon_count() - 1;
}

int Core::add_neuron(const NeuronParams& p) {
  neurons.push_back(p);
  return neuron_count() - 1;
}

void Core::connect(int axon, int neuron, std::optional<int> intended_weight) {
  if (axon < 0 || axon >= axon_count()) throw std::out_of_range("connect: axon index out of range");
  if (neuron < 0 || neuron >= std::min(neuron_count(), kCoreSize))
    throw std::out_of_range("connect: neuron index out of range");
  crossbar[std::size_t(axon)].set(std::size_t(neuron));
  if (intended_weight) intended.push_back({axon, neuron, *intended_weight});
}

std::size_t Network::neuron_count() const {
  std::size_t n = 0;
  for (const auto& c : cores) n += c.neurons.size();
  return n;
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << "core " << core;
  if (axon >= 0) os << " axon " << axon;
  if (neuron >= 0) os << " neuron " << neuron;
  os << ": " << message;
  return os.str();
}

std::vector<Violation> validate_core(const Core& core, int ci) {
  std::vector<Violation> out;
  auto bad = [&](int axon, int neuron, std::string msg) { out.push_back({ci, axon, neuron, std::move(msg)}); };

  if (core.axon_count() > kCoreSize) bad(-1, -1, "uses " + std::to_string(core.axon_count()) + " axons (max 256)");
  if (core.neuron_count() > kCoreSize)
    bad(-1, -1, "uses " + std::to_string(core.neuron_count()) + " neurons (max 256)");
  if (core.crossbar.size() != core.axon_types.size()) bad(-1, -1, "crossbar row count differs from axon count");
  for (int a = 0; a < core.axon_count(); ++a)
    if (core.axon_types[std::size_t(a)] > 3) bad(a, -1, "axon type outside 0..3");
  for (int a = 0; a < int(core.crossbar.size()); ++a)
    for (int n = core.neuron_count(); n < kCoreSize; ++n)
      if (core.crossbar[std::size_t(a)].test(std::size_t(n))) bad(a, n, "crossbar connects to a missing neuron");

  for (int n = 0; n < core.neuron_count(); ++n) {
    const NeuronParams& p = core.neurons[std::size_t(n)];
    for (int g = 0; g < 4; ++g)
      if (p.weights[std::size_t(g)] < kWeightMin || p.weights[std::size_t(g)] > kWeightMax)
        bad(-1, n, "weight " + std::to_string(g) + " outside signed 9-bit range");
    if (p.leak < kWeightMin || p.leak > kWeightMax) bad(-1, n, "leak outside signed 9-bit range");
    if (p.threshold < 0) bad(-1, n, "negative threshold");
    if (p.threshold_bits < 0 || p.threshold_bits > 30) bad(-1, n, "threshold bits out of range");
    if (p.pos_saturation && p.threshold_bits >= 0 && p.threshold_bits <= 30 &&
        std::int64_t(p.threshold) + ((std::int64_t(1) << p.threshold_bits) - 1) > *p.pos_saturation)
      bad(-1, n, "threshold range exceeds positive saturation");
    if (p.pos_saturation && p.neg_saturation && *p.neg_saturation > *p.pos_saturation)
      bad(-1, n, "negative saturation above positive saturation");
  }

  if (!core.intended.empty()) {
    std::map<std::pair<int, int>, int> want;
    std::map<int, std::set<int>> distinct;
    for (const Synapse& s : core.intended) {
      if (s.axon < 0 || s.axon >= core.axon_count() || s.neuron < 0 || s.neuron >= core.neuron_count() ||
          s.neuron >= kCoreSize) {
        bad(s.axon, s.neuron, "intended synapse references a missing axon or neuron");
        continue;
      }
      auto [it, fresh] = want.emplace(std::make_pair(s.axon, s.neuron), s.weight);
      if (!fresh && it->second != s.weight) bad(s.axon, s.neuron, "conflicting intended weights");
      distinct[s.neuron].insert(s.weight);
    }
    for (const auto& [n, ws] : distinct)
      if (ws.size() > 4)
        bad(-1, n, "needs " + std::to_string(ws.size()) + " distinct weights but has only 4 axon types");
    for (const auto& [key, w] : want) {
      const auto [a, n] = key;
      if (!core.crossbar[std::size_t(a)].test(std::size_t(n))) {
        bad(a, n, "intended synapse missing from crossbar");
      } else if (core.effective_weight(a, n) != w) {
        bad(a, n, "weight " + std::to_string(w) + " not expressible (type " +
                      std::to_string(core.axon_types[std::size_t(a)]) + " gives " +
                      std::to_string(core.effective_weight(a, n)) + ")");
      }
    }
    for (int a = 0; a < std::min<int>(core.axon_count(), int(core.crossbar.size())); ++a)
      for (int n = 0; n < std::min(core.neuron_count(), kCoreSize); ++n)
        if (core.crossbar[std::size_t(a)].test(std::size_t(n)) && !want.count({a, n}))
          bad(a, n, "crossbar connection without an intended synapse");
  }
  return out;
}

std::vector<Violation> validate_network(const Network& net) {
  std::vector<Violation> out;
  for (int c = 0; c < int(net.cores.size()); ++c) {
    auto v = validate_core(net.cores[std::size_t(c)], c);
    out.insert(out.end(), v.begin(), v.end());
  }
  auto axon_ok = [&](const AxonAddress& a) {
    return a.core >= 0 && a.core < int(net.cores.size()) && a.axon >= 0 &&
           a.axon < net.cores[std::size_t(a.core)].axon_count();
  };
  std::set<NeuronAddress> seen;
  for (const Route& r : net.routes) {
    const bool src_ok = r.source.core >= 0 && r.source.core < int(net.cores.size()) && r.source.neuron >= 0 &&
                        r.source.neuron < net.cores[std::size_t(r.source.core)].neuron_count();
    if (!src_ok) out.push_back({r.source.core, -1, r.source.neuron, "route from a missing neuron"});
    if (!axon_ok(r.target))
      out.push_back({r.target.core, r.target.axon, -1, "route to a nonexistent axon"});
    if (!seen.insert(r.source).second)
      out.push_back({r.source.core, -1, r.source.neuron, "neuron has multiple routes"});
  }
  for (const auto& [name, axons] : net.inputs)
    for (const auto& a : axons)
      if (!axon_ok(a)) out.push_back({a.core, a.axon, -1, "input '" + name + "' names a nonexistent axon"});
  return out;
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const Network& net, SimOptions opts) : net_(net), opts_(opts) {
  cores_.resize(net.cores.size());
  for (std::size_t c = 0; c < net.cores.size(); ++c) {
    const Core& core = net.cores[c];
    if (core.neuron_count() > kCoreSize || core.axon_count() > kCoreSize)
      throw std::invalid_argument("simulator: core " + std::to_string(c) + " exceeds 256 axons/neurons");
    CoreRuntime& rt = cores_[c];
    rt.fanout.resize(std::size_t(core.axon_count()));
    for (int a = 0; a < core.axon_count(); ++a)
      for (int n = 0; n < core.neuron_count(); ++n)
        if (core.crossbar[std::size_t(a)].test(std::size_t(n))) rt.fanout[std::size_t(a)].push_back(std::uint16_t(n));
    rt.route.assign(std::size_t(core.neuron_count()), AxonAddress{-1, -1});
    rt.potential.assign(std::size_t(core.neuron_count()), 0);
    rt.input.assign(std::size_t(core.neuron_count()), 0);
    rt.touched.assign(std::size_t(core.neuron_count()), 0);
    for (int n = 0; n < core.neuron_count(); ++n) {
      // Potentials start at 0, clipped into the saturation band.
      const NeuronParams& p = core.neurons[std::size_t(n)];
      std::int32_t v = 0;
      if (p.neg_saturation) v = std::max(v, std::int32_t(*p.neg_saturation));
      if (p.pos_saturation) v = std::min(v, std::int32_t(*p.pos_saturation));
      rt.potential[std::size_t(n)] = v;
    }
  }
  for (const Route& r : net.routes) {
    if (r.source.core < 0 || r.source.core >= int(net.cores.size()) || r.source.neuron < 0 ||
        r.source.neuron >= net.cores[std::size_t(r.source.core)].neuron_count())
      throw std::invalid_argument("simulator: route from a missing neuron");
    check_axon(r.target);
    auto& slot = cores_[std::size_t(r.source.core)].route[std::size_t(r.source.neuron)];
    if (slot.core != -1) throw std::invalid_argument("simulator: neuron has multiple routes");
    slot = r.target;
  }
}

void Simulator::check_axon(const AxonAddress& a) const {
  if (a.core < 0 || a.core >= int(net_.cores.size()) || a.axon < 0 ||
      a.axon >= net_.cores[std::size_t(a.core)].axon_count())
    throw std::out_of_range("routing to nonexistent axon (core " + std::to_string(a.core) + ", axon " +
                            std::to_string(a.axon) + ")");
}

int Simulator::potential(NeuronAddress n) const { return cores_.at(std::size_t(n.core)).potential.at(std::size_t(n.neuron)); }

void Simulator::debug_set_potential(NeuronAddress n, int value) {
  cores_.at(std::size_t(n.core)).potential.at(std::size_t(n.neuron)) = value;
}

namespace {

inline std::int64_t clip(std::int64_t v, const NeuronParams& p) {
  if (p.neg_saturation && v < *p.neg_saturation) v = *p.neg_saturation;
  if (p.pos_saturation && v > *p.pos_saturation) v = *p.pos_saturation;
  return v;
}

constexpr std::uint64_t kLeakStream = 0;
constexpr std::uint64_t kThresholdStream = 1;

}  // namespace

const std::vector<SpikeEvent>& Simulator::step(const std::vector<AxonAddress>& external) {
  for (const auto& a : external) check_axon(a);
  active_.swap(pending_);
  pending_.clear();
  active_.insert(active_.end(), external.begin(), external.end());
  // An axon is either active in a tick or not; duplicates carry no extra charge.
  std::sort(active_.begin(), active_.end());
  active_.erase(std::unique(active_.begin(), active_.end()), active_.end());

  for (const AxonAddress& a : active_) {
    const Core& core = net_.cores[std::size_t(a.core)];
    CoreRuntime& rt = cores_[std::size_t(a.core)];
    const int type = core.axon_types[std::size_t(a.axon)];
    for (std::uint16_t n : rt.fanout[std::size_t(a.axon)]) {
      rt.input[n] += core.neurons[n].weights[std::size_t(type)];
      rt.touched[n] = 1;
    }
  }

  emitted_.clear();
  const std::uint64_t t = std::uint64_t(tick_);
  const std::int64_t leak_span = opts_.leak_mode == LeakProbability::hardware ? 0 : 1;
  for (std::size_t c = 0; c < cores_.size(); ++c) {
    const Core& core = net_.cores[c];
    CoreRuntime& rt = cores_[c];
    for (std::size_t n = 0; n < rt.potential.size(); ++n) {
      const NeuronParams& p = core.neurons[n];
      std::int64_t v = rt.potential[n];
      if (!rt.touched[n] && p.leak == 0 && v < p.threshold) continue;
      if (rt.touched[n]) {
        v = clip(v + rt.input[n], p);
        rt.input[n] = 0;
        rt.touched[n] = 0;
      }
      if (p.leak != 0) {
        if (p.stochastic_leak) {
          // F(lambda) = |lambda| >= rho; rho is uniform on 0..255 (hardware) or 1..256 (half).
          const std::int64_t rho =
              std::int64_t(counter_hash(opts_.seed, c, n, t, kLeakStream) & 0xFFu) + leak_span;
          if (std::abs(p.leak) >= rho) v += p.leak > 0 ? 1 : -1;
        } else {
          v += p.leak;
        }
        v = clip(v, p);
      }
      if (v >= p.threshold) {
        std::int64_t eta = 0;
        const std::int64_t range = (std::int64_t(1) << p.threshold_bits) - 1;
        // Draw only when the outcome is actually uncertain.
        if (range > 0 && v < p.threshold + range)
          eta = std::int64_t(counter_hash(opts_.seed, c, n, t, kThresholdStream) & std::uint64_t(range));
        if (v >= p.threshold + eta) {
          emitted_.push_back({int(c), int(n)});
          switch (p.reset_mode) {
            case ResetMode::to_value: v = p.reset_value; break;
            case ResetMode::linear: v -= p.threshold + eta; break;
            case ResetMode::none: break;
          }
          v = clip(v, p);
          if (rt.route[n].core >= 0) pending_.push_back(rt.route[n]);
        }
      }
      v = std::clamp<std::int64_t>(v, std::numeric_limits<std::int32_t>::min(),
                                   std::numeric_limits<std::int32_t>::max());
      rt.potential[n] = std::int32_t(v);
    }
  }
  ++tick_;
  return emitted_;
}

std::string TickTrace::spikes_csv() const {
  std::ostringstream os;
  os << "tick,core,neuron\n";
  for (const auto& s : spikes) os << s.tick << ',' << s.core << ',' << s.neuron << '\n';
  return os.str();
}

std::string TickTrace::potentials_csv() const {
  std::ostringstream os;
  os << "tick,core,neuron,potential\n";
  for (const auto& s : potentials) os << s.tick << ',' << s.core << ',' << s.neuron << ',' << s.potential << '\n';
  return os.str();
}

TickTrace run(const Network& net, const EventSource& schedule, std::int64_t n_ticks,
              const std::vector<NeuronAddress>& probes, SimOptions opts) {
  if (n_ticks < 1) throw std::invalid_argument("run: n_ticks must be >= 1");
  Simulator sim(net, opts);
  TickTrace trace;
  std::vector<AxonAddress> events;
  for (std::int64_t t = 0; t < n_ticks; ++t) {
    events.clear();
    if (schedule) schedule(t, events);
    for (const auto& s : sim.step(events)) trace.spikes.push_back({t, s.core, s.neuron});
    for (const auto& p : probes) trace.potentials.push_back({t, p.core, p.neuron, sim.potential(p)});
  }
  return trace;
}

}  // namespace spikerbm
