#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "spikerbm/compiler.hpp"

namespace spikerbm {

using nlohmann::json;

const char* to_string(PackingStrategy s) {
  switch (s) {
    case PackingStrategy::none: return "none";
    case PackingStrategy::sequential: return "s1.1";
    case PackingStrategy::central: return "s1.2";
  }
  return "?";
}

PackingStrategy packing_strategy_from_string(const std::string& s) {
  if (s == "none") return PackingStrategy::none;
  if (s == "s1.1" || s == "s11" || s == "sequential") return PackingStrategy::sequential;
  if (s == "s1.2" || s == "s12" || s == "central") return PackingStrategy::central;
  throw std::invalid_argument("packing strategy must be none, s1.1 or s1.2");
}

int CompileConfig::splitter_floor() const { return c_minus.value_or(-std::max(sampler.window, accumulation)); }

void CompileConfig::validate() const {
  sampler.validate();
  if (accumulation < 1 || accumulation > kWeightMax) throw std::invalid_argument("compile: accumulation must be in [1, 255]");
  const int floor = splitter_floor();
  if (floor > -sampler.window) throw std::invalid_argument("compile: |C_minus| must be >= sampling window");
  // Samplers may also fire while their input is still accumulating; those
  // spikes land on the splitter before it is re-floored, so the floor has to
  // absorb them as well.
  if (floor > -accumulation) throw std::invalid_argument("compile: |C_minus| must be >= accumulation ticks");
  if (-floor > kWeightMax) throw std::invalid_argument("compile: |C_minus| must fit a 9-bit weight");
  if (-floor + accumulation + sampler.window >= 255)
    throw std::invalid_argument("compile: |C_minus| + accumulation + window must stay below 255");
  if (sampler.leak > kWeightMax) throw std::invalid_argument("compile: leak weight must fit 9 bits");
  if (central_weight && *central_weight < 0) throw std::invalid_argument("compile: central weight must be >= 0");
}

Periods schedule_period(const CompileConfig& cfg) {
  const int layer = cfg.accumulation + cfg.sampler.window + 2;
  return {layer, 2 * layer};
}

void ControlSchedule::events(std::int64_t tick, std::vector<AxonAddress>& out) const {
  if (tick == 0) {
    out.insert(out.end(), startup.begin(), startup.end());
    return;
  }
  if (tick < 0 || image_period <= 0) return;
  const std::int64_t phase = ((tick - first_visible_frame) % image_period + image_period) % image_period;
  const auto& ev = by_phase[std::size_t(phase)];
  out.insert(out.end(), ev.begin(), ev.end());
}

std::string ResourceReport::to_json() const {
  json j;
  j["total_cores"] = total_cores;
  j["total_neurons"] = total_neurons;
  j["chip_utilization_percent"] = chip_utilization;
  j["central_weight"] = central_weight;
  for (int s = 0; s < 3; ++s)
    j["stage" + std::to_string(s + 1)] = {
        {"cores", stage[s].cores}, {"neurons", stage[s].neurons}, {"axons", stage[s].axons}};
  return j.dump(2) + "\n";
}

std::string ResourceReport::to_csv() const {
  std::ostringstream os;
  os << "stage,cores,neurons,axons\n";
  for (int s = 0; s < 3; ++s)
    os << (s + 1) << ',' << stage[s].cores << ',' << stage[s].neurons << ',' << stage[s].axons << '\n';
  os << "total," << total_cores << ',' << total_neurons << ",\n";
  return os.str();
}

namespace {

struct SignedList {
  std::vector<int> magnitudes;
  std::vector<int> sources;
};

struct GroupLists {
  SignedList pos, neg;
};

// Per destination unit: signed weights from every source, then the bias as the
// last pseudo-source (id n_sources + dest).
std::vector<GroupLists> weight_groups(const QuantizedRbm& m, Layer dest) {
  const bool to_hidden = dest == Layer::hidden;
  const int n_dest = int(to_hidden ? m.n_hidden() : m.n_visible());
  const int n_src = int(to_hidden ? m.n_visible() : m.n_hidden());
  std::vector<GroupLists> out(static_cast<std::size_t>(n_dest));
  for (int d = 0; d < n_dest; ++d) {
    auto add = [&](int src, int w) {
      if (w > 0) {
        out[std::size_t(d)].pos.magnitudes.push_back(w);
        out[std::size_t(d)].pos.sources.push_back(src);
      } else if (w < 0) {
        out[std::size_t(d)].neg.magnitudes.push_back(-w);
        out[std::size_t(d)].neg.sources.push_back(src);
      }
    };
    for (int s = 0; s < n_src; ++s) add(s, to_hidden ? m.weights(s, d) : m.weights(d, s));
    add(n_src + d, to_hidden ? m.hidden_bias(d) : m.visible_bias(d));
  }
  return out;
}

Packing pack_list(const SignedList& l, const CompileConfig& cfg, int central) {
  switch (cfg.packing) {
    case PackingStrategy::none: return pack_weights_unpacked(l.magnitudes, cfg.accumulation);
    case PackingStrategy::sequential: return pack_weights_sequential(l.magnitudes, cfg.accumulation);
    case PackingStrategy::central: return pack_weights_central(l.magnitudes, cfg.accumulation, central);
  }
  return {};
}

std::vector<UnitDemand> unit_demands(const std::vector<GroupLists>& groups, const CompileConfig& cfg, int central) {
  std::vector<UnitDemand> out;
  for (int d = 0; d < int(groups.size()); ++d) {
    UnitDemand u;
    u.unit = d;
    for (int sign : {+1, -1}) {
      const SignedList& l = sign > 0 ? groups[std::size_t(d)].pos : groups[std::size_t(d)].neg;
      for (const auto& neuron : pack_list(l, cfg, central)) {
        StageTwoNeuronSpec spec;
        spec.dest = d;
        spec.sign = sign;
        std::map<int, int> per_source;
        for (const auto& c : neuron.chunks) per_source[l.sources[std::size_t(c.source)]] += c.value;
        spec.inputs.assign(per_source.begin(), per_source.end());
        u.neurons.push_back(std::move(spec));
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

LayerTiming layer_timing(const std::vector<GroupLists>& groups, const CompileConfig& cfg) {
  const SamplerConfig& s = cfg.sampler;
  long max_pos = 0, max_neg = 0;
  for (const auto& g : groups) {
    long p = 0, n = 0;
    for (int w : g.pos.magnitudes) p += w;
    for (int w : g.neg.magnitudes) n += w;
    max_pos = std::max(max_pos, p);
    max_neg = std::max(max_neg, n);
  }
  LayerTiming t;
  t.ceiling = int(std::max<long>(s.top_threshold(), max_pos));
  // At least one leak step below zero, so an idle sampler can never cross a zero threshold.
  t.restore_events = int(std::max<long>(1, (max_neg + s.leak - 1) / s.leak));
  t.floor = -t.restore_events * s.leak;
  t.clamp_axons = int((long(t.ceiling) - t.floor + 254) / 255);
  const int ticks = std::min(t.restore_events, schedule_period(cfg).layer);
  t.restore_axons = (t.restore_events + ticks - 1) / ticks;
  return t;
}

struct Builder {
  PlacedNetwork& out;

  int new_core(int stage, const std::string& label) {
    out.network.cores.emplace_back();
    out.network.cores.back().label = label;
    out.core_stage.push_back(stage);
    return int(out.network.cores.size()) - 1;
  }
  Core& core(int c) { return out.network.cores[std::size_t(c)]; }
  void route(NeuronAddress from, AxonAddress to) { out.network.routes.push_back({from, to}); }
};

}  // namespace

PlacedNetwork compile(const QuantizedRbm& m, const CompileConfig& cfg) {
  m.check();
  cfg.validate();
  if (m.scale != cfg.sampler.scale)
    throw std::invalid_argument("compile: model scale " + std::to_string(m.scale) + " differs from sampler scale " +
                                std::to_string(cfg.sampler.scale));
  const int nv = int(m.n_visible()), nh = int(m.n_hidden());
  const int ta = cfg.accumulation;
  const int floor = cfg.splitter_floor();
  const SamplerConfig& sc = cfg.sampler;

  PlacedNetwork out;
  out.config = cfg;
  Builder b{out};

  const std::vector<GroupLists> to_hidden = weight_groups(m, Layer::hidden);
  const std::vector<GroupLists> to_visible = weight_groups(m, Layer::visible);
  for (const auto* groups : {&to_hidden, &to_visible})
    for (const auto& g : *groups)
      for (const auto* l : {&g.pos, &g.neg})
        for (int w : l->magnitudes)
          if (w > kWeightMax * 64) throw std::invalid_argument("compile: weight too large for the quantizer stage");

  int central = 0;
  if (cfg.packing == PackingStrategy::central) {
    if (cfg.central_weight) {
      central = *cfg.central_weight;
    } else {
      std::size_t best = SIZE_MAX;
      for (int cw = 1; cw <= 2 * ta; ++cw) {
        std::size_t total = 0;
        for (const auto* groups : {&to_hidden, &to_visible})
          for (const auto& g : *groups)
            total += pack_weights_central(g.pos.magnitudes, ta, cw).size() +
                     pack_weights_central(g.neg.magnitudes, ta, cw).size();
        if (total < best) {
          best = total;
          central = cw;
        }
      }
    }
  }

  const std::vector<UnitDemand> dem_hidden = unit_demands(to_hidden, cfg, central);
  const std::vector<UnitDemand> dem_visible = unit_demands(to_visible, cfg, central);
  const auto plans_hidden = pack_units_s2(dem_hidden, nv + nh, cfg.axon_sharing);
  const auto plans_visible = pack_units_s2(dem_visible, nh + nv, cfg.axon_sharing);

  out.hidden_timing = layer_timing(to_hidden, cfg);
  out.visible_timing = layer_timing(to_visible, cfg);

  out.visible.resize(std::size_t(nv));
  out.hidden.resize(std::size_t(nh));
  for (int i = 0; i < nv; ++i) { out.visible[std::size_t(i)].layer = Layer::visible; out.visible[std::size_t(i)].index = i; }
  for (int j = 0; j < nh; ++j) { out.hidden[std::size_t(j)].layer = Layer::hidden; out.hidden[std::size_t(j)].index = j; }
  auto units_of = [&](Layer l) -> std::vector<UnitPlacement>& { return l == Layer::visible ? out.visible : out.hidden; };

  // Replica demand: one splitter neuron per quantizer axon carrying the unit.
  std::vector<int> replicas_v(std::size_t(nv), 0), replicas_h(std::size_t(nh), 0);
  for (const auto& p : plans_hidden)
    for (const auto& a : p.axons)
      if (a.source < nv) ++replicas_v[std::size_t(a.source)];
  for (const auto& p : plans_visible)
    for (const auto& a : p.axons)
      if (a.source < nh) ++replicas_h[std::size_t(a.source)];

  NeuronParams splitter;
  splitter.weights = {1, -floor, -255, 0};
  splitter.threshold = 1;
  splitter.reset_value = 0;
  splitter.reset_mode = ResetMode::to_value;
  splitter.neg_saturation = floor;

  struct LayerControl {
    std::vector<AxonAddress> c_plus, init, enable, clamp, bias;
    std::vector<std::vector<AxonAddress>> restore;  // per restore axon slot
  };
  LayerControl ctl_v, ctl_h;
  auto ctl_of = [&](Layer l) -> LayerControl& { return l == Layer::visible ? ctl_v : ctl_h; };

  // Stage 1: splitter/refractory groups, per layer.
  std::vector<std::vector<std::vector<NeuronAddress>>> free_replicas(2);  // [layer][unit] -> unused replicas
  for (Layer layer : {Layer::visible, Layer::hidden}) {
    const bool vis = layer == Layer::visible;
    const std::vector<int>& reps = vis ? replicas_v : replicas_h;
    std::vector<Footprint> groups;
    for (int r : reps) groups.push_back({std::max(1, r), vis ? 2 : 1});
    const Footprint cap{kCoreSize, kCoreSize - 2};
    const auto cores = cfg.core_packing ? pack_cores_s3(groups, cap, PackKey::neurons) : pack_cores_sequential(groups, cap);
    auto& pool = free_replicas[vis ? 0 : 1];
    pool.resize(reps.size());
    for (const auto& members : cores) {
      const int c = b.new_core(1, vis ? "splitter/visible" : "splitter/hidden");
      Core& core = b.core(c);
      const int a_plus = core.add_axon(1);
      const int a_init = core.add_axon(2);
      ctl_of(layer).c_plus.push_back({c, a_plus});
      ctl_of(layer).init.push_back({c, a_init});
      for (int u : members) {
        UnitPlacement& up = units_of(layer)[std::size_t(u)];
        const int a_in = core.add_axon(0);
        up.splitter_input = {c, a_in};
        int a_off = -1;
        if (vis) {
          a_off = core.add_axon(2);
          up.clamp_off = AxonAddress{c, a_off};
        }
        for (int k = 0; k < std::max(1, reps[std::size_t(u)]); ++k) {
          const int n = core.add_neuron(splitter);
          core.connect(a_in, n, 1);
          core.connect(a_plus, n, -floor);
          core.connect(a_init, n, -255);
          if (a_off >= 0) core.connect(a_off, n, -255);
          up.splitter.push_back({c, n});
          if (k < reps[std::size_t(u)]) pool[std::size_t(u)].push_back({c, n});
        }
      }
    }
    for (auto& p : pool) std::reverse(p.begin(), p.end());  // pop_back hands them out in order
  }

  // Stage 3 layout is needed before stage 2 can route, so plan it first:
  // per destination unit, the signs of its quantizer neurons in creation order.
  std::vector<std::vector<int>> signs_h(static_cast<std::size_t>(nh)), signs_v(static_cast<std::size_t>(nv));
  for (const auto& p : plans_hidden)
    for (const auto& n : p.neurons) signs_h[std::size_t(n.dest)].push_back(n.sign);
  for (const auto& p : plans_visible)
    for (const auto& n : p.neurons) signs_v[std::size_t(n.dest)].push_back(n.sign);

  // Stage 2: quantization cores.
  struct PendingRoute {
    NeuronAddress from;
    Layer dest_layer;
    int dest;
  };
  std::vector<PendingRoute> to_sampler;
  NeuronParams quantizer;
  quantizer.threshold = 1;
  quantizer.reset_mode = ResetMode::linear;
  quantizer.neg_saturation = 0;
  for (Layer dest_layer : {Layer::hidden, Layer::visible}) {
    const bool to_h = dest_layer == Layer::hidden;
    const auto& plans = to_h ? plans_hidden : plans_visible;
    const int n_src = to_h ? nv : nh;
    auto& pool = free_replicas[to_h ? 0 : 1];
    for (const auto& plan : plans) {
      const int c = b.new_core(2, to_h ? "quantizer/to-hidden" : "quantizer/to-visible");
      std::vector<int> axon_ids;
      for (const auto& ax : plan.axons) {
        const int a = b.core(c).add_axon(ax.type);
        axon_ids.push_back(a);
        if (ax.source < n_src) {
          auto& free = pool[std::size_t(ax.source)];
          if (free.empty()) throw std::logic_error("compile: splitter replica accounting mismatch");
          b.route(free.back(), {c, a});
          free.pop_back();
        } else {
          const int d = ax.source - n_src;
          units_of(dest_layer)[std::size_t(d)].bias_axons.push_back({c, a});
          ctl_of(dest_layer).bias.push_back({c, a});
        }
      }
      for (std::size_t k = 0; k < plan.neurons.size(); ++k) {
        NeuronParams p = quantizer;
        p.weights = plan.tables[k];
        const int n = b.core(c).add_neuron(p);
        for (const auto& [a, w] : plan.connections[k]) b.core(c).connect(axon_ids[std::size_t(a)], n, w);
        units_of(dest_layer)[std::size_t(plan.neurons[k].dest)].quantizers.push_back({c, n});
        to_sampler.push_back({{c, n}, dest_layer, plan.neurons[k].dest});
      }
    }
  }

  // Stage 3: sampler + leak + gate per unit.
  std::vector<std::vector<AxonAddress>> data_axons_v(static_cast<std::size_t>(nv)), data_axons_h(static_cast<std::size_t>(nh));
  for (Layer layer : {Layer::visible, Layer::hidden}) {
    const bool vis = layer == Layer::visible;
    const LayerTiming& t = vis ? out.visible_timing : out.hidden_timing;
    const auto& signs = vis ? signs_v : signs_h;
    const int control = 1 + t.clamp_axons + t.restore_axons;
    std::vector<Footprint> groups;
    for (const auto& s : signs) groups.push_back({3, int(s.size()) + 2});
    const Footprint cap{kCoreSize, kCoreSize - control};
    const auto cores = cfg.core_packing ? pack_cores_s3(groups, cap, PackKey::axons) : pack_cores_sequential(groups, cap);

    NeuronParams sampler;
    sampler.weights = {1, -1, sc.leak, -255};
    sampler.threshold = sc.threshold;
    sampler.threshold_bits = sc.threshold_bits;
    sampler.reset_mode = ResetMode::none;
    sampler.neg_saturation = t.floor;
    sampler.pos_saturation = t.ceiling;
    NeuronParams leak;
    leak.leak = 128;
    leak.stochastic_leak = true;
    leak.threshold = 1;
    leak.reset_value = 0;
    NeuronParams gate;
    gate.weights = {1, 0, 0, 0};
    gate.leak = -1;
    gate.threshold = 1;
    gate.reset_value = 0;
    gate.neg_saturation = 0;

    LayerControl& ctl = ctl_of(layer);
    ctl.restore.resize(std::size_t(t.restore_axons));
    for (const auto& members : cores) {
      const int c = b.new_core(3, vis ? "sampler/visible" : "sampler/hidden");
      Core& core = b.core(c);
      const int a_enable = core.add_axon(0);
      ctl.enable.push_back({c, a_enable});
      std::vector<int> clamps, restores;
      for (int k = 0; k < t.clamp_axons; ++k) {
        clamps.push_back(core.add_axon(3));
        ctl.clamp.push_back({c, clamps.back()});
      }
      for (int k = 0; k < t.restore_axons; ++k) {
        restores.push_back(core.add_axon(2));
        ctl.restore[std::size_t(k)].push_back({c, restores.back()});
      }
      for (int u : members) {
        UnitPlacement& up = units_of(layer)[std::size_t(u)];
        const int r = core.add_neuron(sampler);
        const int l = core.add_neuron(leak);
        const int g = core.add_neuron(gate);
        up.sampler = {c, r};
        up.leak = {c, l};
        up.gate = {c, g};
        const int a_lg = core.add_axon(0);
        const int a_gr = core.add_axon(2);
        core.connect(a_lg, g, 1);
        core.connect(a_enable, g, 1);
        core.connect(a_gr, r, sc.leak);
        for (int a : clamps) core.connect(a, r, -255);
        for (int a : restores) core.connect(a, r, sc.leak);
        b.route({c, l}, {c, a_lg});
        b.route({c, g}, {c, a_gr});
        b.route({c, r}, up.splitter_input);
        auto& data = vis ? data_axons_v[std::size_t(u)] : data_axons_h[std::size_t(u)];
        for (int sign : signs[std::size_t(u)]) {
          const int a = core.add_axon(sign > 0 ? 0 : 1);
          core.connect(a, r, sign);
          data.push_back({c, a});
          up.sampler_data_axons.push_back({c, a});
        }
        std::reverse(data.begin(), data.end());
      }
    }
  }
  for (const auto& pr : to_sampler) {
    auto& data = pr.dest_layer == Layer::visible ? data_axons_v[std::size_t(pr.dest)] : data_axons_h[std::size_t(pr.dest)];
    b.route(pr.from, data.back());
    data.pop_back();
  }

  // Named external inputs.
  auto& inputs = out.network.inputs;
  for (Layer layer : {Layer::visible, Layer::hidden}) {
    const std::string tag = layer == Layer::visible ? "visible" : "hidden";
    const LayerControl& ctl = ctl_of(layer);
    inputs["c_plus/" + tag] = ctl.c_plus;
    inputs["init/" + tag] = ctl.init;
    inputs["enable/" + tag] = ctl.enable;
    inputs["clamp/" + tag] = ctl.clamp;
    inputs["bias/" + tag] = ctl.bias;
    for (std::size_t k = 0; k < ctl.restore.size(); ++k) inputs["restore" + std::to_string(k) + "/" + tag] = ctl.restore[k];
  }
  for (const auto& up : out.visible) {
    inputs["clamp_on/visible"].push_back(up.splitter_input);
    inputs["clamp_off/visible"].push_back(*up.clamp_off);
  }

  // Control schedule. Phases relative to the visible frame; P = layer period.
  const Periods per = schedule_period(cfg);
  const int P = per.layer, Q = per.image, ts = sc.window;
  ControlSchedule& sch = out.schedule;
  sch.layer_period = P;
  sch.image_period = Q;
  sch.first_visible_frame = P;
  sch.by_phase.assign(std::size_t(Q), {});
  auto at = [&](int phase, const std::vector<AxonAddress>& axons) {
    auto& slot = sch.by_phase[std::size_t(((phase % Q) + Q) % Q)];
    slot.insert(slot.end(), axons.begin(), axons.end());
  };
  for (Layer layer : {Layer::hidden, Layer::visible}) {
    // `frame` is when the source layer's splitters fire; this layer's frame is frame + P.
    const int frame = layer == Layer::hidden ? 0 : P;
    const LayerControl& src = ctl_of(layer == Layer::hidden ? Layer::visible : Layer::hidden);
    const LayerControl& ctl = ctl_of(layer);
    const LayerTiming& t = layer == Layer::hidden ? out.hidden_timing : out.visible_timing;
    at(frame, src.c_plus);
    at(frame + 1, src.init);  // floor the source splitters again right after their frame spike
    at(frame + 1, ctl.bias);
    for (int e = 0; e < t.restore_events; ++e)
      at(frame + 1 - e / t.restore_axons, {ctl.restore[std::size_t(e % t.restore_axons)]});
    for (int k = 0; k < ts; ++k) at(frame + ta + 1 + k, ctl.enable);
    at(frame + ta + 2, ctl.init);  // start counting this layer's window
    at(frame + P, ctl.clamp);      // window over: drop the sampler to its floor
  }
  for (Layer layer : {Layer::visible, Layer::hidden}) {
    const LayerControl& ctl = ctl_of(layer);
    sch.startup.insert(sch.startup.end(), ctl.clamp.begin(), ctl.clamp.end());
    sch.startup.insert(sch.startup.end(), ctl.init.begin(), ctl.init.end());
  }
  for (auto& ev : sch.by_phase) {
    std::sort(ev.begin(), ev.end());
    ev.erase(std::unique(ev.begin(), ev.end()), ev.end());
  }

  out.report = resource_report(out);
  out.report.central_weight = central;
  return out;
}

ResourceReport resource_report(const PlacedNetwork& p) {
  ResourceReport r;
  for (std::size_t c = 0; c < p.network.cores.size(); ++c) {
    const int s = p.core_stage.empty() ? 1 : p.core_stage[c];
    if (s < 1 || s > 3) continue;
    r.stage[s - 1].cores += 1;
    r.stage[s - 1].neurons += p.network.cores[c].neurons.size();
    r.stage[s - 1].axons += p.network.cores[c].axon_types.size();
  }
  r.total_cores = int(p.network.cores.size());
  r.total_neurons = p.network.neuron_count();
  r.chip_utilization = 100.0 * r.total_cores / 4096.0;
  r.central_weight = p.report.central_weight;
  return r;
}

std::string placement_to_json(const PlacedNetwork& p) {
  auto addr = [](const auto& a) { return json::array({a.core, a.axon}); };
  auto naddr = [](const NeuronAddress& n) { return json::array({n.core, n.neuron}); };
  auto units = [&](const std::vector<UnitPlacement>& us) {
    json arr = json::array();
    for (const auto& u : us) {
      json j;
      j["index"] = u.index;
      json spl = json::array();
      for (const auto& n : u.splitter) spl.push_back(naddr(n));
      j["splitter"] = spl;
      j["splitter_input"] = addr(u.splitter_input);
      if (u.clamp_off) j["clamp_off"] = addr(*u.clamp_off);
      j["sampler"] = naddr(u.sampler);
      j["leak"] = naddr(u.leak);
      j["gate"] = naddr(u.gate);
      json q = json::array();
      for (const auto& n : u.quantizers) q.push_back(naddr(n));
      j["quantizers"] = q;
      json bias = json::array();
      for (const auto& a : u.bias_axons) bias.push_back(addr(a));
      j["bias_axons"] = bias;
      arr.push_back(std::move(j));
    }
    return arr;
  };
  json j;
  j["format"] = "spikerbm-placement";
  j["version"] = 1;
  j["accumulation"] = p.config.accumulation;
  j["sampler"] = p.config.sampler.describe();
  j["c_minus"] = p.config.splitter_floor();
  j["layer_period"] = p.schedule.layer_period;
  j["image_period"] = p.schedule.image_period;
  j["first_visible_frame"] = p.schedule.first_visible_frame;
  json phases = json::array();
  for (const auto& ev : p.schedule.by_phase) {
    json e = json::array();
    for (const auto& a : ev) e.push_back(addr(a));
    phases.push_back(e);
  }
  j["schedule"] = phases;
  json st = json::array();
  for (const auto& a : p.schedule.startup) st.push_back(addr(a));
  j["startup"] = st;
  j["core_stage"] = p.core_stage;
  j["visible"] = units(p.visible);
  j["hidden"] = units(p.hidden);
  return j.dump() + "\n";
}

}  // namespace spikerbm
