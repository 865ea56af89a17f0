#include <algorithm>
#include <bit>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

#include "spikerbm/compiler.hpp"

namespace spikerbm {

int PackedNeuron::total() const {
  int t = 0;
  for (const auto& c : chunks) t += c.value;
  return t;
}

int PackedNeuron::distinct_values() const {
  std::set<int> s;
  for (const auto& c : chunks) s.insert(c.value);
  return int(s.size());
}

namespace {

bool admits(const PackedNeuron& n, int value, int accumulation) {
  if (n.total() + value > accumulation) return false;
  if (n.distinct_values() < 4) return true;
  return std::any_of(n.chunks.begin(), n.chunks.end(), [&](const WeightChunk& c) { return c.value == value; });
}

Packing pack_in_order(const std::vector<int>& weights, const std::vector<std::size_t>& order, int accumulation) {
  if (accumulation < 1) throw std::invalid_argument("packing: accumulation must be >= 1");
  Packing out;
  std::optional<std::size_t> open;
  for (std::size_t idx : order) {
    const int a = std::abs(weights[idx]);
    const int src = int(idx);
    for (int k = 0; k < a / accumulation; ++k) out.push_back({{{src, accumulation}}});
    const int rem = a % accumulation;
    if (rem == 0) continue;
    if (open && admits(out[*open], rem, accumulation)) {
      out[*open].chunks.push_back({src, rem});
    } else {
      out.push_back({{{src, rem}}});
      open = out.size() - 1;
    }
  }
  return out;
}

}  // namespace

Packing pack_weights_sequential(const std::vector<int>& weights, int accumulation) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  return pack_in_order(weights, order, accumulation);
}

Packing pack_weights_unpacked(const std::vector<int>& weights, int accumulation) {
  if (accumulation < 1) throw std::invalid_argument("packing: accumulation must be >= 1");
  Packing out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    int a = std::abs(weights[i]);
    while (a > 0) {
      const int c = std::min(a, accumulation);
      out.push_back({{{int(i), c}}});
      a -= c;
    }
  }
  return out;
}

Packing pack_weights_central(const std::vector<int>& weights, int accumulation, int central_weight) {
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const long da = std::labs(long(weights[a]) - central_weight), db = std::labs(long(weights[b]) - central_weight);
    if (da != db) return da < db;
    return weights[a] < weights[b];
  });
  return pack_in_order(weights, order, accumulation);
}

std::size_t unpacked_neuron_count(const std::vector<int>& weights, int accumulation) {
  if (accumulation < 1) throw std::invalid_argument("packing: accumulation must be >= 1");
  std::size_t n = 0;
  for (int w : weights) n += std::size_t((std::abs(w) + accumulation - 1) / accumulation);
  return n;
}

std::vector<SweepPoint> central_weight_sweep(const std::vector<int>& weights, int accumulation, int lo, int hi) {
  std::vector<SweepPoint> out;
  for (int cw = lo; cw <= hi; ++cw) out.push_back({cw, pack_weights_central(weights, accumulation, cw).size()});
  return out;
}

std::vector<std::string> check_packing(const std::vector<int>& weights, const Packing& packing, int accumulation) {
  std::vector<std::string> problems;
  std::vector<long> got(weights.size(), 0);
  for (std::size_t n = 0; n < packing.size(); ++n) {
    const auto& neuron = packing[n];
    if (neuron.chunks.empty()) problems.push_back("neuron " + std::to_string(n) + " is empty");
    if (neuron.total() > accumulation)
      problems.push_back("neuron " + std::to_string(n) + " holds " + std::to_string(neuron.total()) + " > " +
                         std::to_string(accumulation));
    if (neuron.distinct_values() > 4) problems.push_back("neuron " + std::to_string(n) + " needs >4 weight values");
    for (const auto& c : neuron.chunks) {
      if (c.source < 0 || std::size_t(c.source) >= weights.size()) {
        problems.push_back("neuron " + std::to_string(n) + " references a missing source");
        continue;
      }
      if (c.value <= 0) problems.push_back("neuron " + std::to_string(n) + " has a non-positive chunk");
      got[std::size_t(c.source)] += c.value;
    }
  }
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (got[i] != std::labs(weights[i]))
      problems.push_back("source " + std::to_string(i) + " carries " + std::to_string(got[i]) + " instead of " +
                         std::to_string(std::abs(weights[i])));
  return problems;
}

// ---------------------------------------------------------------------------

namespace {

bool fits(const Footprint& used, const Footprint& add, const Footprint& cap) {
  return used.neurons + add.neurons <= cap.neurons && used.axons + add.axons <= cap.axons;
}

void check_group(const Footprint& g, const Footprint& cap, std::size_t i) {
  if (g.neurons > cap.neurons || g.axons > cap.axons)
    throw std::invalid_argument("group " + std::to_string(i) + " needs " + std::to_string(g.neurons) +
                                " neurons / " + std::to_string(g.axons) +
                                " axons, more than one core offers (infeasible fan-in)");
}

}  // namespace

std::vector<std::vector<int>> pack_cores_s3(const std::vector<Footprint>& groups, Footprint capacity, PackKey key) {
  for (std::size_t i = 0; i < groups.size(); ++i) check_group(groups[i], capacity, i);
  std::vector<int> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  auto size_of = [&](int g) { return key == PackKey::neurons ? groups[std::size_t(g)].neurons : groups[std::size_t(g)].axons; };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return size_of(a) > size_of(b); });

  std::vector<std::vector<int>> cores;
  std::vector<bool> placed(groups.size(), false);
  std::size_t remaining = groups.size();
  while (remaining > 0) {
    std::vector<int> core;
    Footprint used;
    for (;;) {
      int pick = -1;
      for (int g : order)
        if (!placed[std::size_t(g)] && fits(used, groups[std::size_t(g)], capacity)) {
          pick = g;
          break;
        }
      if (pick < 0) break;
      placed[std::size_t(pick)] = true;
      --remaining;
      used.neurons += groups[std::size_t(pick)].neurons;
      used.axons += groups[std::size_t(pick)].axons;
      core.push_back(pick);
    }
    cores.push_back(std::move(core));
  }
  return cores;
}

std::vector<std::vector<int>> pack_cores_sequential(const std::vector<Footprint>& groups, Footprint capacity) {
  std::vector<std::vector<int>> cores;
  Footprint used;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    check_group(groups[i], capacity, i);
    if (cores.empty() || !fits(used, groups[i], capacity)) {
      cores.emplace_back();
      used = {};
    }
    cores.back().push_back(int(i));
    used.neurons += groups[i].neurons;
    used.axons += groups[i].axons;
  }
  return cores;
}

// ---------------------------------------------------------------------------

namespace {

typedef std::tuple<int, int, int> AxonKey;  // (owner unit or -1 when shared, source, type)

struct CoreState {
  StageTwoCorePlan plan;
  std::map<AxonKey, int> axon_index;
  std::vector<std::uint64_t> source_bits;
};

struct UnitPlan {
  std::vector<std::array<int, 4>> tables;
  std::vector<std::vector<std::pair<int, int>>> connections;  // axon ref (>= 0 existing, < 0 new), weight
  std::vector<AxonKey> new_axons;
};

UnitPlan plan_unit(const CoreState& core, const UnitDemand& u, bool share) {
  UnitPlan plan;
  std::map<AxonKey, int> fresh;
  const int owner = share ? -1 : u.unit;
  auto lookup = [&](const AxonKey& k) -> std::optional<int> {
    if (auto it = core.axon_index.find(k); it != core.axon_index.end()) return it->second;
    if (auto it = fresh.find(k); it != fresh.end()) return -(it->second + 1);
    return std::nullopt;
  };
  for (const auto& spec : u.neurons) {
    std::map<int, std::vector<int>> by_value;
    for (const auto& [src, val] : spec.inputs) by_value[val].push_back(src);
    if (by_value.size() > 4) throw std::logic_error("quantizer neuron needs more than 4 weight values");
    std::vector<std::pair<int, std::vector<int>>> values(by_value.begin(), by_value.end());
    std::stable_sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
      if (a.second.size() != b.second.size()) return a.second.size() > b.second.size();
      return a.first > b.first;
    });
    std::array<int, 4> table{};
    std::array<bool, 4> used{};
    std::vector<std::pair<int, int>> conn;
    for (const auto& [val, sources] : values) {
      int best = -1, best_score = -1;
      for (int g = 0; g < 4; ++g) {
        if (used[std::size_t(g)]) continue;
        int score = 0;
        for (int s : sources) score += lookup({owner, s, g}).has_value();
        if (score > best_score) {
          best = g;
          best_score = score;
        }
      }
      used[std::size_t(best)] = true;
      table[std::size_t(best)] = val;
      for (int s : sources) {
        const AxonKey key{owner, s, best};
        auto ref = lookup(key);
        if (!ref) {
          fresh.emplace(key, int(plan.new_axons.size()));
          plan.new_axons.push_back(key);
          ref = -int(plan.new_axons.size());
        }
        conn.emplace_back(*ref, val);
      }
    }
    plan.tables.push_back(table);
    plan.connections.push_back(std::move(conn));
  }
  return plan;
}

bool plan_fits(const CoreState& core, const UnitDemand& u, const UnitPlan& plan, int axon_cap, int neuron_cap) {
  return int(core.plan.neurons.size() + u.neurons.size()) <= neuron_cap &&
         int(core.plan.axons.size() + plan.new_axons.size()) <= axon_cap;
}

void commit(CoreState& core, const UnitDemand& u, const UnitPlan& plan) {
  const int base = int(core.plan.axons.size());
  for (const auto& key : plan.new_axons) {
    const int idx = int(core.plan.axons.size());
    core.plan.axons.push_back({std::get<1>(key), std::get<2>(key)});
    core.axon_index.emplace(key, idx);
    const int s = std::get<1>(key);
    core.source_bits[std::size_t(s) / 64] |= std::uint64_t(1) << (s % 64);
  }
  core.plan.units.push_back(u.unit);
  for (std::size_t n = 0; n < u.neurons.size(); ++n) {
    core.plan.neurons.push_back(u.neurons[n]);
    core.plan.tables.push_back(plan.tables[n]);
    std::vector<std::pair<int, int>> conn;
    for (const auto& [ref, w] : plan.connections[n]) conn.emplace_back(ref >= 0 ? ref : base + (-ref - 1), w);
    core.plan.connections.push_back(std::move(conn));
  }
}

}  // namespace

std::vector<StageTwoCorePlan> pack_units_s2(const std::vector<UnitDemand>& units, int n_sources, bool share,
                                            int axon_capacity, int neuron_capacity) {
  const std::size_t words = std::size_t(n_sources + 63) / 64 + 1;
  auto fresh_core = [&] {
    CoreState c;
    c.source_bits.assign(words, 0);
    return c;
  };
  std::vector<std::vector<std::uint64_t>> unit_bits(units.size(), std::vector<std::uint64_t>(words, 0));
  std::vector<int> unit_sources(units.size(), 0);
  for (std::size_t u = 0; u < units.size(); ++u) {
    std::set<int> srcs;
    for (const auto& n : units[u].neurons)
      for (const auto& [s, v] : n.inputs) {
        if (s < 0 || s >= n_sources) throw std::out_of_range("pack_units_s2: source id out of range");
        srcs.insert(s);
      }
    for (int s : srcs) unit_bits[u][std::size_t(s) / 64] |= std::uint64_t(1) << (s % 64);
    unit_sources[u] = int(srcs.size());
  }
  auto infeasible = [&](std::size_t u) {
    return std::invalid_argument("unit " + std::to_string(units[u].unit) +
                                 " needs more quantizer neurons or axons than one core offers (infeasible fan-in)");
  };

  std::vector<StageTwoCorePlan> cores;
  if (!share) {
    CoreState core = fresh_core();
    bool open = false;
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (units[u].neurons.empty()) continue;
      UnitPlan plan = plan_unit(core, units[u], false);
      if (!open || !plan_fits(core, units[u], plan, axon_capacity, neuron_capacity)) {
        if (open) cores.push_back(std::move(core.plan));
        core = fresh_core();
        open = true;
        plan = plan_unit(core, units[u], false);
        if (!plan_fits(core, units[u], plan, axon_capacity, neuron_capacity)) throw infeasible(u);
      }
      commit(core, units[u], plan);
    }
    if (open) cores.push_back(std::move(core.plan));
    return cores;
  }

  std::vector<bool> placed(units.size(), false);
  std::size_t remaining = 0;
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (units[u].neurons.empty()) placed[u] = true;
    else ++remaining;
  }
  while (remaining > 0) {
    CoreState core = fresh_core();
    std::size_t seed = 0;
    while (placed[seed]) ++seed;
    UnitPlan plan = plan_unit(core, units[seed], true);
    if (!plan_fits(core, units[seed], plan, axon_capacity, neuron_capacity)) throw infeasible(seed);
    commit(core, units[seed], plan);
    placed[seed] = true;
    --remaining;

    for (;;) {
      const int free_neurons = neuron_capacity - int(core.plan.neurons.size());
      const int free_axons = axon_capacity - int(core.plan.axons.size());
      std::vector<std::pair<int, std::size_t>> cand;  // (-shared sources, unit)
      for (std::size_t u = 0; u < units.size(); ++u) {
        if (placed[u] || int(units[u].neurons.size()) > free_neurons) continue;
        int shared = 0;
        for (std::size_t w = 0; w < words; ++w) shared += std::popcount(unit_bits[u][w] & core.source_bits[w]);
        // Every source not yet in the core costs at least one new axon.
        if (unit_sources[u] - shared > free_axons) continue;
        cand.emplace_back(-shared, u);
      }
      std::sort(cand.begin(), cand.end());
      bool added = false;
      for (const auto& [neg, u] : cand) {
        UnitPlan p = plan_unit(core, units[u], true);
        if (!plan_fits(core, units[u], p, axon_capacity, neuron_capacity)) continue;
        commit(core, units[u], p);
        placed[u] = true;
        --remaining;
        added = true;
        break;
      }
      if (!added) break;
    }
    cores.push_back(std::move(core.plan));
  }
  return cores;
}

}  // namespace spikerbm
