#include <stdexcept>

#include "spikerbm/compiler.hpp"

namespace spikerbm {

PlacedChain::PlacedChain(const PlacedNetwork& p, SimOptions opts) : p_(p), sim_(p.network, opts) {
  const auto& cores = p.network.cores;
  neuron_offset_.assign(cores.size() + 1, 0);
  axon_offset_.assign(cores.size() + 1, 0);
  for (std::size_t c = 0; c < cores.size(); ++c) {
    neuron_offset_[c + 1] = neuron_offset_[c] + cores[c].neurons.size();
    axon_offset_[c + 1] = axon_offset_[c] + cores[c].axon_types.size();
  }
  splitter_unit_.assign(neuron_offset_.back(), 0);
  data_axon_layer_.assign(axon_offset_.back(), 0);
  for (const auto& u : p.visible) {
    for (const auto& n : u.splitter) splitter_unit_[neuron_offset_[std::size_t(n.core)] + std::size_t(n.neuron)] = 1 + u.index;
    for (const auto& a : u.sampler_data_axons) data_axon_layer_[axon_offset_[std::size_t(a.core)] + std::size_t(a.axon)] = 1;
  }
  for (const auto& u : p.hidden) {
    for (const auto& n : u.splitter) splitter_unit_[neuron_offset_[std::size_t(n.core)] + std::size_t(n.neuron)] = -(1 + u.index);
    for (const auto& a : u.sampler_data_axons) data_axon_layer_[axon_offset_[std::size_t(a.core)] + std::size_t(a.axon)] = 2;
  }
}

void PlacedChain::inject(const BinaryVector& values, const BinaryVector* known) {
  injected_.clear();
  for (std::size_t i = 0; i < p_.visible.size(); ++i) {
    if (known && !(*known)(Eigen::Index(i))) continue;
    const auto& u = p_.visible[i];
    injected_.push_back(values(Eigen::Index(i)) ? u.splitter_input : *u.clamp_off);
  }
}

void PlacedChain::tick_once(UnitState& s) {
  const ControlSchedule& sch = p_.schedule;
  const std::int64_t t = sim_.tick();
  events_.clear();
  sch.events(t, events_);
  events_.insert(events_.end(), injected_.begin(), injected_.end());
  injected_.clear();
  const auto& spikes = sim_.step(events_);

  const int P = sch.layer_period, Q = sch.image_period, ta = p_.config.accumulation;
  const std::int64_t phase = t < 1 ? -1 : ((t - sch.first_visible_frame) % Q + Q) % Q;
  for (const auto& sp : spikes) {
    const int u = splitter_unit_[neuron_offset_[std::size_t(sp.core)] + std::size_t(sp.neuron)];
    if (u > 0) {
      if (phase != 0) ++frame_violations_;
      else s.v(u - 1) = 1;
    } else if (u < 0) {
      if (phase != P) ++frame_violations_;
      else s.h(-u - 1) = 1;
    }
  }
  if (phase < 0) return;
  for (const auto& a : sim_.last_active_axons()) {
    const int layer = data_axon_layer_[axon_offset_[std::size_t(a.core)] + std::size_t(a.axon)];
    if (layer == 1 && phase >= P + ta + 2 && phase <= Q - 1) ++window_violations_;
    if (layer == 2 && phase >= ta + 2 && phase <= P - 1) ++window_violations_;
  }
}

void PlacedChain::start(const BinaryVector& v0) {
  if (v0.size() != Eigen::Index(p_.visible.size())) throw std::invalid_argument("placed chain: v0 size mismatch");
  if (sim_.tick() != 0) throw std::logic_error("placed chain: start() called twice");
  UnitState s(Eigen::Index(p_.visible.size()), Eigen::Index(p_.hidden.size()));
  const std::int64_t c0 = p_.schedule.first_visible_frame;
  while (sim_.tick() < c0) tick_once(s);
  inject(v0, nullptr);
  tick_once(s);
  cycle_ = 0;
}

UnitState PlacedChain::next(const BinaryVector* known, const BinaryVector* values) {
  if (sim_.tick() == 0) throw std::logic_error("placed chain: next() before start()");
  if ((known == nullptr) != (values == nullptr)) throw std::invalid_argument("placed chain: known and values go together");
  UnitState s(Eigen::Index(p_.visible.size()), Eigen::Index(p_.hidden.size()));
  const std::int64_t end = p_.schedule.visible_frame(cycle_ + 1);
  while (sim_.tick() < end) tick_once(s);
  if (known) inject(*values, known);
  tick_once(s);
  ++cycle_;
  return s;
}

}  // namespace spikerbm
