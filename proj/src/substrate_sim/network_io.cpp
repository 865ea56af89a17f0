#include <json.hpp>

#include <stdexcept>

#include "spikerbm/io.hpp"
#include "spikerbm/substrate.hpp"

namespace spikerbm {

using nlohmann::json;

// Layout:
// { "format": "spikerbm-network", "version": 1,
//   "neuron_fields": [...names...],
//   "cores": [ { "label", "axon_types": "0123...", "crossbar": ["<hex>", ...],
//                "neurons": [[fields...], ...], "intended": [[axon, neuron, weight], ...] } ],
//   "routes": [[src_core, src_neuron, dst_core, dst_axon], ...],
//   "inputs": { "name": [[core, axon], ...] } }
// Crossbar rows are hex, nibble k covering neurons 4k..4k+3 (low bit first),
// with trailing zero nibbles dropped.

namespace {

constexpr int kNetworkFormatVersion = 1;
const char* kNeuronFields[] = {"w0",        "w1",             "w2",          "w3",
                               "leak",      "stochastic_leak", "threshold",   "threshold_bits",
                               "reset",     "reset_mode",      "neg_saturation", "pos_saturation"};

std::string row_to_hex(const std::bitset<kCoreSize>& row) {
  static const char* digits = "0123456789abcdef";
  std::string s(kCoreSize / 4, '0');
  for (int k = 0; k < kCoreSize / 4; ++k) {
    int nib = 0;
    for (int b = 0; b < 4; ++b)
      if (row.test(std::size_t(4 * k + b))) nib |= 1 << b;
    s[std::size_t(k)] = digits[nib];
  }
  while (!s.empty() && s.back() == '0') s.pop_back();
  return s;
}

std::bitset<kCoreSize> row_from_hex(const std::string& s) {
  if (s.size() > kCoreSize / 4) throw std::runtime_error("network file: crossbar row too long");
  std::bitset<kCoreSize> row;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const char c = s[k];
    int nib;
    if (c >= '0' && c <= '9') nib = c - '0';
    else if (c >= 'a' && c <= 'f') nib = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') nib = c - 'A' + 10;
    else throw std::runtime_error("network file: bad hex digit in crossbar");
    for (int b = 0; b < 4; ++b)
      if (nib & (1 << b)) row.set(4 * k + std::size_t(b));
  }
  return row;
}

json opt_json(const std::optional<int>& x) { return x ? json(*x) : json(nullptr); }
std::optional<int> opt_from(const json& j) { return j.is_null() ? std::nullopt : std::optional<int>(j.get<int>()); }

}  // namespace

std::string network_to_json(const Network& net) {
  json j;
  j["format"] = "spikerbm-network";
  j["version"] = kNetworkFormatVersion;
  j["neuron_fields"] = kNeuronFields;
  json cores = json::array();
  for (const Core& c : net.cores) {
    json jc;
    jc["label"] = c.label;
    std::string types;
    for (auto t : c.axon_types) types.push_back(char('0' + t));
    jc["axon_types"] = types;
    json rows = json::array();
    for (const auto& r : c.crossbar) rows.push_back(row_to_hex(r));
    jc["crossbar"] = rows;
    json neurons = json::array();
    for (const auto& p : c.neurons)
      neurons.push_back({p.weights[0], p.weights[1], p.weights[2], p.weights[3], p.leak, p.stochastic_leak ? 1 : 0,
                         p.threshold, p.threshold_bits, p.reset_value, to_string(p.reset_mode),
                         opt_json(p.neg_saturation), opt_json(p.pos_saturation)});
    jc["neurons"] = neurons;
    json intended = json::array();
    for (const auto& s : c.intended) intended.push_back({s.axon, s.neuron, s.weight});
    jc["intended"] = intended;
    cores.push_back(std::move(jc));
  }
  j["cores"] = std::move(cores);
  json routes = json::array();
  for (const auto& r : net.routes) routes.push_back({r.source.core, r.source.neuron, r.target.core, r.target.axon});
  j["routes"] = std::move(routes);
  json inputs = json::object();
  for (const auto& [name, axons] : net.inputs) {
    json list = json::array();
    for (const auto& a : axons) list.push_back({a.core, a.axon});
    inputs[name] = list;
  }
  j["inputs"] = std::move(inputs);
  return j.dump() + "\n";
}

Network network_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("network file: ") + e.what());
  }
  if (j.value("format", "") != "spikerbm-network") throw std::runtime_error("network file: unknown format");
  if (j.value("version", 0) != kNetworkFormatVersion) throw std::runtime_error("network file: unsupported version");
  Network net;
  try {
    for (const auto& jc : j.at("cores")) {
      Core c;
      c.label = jc.value("label", "");
      for (char t : jc.at("axon_types").get<std::string>()) {
        if (t < '0' || t > '9') throw std::runtime_error("network file: bad axon type");
        c.axon_types.push_back(std::uint8_t(t - '0'));
      }
      for (const auto& r : jc.at("crossbar")) c.crossbar.push_back(row_from_hex(r.get<std::string>()));
      for (const auto& jn : jc.at("neurons")) {
        if (jn.size() != std::size(kNeuronFields)) throw std::runtime_error("network file: neuron field count");
        NeuronParams p;
        for (int g = 0; g < 4; ++g) p.weights[std::size_t(g)] = jn[std::size_t(g)].get<int>();
        p.leak = jn[4].get<int>();
        p.stochastic_leak = jn[5].get<int>() != 0;
        p.threshold = jn[6].get<int>();
        p.threshold_bits = jn[7].get<int>();
        p.reset_value = jn[8].get<int>();
        p.reset_mode = reset_mode_from_string(jn[9].get<std::string>());
        p.neg_saturation = opt_from(jn[10]);
        p.pos_saturation = opt_from(jn[11]);
        c.neurons.push_back(p);
      }
      if (jc.contains("intended"))
        for (const auto& s : jc.at("intended")) c.intended.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>()});
      net.cores.push_back(std::move(c));
    }
    for (const auto& r : j.at("routes"))
      net.routes.push_back({{r[0].get<int>(), r[1].get<int>()}, {r[2].get<int>(), r[3].get<int>()}});
    if (j.contains("inputs"))
      for (const auto& [name, list] : j.at("inputs").items())
        for (const auto& a : list) net.inputs[name].push_back({a[0].get<int>(), a[1].get<int>()});
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("network file: ") + e.what());
  }
  return net;
}

void save_network(const std::filesystem::path& path, const Network& net) { write_file_atomic(path, network_to_json(net)); }

Network load_network(const std::filesystem::path& path) { return network_from_json(read_file(path)); }

}  // namespace spikerbm
