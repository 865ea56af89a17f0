#include <cstdio>
#include <stdexcept>

#include "spikerbm/experiments.hpp"
#include "spikerbm/io.hpp"

namespace spikerbm {

namespace {

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

const std::string& ExperimentReport::csv(const std::string& name) const {
  for (const auto& [n, text] : series)
    if (n == name) return text;
  throw std::out_of_range("report " + id + " has no series " + name);
}

std::string ExperimentReport::manifest() const {
  nlohmann::json files = nlohmann::json::array();
  const std::string config_text = config.dump(2) + "\n";
  files.push_back({{"name", "config.json"}, {"bytes", config_text.size()}, {"fnv1a", fnv1a_hex(config_text)}});
  for (const auto& [name, text] : series)
    files.push_back({{"name", name}, {"bytes", text.size()}, {"fnv1a", fnv1a_hex(text)}});
  nlohmann::json j;
  j["experiment"] = id;
  j["code_version"] = kCodeVersion;
  j["model_hash"] = model_hash;
  j["files"] = files;
  return j.dump(2) + "\n";
}

std::filesystem::path ExperimentReport::write(const std::filesystem::path& out_dir) const {
  if (id.empty()) throw std::invalid_argument("experiment report without id");
  const std::filesystem::path dir = out_dir / id;
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "config.json", config.dump(2) + "\n");
  for (const auto& [name, text] : series) write_file_atomic(dir / name, text);
  write_file_atomic(dir / "manifest.json", manifest());
  return dir;
}

}  // namespace spikerbm
