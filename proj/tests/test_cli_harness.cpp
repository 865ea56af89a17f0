#include <gtest/gtest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "spikerbm/experiments.hpp"
#include "spikerbm/io.hpp"
#include "spikerbm/sampler.hpp"

namespace spikerbm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("spikerbm-cli-" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SPIKERBM_CLI + "\" " + args + " > \"" +
                          (work_dir() / "stdout.txt").string() + "\" 2> \"" + (work_dir() / "stderr.txt").string() +
                          "\"";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Small model shared by the tests that need one.
const fs::path& trained_model() {
  static const fs::path path = [] {
    const fs::path p = work_dir() / "model.srbm";
    const int rc = run_cli("--seed 3 train --limit 60 --epochs 2 --patch 24 -o \"" + p.string() + "\"");
    EXPECT_EQ(rc, 0) << slurp(work_dir() / "stderr.txt");
    return p;
  }();
  return path;
}

// Compiles the shared model and returns the network file.
const fs::path& mapped_network() {
  static const fs::path path = [] {
    const fs::path out = work_dir() / "mapped";
    const int rc =
        run_cli("--out-dir \"" + out.string() + "\" map --model \"" + trained_model().string() + "\" --accumulation 16");
    EXPECT_EQ(rc, 0) << slurp(work_dir() / "stderr.txt");
    return out / "map" / "network.json";
  }();
  return path;
}

TEST(ExitCodes, Usage) {
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("no-such-command"), 1);
  EXPECT_EQ(run_cli("fit-sampler --reduction median"), 1);
  EXPECT_EQ(run_cli("figures fig99"), 1);
  EXPECT_EQ(run_cli("fit-sampler --bits-range 9:2"), 1);
  EXPECT_EQ(run_cli("--help"), 0);
}

TEST(ExitCodes, MissingPrerequisite) {
  const std::string missing = (work_dir() / "absent.srbm").string();
  EXPECT_EQ(run_cli("reconstruct --model \"" + missing + "\""), 3);
  EXPECT_EQ(run_cli("ais --model \"" + missing + "\""), 3);
  EXPECT_EQ(run_cli("map --model \"" + missing + "\""), 3);
  EXPECT_EQ(run_cli("validate \"" + (work_dir() / "absent.json").string() + "\""), 3);
  EXPECT_EQ(run_cli("train --images \"" + (work_dir() / "absent.idx").string() + "\""), 3);
  EXPECT_EQ(run_cli("--out-dir \"" + work_dir().string() + "\" figures table2"), 3);
}

TEST(Validate, FreshlyCompiledNetworkPasses) {
  EXPECT_EQ(run_cli("validate \"" + mapped_network().string() + "\""), 0) << slurp(work_dir() / "stdout.txt");
  const auto resources = json::parse(slurp(mapped_network().parent_path() / "resources.json"));
  EXPECT_GT(resources.at("total_cores").get<int>(), 0);
  const auto placement = json::parse(slurp(mapped_network().parent_path() / "placement.json"));
  EXPECT_EQ(placement.at("format").get<std::string>(), "spikerbm-placement");
}

TEST(Validate, DamagedNetworkFails) {
  json j = json::parse(slurp(mapped_network()));
  json* target = nullptr;
  for (auto& core : j.at("cores"))
    if (!core.at("intended").empty()) {
      target = &core;
      break;
    }
  ASSERT_NE(target, nullptr);
  (*target)["intended"][0][2] = (*target)["intended"][0][2].get<int>() + 97;
  const fs::path bad = work_dir() / "damaged.json";
  std::ofstream(bad) << j.dump();
  EXPECT_EQ(run_cli("validate \"" + bad.string() + "\""), 2);
  EXPECT_FALSE(slurp(work_dir() / "stdout.txt").empty());

  json routed = json::parse(slurp(mapped_network()));
  routed["routes"][0][3] = 999;
  const fs::path bad_route = work_dir() / "bad-route.json";
  std::ofstream(bad_route) << routed.dump();
  EXPECT_EQ(run_cli("validate \"" + bad_route.string() + "\""), 2);

  const fs::path truncated = work_dir() / "truncated.json";
  const std::string text = slurp(mapped_network());
  std::ofstream(truncated) << text.substr(0, text.size() / 2);
  EXPECT_NE(run_cli("validate \"" + truncated.string() + "\""), 0);
}

TEST(Validate, EmptyNetworkPasses) {
  const fs::path empty = work_dir() / "empty.json";
  std::ofstream(empty) << network_to_json(Network{});
  EXPECT_EQ(run_cli("validate \"" + empty.string() + "\""), 0);
}

TEST(Figures, Table1MatchesLibraryAndIsReproducible) {
  const fs::path a = work_dir() / "fig-a", b = work_dir() / "fig-b";
  ASSERT_EQ(run_cli("--out-dir \"" + a.string() + "\" figures table1 fig13"), 0);
  ASSERT_EQ(run_cli("--out-dir \"" + b.string() + "\" figures table1 fig13"), 0);
  EXPECT_EQ(slurp(a / "table1" / "manifest.json"), slurp(b / "table1" / "manifest.json"));
  EXPECT_EQ(slurp(a / "fig13" / "packing.csv"), slurp(b / "fig13" / "packing.csv"));

  std::istringstream table(slurp(a / "table1" / "table1.csv"));
  std::string line;
  std::getline(table, line);
  int rows = 0;
  for (const auto& nc : preset_configs(LeakProbability::half)) {
    ASSERT_TRUE(std::getline(table, line));
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 8u);
    EXPECT_EQ(cells[0], nc.name);
    EXPECT_NEAR(std::stod(cells[6]), table1_error(nc.config), 1e-9);
    ++rows;
  }
  EXPECT_EQ(rows, 5);

  const auto manifest = json::parse(slurp(a / "fig13" / "manifest.json"));
  EXPECT_EQ(manifest.at("experiment").get<std::string>(), "fig13");
  for (const auto& f : manifest.at("files"))
    EXPECT_EQ(fs::file_size(a / "fig13" / f.at("name").get<std::string>()), f.at("bytes").get<std::size_t>());

  std::istringstream packing(slurp(a / "fig13" / "packing.csv"));
  std::getline(packing, line);
  int points = 0;
  while (std::getline(packing, line)) {
    EXPECT_EQ(line.substr(line.find(',') + 1, 4), "120,");
    ++points;
  }
  EXPECT_EQ(points, 21);
}

TEST(Reconstruct, NothingHiddenMeansNoErrors) {
  const fs::path out = work_dir() / "rec0";
  ASSERT_EQ(run_cli("--out-dir \"" + out.string() + "\" reconstruct --model \"" + trained_model().string() +
                    "\" --backend ideal --occlusion 0 --samples 5 --limit 4"),
            0)
      << slurp(work_dir() / "stderr.txt");
  std::istringstream mean(slurp(out / "reconstruct-ideal" / "hamming_mean.csv"));
  std::string line;
  std::getline(mean, line);
  int rows = 0;
  while (std::getline(mean, line)) {
    std::stringstream ls(line);
    std::string sample, hd;
    std::getline(ls, sample, ',');
    std::getline(ls, hd, ',');
    EXPECT_EQ(std::stod(hd), 0.0) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 5);
}

TEST(Reconstruct, ThreadCountDoesNotChangeResults) {
  const fs::path a = work_dir() / "rec-a", b = work_dir() / "rec-b";
  const std::string args = " reconstruct --model \"" + trained_model().string() +
                           "\" --backend neural-fast --samples 6 --limit 6 --occlusion 0.3";
  ASSERT_EQ(run_cli("--seed 9 --threads 1 --out-dir \"" + a.string() + "\"" + args), 0);
  ASSERT_EQ(run_cli("--seed 9 --threads 4 --out-dir \"" + b.string() + "\"" + args), 0);
  EXPECT_EQ(slurp(a / "reconstruct-neural-fast" / "hamming.csv"), slurp(b / "reconstruct-neural-fast" / "hamming.csv"));
  EXPECT_EQ(slurp(a / "reconstruct-neural-fast" / "manifest.json"),
            slurp(b / "reconstruct-neural-fast" / "manifest.json"));
}

TEST(Commands, AnalyzeDtmcAndFitSampler) {
  const fs::path out = work_dir() / "dtmc";
  ASSERT_EQ(run_cli("--out-dir \"" + out.string() + "\" analyze-dtmc --preset G2"), 0);
  const auto summary = json::parse(slurp(out / "analyze-dtmc" / "summary.json"));
  EXPECT_NEAR(summary.at("sse").get<double>(), table1_error(preset_config("G2")), 1e-9);

  ASSERT_EQ(run_cli("--out-dir \"" + out.string() +
                    "\" fit-sampler --scale 10 --window 4 --threshold-range 0:20 --bits-range 4:6 --leak-range 1:20"),
            0);
  const auto fitted = json::parse(slurp(out / "fit-sampler" / "sampler.json"));
  const SamplerConfig c = sampler_from_json(fitted);
  EXPECT_EQ(c.scale, 10);
  EXPECT_EQ(c.window, 4);
  ASSERT_EQ(run_cli("--out-dir \"" + out.string() + "\" analyze-dtmc --sampler-json \"" +
                    (out / "fit-sampler" / "sampler.json").string() + "\""),
            0);
}

TEST(Commands, SimulateCompiledModel) {
  const fs::path out = work_dir() / "sim";
  ASSERT_EQ(run_cli("--out-dir \"" + out.string() + "\" simulate --model \"" + trained_model().string() +
                    "\" --accumulation 16 --ticks 200"),
            0)
      << slurp(work_dir() / "stderr.txt");
  EXPECT_EQ(slurp(out / "simulate" / "spikes.csv").substr(0, 4), "tick");
  EXPECT_EQ(run_cli("simulate --ticks 10"), 1);
}

}  // namespace
}  // namespace spikerbm
