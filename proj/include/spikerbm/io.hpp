#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "spikerbm/rbm.hpp"

namespace spikerbm {

// Write to a sibling temp file, then rename over the target, so readers never
// observe a truncated artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);
std::string read_file(const std::filesystem::path& path);

// Model files. The binary layout (little-endian):
//   "SRBM" | u32 version | u32 n_visible | u32 n_hidden | i32 scale (0 = real-valued)
//   weights row-major, visible bias, hidden bias  (f64 when real, i32 when quantized)
//   mask row-major, bit-packed LSB first
// The text export is JSON with the same fields; load_model accepts either.
constexpr std::uint32_t kModelFormatVersion = 1;

struct LoadedModel {
  Rbm model;                             // dequantized when the file is quantized
  std::optional<QuantizedRbm> quantized;
};

std::string encode_model(const Rbm& m);
std::string encode_model(const QuantizedRbm& m);
std::string model_to_json(const Rbm& m);
std::string model_to_json(const QuantizedRbm& m);
LoadedModel decode_model(std::string_view bytes);

void save_model(const std::filesystem::path& path, const Rbm& m);
void save_model(const std::filesystem::path& path, const QuantizedRbm& m);
void export_model_text(const std::filesystem::path& path, const Rbm& m);
void export_model_text(const std::filesystem::path& path, const QuantizedRbm& m);
LoadedModel load_model(const std::filesystem::path& path);

// FNV-1a over the canonical binary encoding; recorded in experiment reports.
std::string model_hash(const Rbm& m);

}  // namespace spikerbm
