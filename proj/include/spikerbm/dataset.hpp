#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spikerbm/rbm.hpp"

namespace spikerbm {

// Binary images stored one per row, pixels row-major.
struct Dataset {
  int rows = 0;
  int cols = 0;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> pixels;
  std::vector<int> labels;  // empty when unlabeled

  Index size() const { return pixels.rows(); }
  Index dimension() const { return Index(rows) * cols; }
  BinaryVector image(Index k) const { return pixels.row(k).transpose(); }
  Dataset slice(Index first, Index count) const;
  // Per-pixel mean, the data marginals used for bias initialization and AIS.
  Eigen::VectorXd pixel_means() const;
};

// IDX image (and optional label) files, gzip-compressed or plain. Grey levels
// are binarized at half of full intensity.
Dataset load_mnist(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels = {},
                   std::optional<Index> limit = {});

enum class OcclusionGeometry { contiguous_block, random_pixels };

struct OcclusionSpec {
  double fraction = 0.35;
  OcclusionGeometry geometry = OcclusionGeometry::contiguous_block;
  std::uint64_t seed = 1;
};

struct Occluded {
  BinaryVector image;  // occluded pixels forced to 0
  BinaryVector known;  // 1 where the pixel survived
};

// contiguous_block removes the last round(fraction * n) pixels in row-major
// order (trailing rows plus a partial row); random_pixels removes a uniformly
// chosen subset of the same size.
Occluded occlude(const BinaryVector& image, const OcclusionSpec& spec);

// all_pixels_over_known: mismatches anywhere / number of known pixels (default)
// known_pixels_only:     mismatches on known pixels / number of known pixels
// all_pixels:            mismatches anywhere / number of pixels
// A denominator of zero falls back to the total pixel count.
enum class HammingNormalization { all_pixels_over_known, known_pixels_only, all_pixels };

double hamming_metric(const BinaryVector& original, const BinaryVector& reconstructed, const BinaryVector& known,
                      HammingNormalization norm = HammingNormalization::all_pixels_over_known);
std::size_t hamming_distance(const BinaryVector& a, const BinaryVector& b);

OcclusionGeometry occlusion_geometry_from_string(const std::string& s);
HammingNormalization hamming_normalization_from_string(const std::string& s);

}  // namespace spikerbm
