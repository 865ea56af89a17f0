#include "spikerbm/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace spikerbm {

Dataset Dataset::slice(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > size()) throw std::out_of_range("dataset slice out of range");
  Dataset d;
  d.rows = rows;
  d.cols = cols;
  d.pixels = pixels.middleRows(first, count);
  if (!labels.empty()) d.labels.assign(labels.begin() + first, labels.begin() + first + count);
  return d;
}

Eigen::VectorXd Dataset::pixel_means() const {
  if (size() == 0) return Eigen::VectorXd::Zero(dimension());
  return pixels.cast<double>().colwise().mean().transpose();
}

namespace {

// gzread passes uncompressed files through untouched, so one path serves both.
std::string slurp(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, std::size_t(n));
  int err = 0;
  const char* msg = gzerror(f, &err);
  gzclose(f);
  if (n < 0 || (err != Z_OK && err != Z_STREAM_END))
    throw std::runtime_error("read error in " + path.string() + ": " + msg);
  return out;
}

std::uint32_t be32(const std::string& s, std::size_t pos) {
  return (std::uint32_t(std::uint8_t(s[pos])) << 24) | (std::uint32_t(std::uint8_t(s[pos + 1])) << 16) |
         (std::uint32_t(std::uint8_t(s[pos + 2])) << 8) | std::uint32_t(std::uint8_t(s[pos + 3]));
}

}  // namespace

Dataset load_mnist(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels,
                   std::optional<Index> limit) {
  const std::string raw = slurp(images);
  if (raw.size() < 16 || be32(raw, 0) != 0x00000803)
    throw std::runtime_error("malformed IDX image header in " + images.string());
  const std::uint32_t count = be32(raw, 4), rows = be32(raw, 8), cols = be32(raw, 12);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
    throw std::runtime_error("malformed IDX image dimensions in " + images.string());
  const std::size_t per = std::size_t(rows) * cols;
  if (raw.size() < 16 + per * count) throw std::runtime_error("truncated IDX image payload in " + images.string());

  const Index n = limit ? std::min<Index>(*limit, count) : Index(count);
  Dataset d;
  d.rows = int(rows);
  d.cols = int(cols);
  d.pixels.resize(n, Index(per));
  for (Index k = 0; k < n; ++k)
    for (std::size_t p = 0; p < per; ++p)
      d.pixels(k, Index(p)) = std::uint8_t(raw[16 + std::size_t(k) * per + p]) >= 128 ? 1 : 0;

  if (labels) {
    const std::string lab = slurp(*labels);
    if (lab.size() < 8 || be32(lab, 0) != 0x00000801)
      throw std::runtime_error("malformed IDX label header in " + labels->string());
    if (be32(lab, 4) != count) throw std::runtime_error("label count does not match image count");
    if (lab.size() < 8 + std::size_t(count)) throw std::runtime_error("truncated IDX label payload");
    d.labels.resize(std::size_t(n));
    for (Index k = 0; k < n; ++k) d.labels[std::size_t(k)] = std::uint8_t(lab[8 + std::size_t(k)]);
  }
  return d;
}

Occluded occlude(const BinaryVector& image, const OcclusionSpec& spec) {
  if (!(spec.fraction >= 0.0 && spec.fraction <= 1.0)) throw std::invalid_argument("occlusion fraction must be in [0,1]");
  const Index n = image.size();
  const Index hidden = std::min<Index>(n, Index(std::llround(spec.fraction * double(n))));
  Occluded out{image, BinaryVector::Ones(n)};
  if (spec.geometry == OcclusionGeometry::contiguous_block) {
    for (Index i = n - hidden; i < n; ++i) out.known(i) = 0;
  } else {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    Rng rng = make_rng(spec.seed);
    // Partial Fisher-Yates: the first `hidden` entries form the occluded set.
    for (Index i = 0; i < hidden; ++i) {
      const Index j = i + Index(uniform_below(rng, std::uint64_t(n - i)));
      std::swap(order[std::size_t(i)], order[std::size_t(j)]);
      out.known(order[std::size_t(i)]) = 0;
    }
  }
  for (Index i = 0; i < n; ++i)
    if (!out.known(i)) out.image(i) = 0;
  return out;
}

std::size_t hamming_distance(const BinaryVector& a, const BinaryVector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("hamming: dimension mismatch");
  std::size_t d = 0;
  for (Index i = 0; i < a.size(); ++i) d += (a(i) != 0) != (b(i) != 0);
  return d;
}

double hamming_metric(const BinaryVector& original, const BinaryVector& reconstructed, const BinaryVector& known,
                      HammingNormalization norm) {
  if (original.size() != reconstructed.size() || original.size() != known.size())
    throw std::invalid_argument("hamming: dimension mismatch");
  std::size_t diff_all = 0, diff_known = 0, n_known = 0;
  for (Index i = 0; i < original.size(); ++i) {
    const bool differ = (original(i) != 0) != (reconstructed(i) != 0);
    diff_all += differ;
    if (known(i)) {
      ++n_known;
      diff_known += differ;
    }
  }
  const double total = double(original.size());
  const double denom = n_known ? double(n_known) : total;
  switch (norm) {
    case HammingNormalization::all_pixels_over_known: return double(diff_all) / denom;
    case HammingNormalization::known_pixels_only: return double(diff_known) / denom;
    case HammingNormalization::all_pixels: break;
  }
  return double(diff_all) / total;
}

OcclusionGeometry occlusion_geometry_from_string(const std::string& s) {
  if (s == "block" || s == "contiguous" || s == "contiguous-block") return OcclusionGeometry::contiguous_block;
  if (s == "random" || s == "random-pixels") return OcclusionGeometry::random_pixels;
  throw std::invalid_argument("occlusion geometry must be 'block' or 'random'");
}

HammingNormalization hamming_normalization_from_string(const std::string& s) {
  if (s == "all-over-known") return HammingNormalization::all_pixels_over_known;
  if (s == "known-only") return HammingNormalization::known_pixels_only;
  if (s == "all") return HammingNormalization::all_pixels;
  throw std::invalid_argument("hamming normalization must be all-over-known, known-only or all");
}

}  // namespace spikerbm
