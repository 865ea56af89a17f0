#include "spikerbm/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace spikerbm {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const fs::path& path, std::string_view data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(data.data(), std::streamsize(data.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

class Writer {
 public:
  template <typename T>
  void put(T x) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &x, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    buf_.append(reinterpret_cast<const char*>(b), sizeof(T));
  }
  void raw(std::string_view s) { buf_.append(s); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > s_.size()) throw std::runtime_error("model file: truncated payload");
    unsigned char b[sizeof(T)];
    std::memcpy(b, s_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T x;
    std::memcpy(&x, b, sizeof(T));
    return x;
  }
  std::uint8_t byte() { return get<std::uint8_t>(); }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

void put_header(Writer& w, Index nv, Index nh, int scale) {
  w.raw("SRBM");
  w.put<std::uint32_t>(kModelFormatVersion);
  w.put<std::uint32_t>(std::uint32_t(nv));
  w.put<std::uint32_t>(std::uint32_t(nh));
  w.put<std::int32_t>(scale);
}

void put_mask(Writer& w, const Mask& mask) {
  std::uint8_t acc = 0;
  int nbits = 0;
  for (Index i = 0; i < mask.rows(); ++i)
    for (Index j = 0; j < mask.cols(); ++j) {
      if (mask(i, j)) acc |= std::uint8_t(1u << nbits);
      if (++nbits == 8) {
        w.put(acc);
        acc = 0;
        nbits = 0;
      }
    }
  if (nbits) w.put(acc);
}

Mask get_mask(Reader& r, Index nv, Index nh) {
  Mask mask(nv, nh);
  std::uint8_t acc = 0;
  int nbits = 8;
  for (Index i = 0; i < nv; ++i)
    for (Index j = 0; j < nh; ++j) {
      if (nbits == 8) {
        acc = r.byte();
        nbits = 0;
      }
      mask(i, j) = (acc >> nbits++) & 1u;
    }
  return mask;
}

template <typename T, typename Mat>
void put_matrix(Writer& w, const Mat& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) w.put<T>(T(m(i, j)));
}

template <typename T, typename Mat>
void get_matrix(Reader& r, Mat& m) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = r.get<T>();
}

json mask_json(const Mask& mask) {
  json rows = json::array();
  for (Index i = 0; i < mask.rows(); ++i) {
    std::string row(std::size_t(mask.cols()), '0');
    for (Index j = 0; j < mask.cols(); ++j)
      if (mask(i, j)) row[std::size_t(j)] = '1';
    rows.push_back(row);
  }
  return rows;
}

template <typename Mat>
json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

template <typename Vec>
json vector_json(const Vec& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

LoadedModel decode_json(std::string_view text) {
  const json j = json::parse(text);
  if (j.value("format", "") != "spikerbm-model") throw std::runtime_error("model file: unknown format");
  if (j.at("version").get<int>() != int(kModelFormatVersion))
    throw std::runtime_error("model file: unsupported version");
  const Index nv = j.at("n_visible").get<Index>(), nh = j.at("n_hidden").get<Index>();
  Mask mask(nv, nh);
  const auto& rows = j.at("mask");
  if (Index(rows.size()) != nv) throw std::runtime_error("model file: mask row count");
  for (Index i = 0; i < nv; ++i) {
    const std::string row = rows[std::size_t(i)].get<std::string>();
    if (Index(row.size()) != nh) throw std::runtime_error("model file: mask row length");
    for (Index k = 0; k < nh; ++k) mask(i, k) = row[std::size_t(k)] == '1';
  }
  auto fill_matrix = [&](auto& m, const json& src) {
    if (Index(src.size()) != m.rows()) throw std::runtime_error("model file: weight rows");
    for (Index i = 0; i < m.rows(); ++i) {
      if (Index(src[std::size_t(i)].size()) != m.cols()) throw std::runtime_error("model file: weight cols");
      for (Index k = 0; k < m.cols(); ++k) src[std::size_t(i)][std::size_t(k)].get_to(m(i, k));
    }
  };
  auto fill_vector = [&](auto& v, const json& src) {
    if (Index(src.size()) != v.size()) throw std::runtime_error("model file: bias length");
    for (Index i = 0; i < v.size(); ++i) src[std::size_t(i)].get_to(v(i));
  };
  LoadedModel out;
  if (j.at("scale").is_null()) {
    out.model = Rbm(nv, nh);
    fill_matrix(out.model.weights, j.at("weights"));
    fill_vector(out.model.visible_bias, j.at("visible_bias"));
    fill_vector(out.model.hidden_bias, j.at("hidden_bias"));
    out.model.mask = mask;
    out.model.check();
  } else {
    QuantizedRbm q;
    q.scale = j.at("scale").get<int>();
    q.weights = IntMatrix::Zero(nv, nh);
    q.visible_bias = IntVector::Zero(nv);
    q.hidden_bias = IntVector::Zero(nh);
    fill_matrix(q.weights, j.at("weights"));
    fill_vector(q.visible_bias, j.at("visible_bias"));
    fill_vector(q.hidden_bias, j.at("hidden_bias"));
    q.mask = mask;
    q.check();
    out.model = q.dequantized();
    out.quantized = std::move(q);
  }
  return out;
}

}  // namespace

std::string encode_model(const Rbm& m) {
  m.check();
  Writer w;
  put_header(w, m.n_visible(), m.n_hidden(), 0);
  put_matrix<double>(w, m.weights);
  put_matrix<double>(w, m.visible_bias);
  put_matrix<double>(w, m.hidden_bias);
  put_mask(w, m.mask);
  return w.take();
}

std::string encode_model(const QuantizedRbm& m) {
  m.check();
  Writer w;
  put_header(w, m.n_visible(), m.n_hidden(), m.scale);
  put_matrix<std::int32_t>(w, m.weights);
  put_matrix<std::int32_t>(w, m.visible_bias);
  put_matrix<std::int32_t>(w, m.hidden_bias);
  put_mask(w, m.mask);
  return w.take();
}

std::string model_to_json(const Rbm& m) {
  json j = {{"format", "spikerbm-model"},
            {"version", kModelFormatVersion},
            {"n_visible", m.n_visible()},
            {"n_hidden", m.n_hidden()},
            {"scale", nullptr},
            {"weights", matrix_json(m.weights)},
            {"visible_bias", vector_json(m.visible_bias)},
            {"hidden_bias", vector_json(m.hidden_bias)},
            {"mask", mask_json(m.mask)}};
  return j.dump(1) + "\n";
}

std::string model_to_json(const QuantizedRbm& m) {
  json j = {{"format", "spikerbm-model"},
            {"version", kModelFormatVersion},
            {"n_visible", m.n_visible()},
            {"n_hidden", m.n_hidden()},
            {"scale", m.scale},
            {"weights", matrix_json(m.weights)},
            {"visible_bias", vector_json(m.visible_bias)},
            {"hidden_bias", vector_json(m.hidden_bias)},
            {"mask", mask_json(m.mask)}};
  return j.dump(1) + "\n";
}

LoadedModel decode_model(std::string_view bytes) {
  if (bytes.size() >= 4 && bytes.substr(0, 4) == "SRBM") {
    Reader r(bytes.substr(4));
    if (r.get<std::uint32_t>() != kModelFormatVersion)
      throw std::runtime_error("model file: unsupported version");
    const Index nv = r.get<std::uint32_t>(), nh = r.get<std::uint32_t>();
    const int scale = r.get<std::int32_t>();
    LoadedModel out;
    if (scale == 0) {
      Rbm m(nv, nh);
      get_matrix<double>(r, m.weights);
      get_matrix<double>(r, m.visible_bias);
      get_matrix<double>(r, m.hidden_bias);
      m.mask = get_mask(r, nv, nh);
      m.check();
      out.model = std::move(m);
    } else {
      QuantizedRbm q;
      q.scale = scale;
      q.weights.resize(nv, nh);
      q.visible_bias.resize(nv);
      q.hidden_bias.resize(nh);
      get_matrix<std::int32_t>(r, q.weights);
      get_matrix<std::int32_t>(r, q.visible_bias);
      get_matrix<std::int32_t>(r, q.hidden_bias);
      q.mask = get_mask(r, nv, nh);
      q.check();
      out.model = q.dequantized();
      out.quantized = std::move(q);
    }
    return out;
  }
  const auto first = bytes.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && bytes[first] == '{') return decode_json(bytes);
  throw std::runtime_error("model file: malformed header");
}

void save_model(const fs::path& path, const Rbm& m) { write_file_atomic(path, encode_model(m)); }
void save_model(const fs::path& path, const QuantizedRbm& m) { write_file_atomic(path, encode_model(m)); }
void export_model_text(const fs::path& path, const Rbm& m) { write_file_atomic(path, model_to_json(m)); }
void export_model_text(const fs::path& path, const QuantizedRbm& m) {
  write_file_atomic(path, model_to_json(m));
}
LoadedModel load_model(const fs::path& path) { return decode_model(read_file(path)); }

std::string model_hash(const Rbm& m) {
  const std::string bytes = encode_model(m);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace spikerbm
