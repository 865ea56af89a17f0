#include "spikerbm/rbm.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <vector>

namespace spikerbm {

void QuantizedRbm::check() const {
  if (scale < 1) throw std::invalid_argument("quantized rbm: scale must be >= 1");
  if (visible_bias.size() != n_visible() || hidden_bias.size() != n_hidden() ||
      mask.rows() != n_visible() || mask.cols() != n_hidden())
    throw std::invalid_argument("quantized rbm: inconsistent dimensions");
  for (Index j = 0; j < n_hidden(); ++j)
    for (Index i = 0; i < n_visible(); ++i)
      if (!mask(i, j) && weights(i, j) != 0)
        throw std::invalid_argument("quantized rbm: nonzero weight outside mask");
}

Rbm QuantizedRbm::dequantized() const {
  Rbm m;
  m.weights = weights.cast<double>() / double(scale);
  m.visible_bias = visible_bias.cast<double>() / double(scale);
  m.hidden_bias = hidden_bias.cast<double>() / double(scale);
  m.mask = mask;
  return m;
}

QuantizedRbm quantize(const Rbm& m, int scale) {
  if (scale <= 0) throw std::invalid_argument("quantize: scale must be positive");
  m.check();
  const double s = scale;
  QuantizedRbm q;
  q.scale = scale;
  q.weights = m.weights.unaryExpr([s](double w) { return round_half_away(w * s); });
  q.visible_bias = m.visible_bias.unaryExpr([s](double b) { return round_half_away(b * s); });
  q.hidden_bias = m.hidden_bias.unaryExpr([s](double b) { return round_half_away(b * s); });
  q.mask = m.mask;
  // Masked weights are already exactly zero; keep it structural anyway.
  q.weights = q.weights.cwiseProduct(q.mask.cast<int>());
  return q;
}

std::uint64_t visible_index(const BinaryVector& v) {
  std::uint64_t idx = 0;
  for (Index i = 0; i < v.size(); ++i)
    if (v(i)) idx |= std::uint64_t(1) << i;
  return idx;
}

BinaryVector visible_from_index(std::uint64_t index, Index n_visible) {
  BinaryVector v(n_visible);
  for (Index i = 0; i < n_visible; ++i) v(i) = (index >> i) & 1u;
  return v;
}

std::uint64_t state_index(const UnitState& s) {
  std::uint64_t idx = visible_index(s.v);
  for (Index j = 0; j < s.h.size(); ++j)
    if (s.h(j)) idx |= std::uint64_t(1) << (s.v.size() + j);
  return idx;
}

UnitState state_from_index(std::uint64_t index, Index n_visible, Index n_hidden) {
  UnitState s;
  s.v = visible_from_index(index, n_visible);
  s.h = visible_from_index(index >> n_visible, n_hidden);
  return s;
}

namespace {

void check_cap(Index n, int cap, const char* what) {
  if (n > cap || n > 62)
    throw std::length_error(std::string(what) + ": " + std::to_string(n) +
                            " units exceed enumeration cap " + std::to_string(cap));
}

// Subset sums of `a`, one per bitmask, built incrementally from the lowest set bit.
void subset_sums(const Eigen::VectorXd& a, std::vector<double>& out) {
  const std::size_t n = std::size_t(1) << a.size();
  out.resize(n);
  out[0] = 0.0;
  for (std::size_t x = 1; x < n; ++x) out[x] = out[x & (x - 1)] + a(std::countr_zero(x));
}

// log of the unnormalized marginal of one layer, enumerated in Gray-code order
// so each step touches a single row of the coupling matrix.
// `w` maps the enumerated layer (rows) to the summed-out layer (columns).
std::vector<double> layer_log_marginal(const Eigen::MatrixXd& w, const Eigen::VectorXd& own_bias,
                                       const Eigen::VectorXd& other_bias) {
  const Index n = w.rows();
  const std::size_t count = std::size_t(1) << n;
  std::vector<double> out(count);
  Eigen::VectorXd drive = other_bias;
  double linear = 0.0;
  std::size_t code = 0;
  for (std::size_t k = 0; k < count; ++k) {
    if (k > 0) {
      const int bit = std::countr_zero(k);
      code ^= std::size_t(1) << bit;
      const double sign = (code >> bit) & 1u ? 1.0 : -1.0;
      drive += sign * w.row(bit).transpose();
      linear += sign * own_bias(bit);
    }
    double acc = linear;
    for (Index j = 0; j < drive.size(); ++j) acc += softplus(drive(j));
    out[code] = acc;
  }
  return out;
}

double log_sum_exp(const std::vector<double>& x) {
  const double mx = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

}  // namespace

Eigen::VectorXd exact_distribution(const Rbm& m, int cap) {
  m.check();
  const Index nv = m.n_visible(), nh = m.n_hidden();
  check_cap(nv + nh, cap, "exact_distribution");
  const std::size_t nvs = std::size_t(1) << nv, nhs = std::size_t(1) << nh;
  Eigen::VectorXd neg_energy(nvs * nhs);
  std::vector<double> vsum, hsum;
  subset_sums(m.hidden_bias, hsum);
  for (std::size_t hb = 0; hb < nhs; ++hb) {
    Eigen::VectorXd a = m.visible_bias;
    for (Index j = 0; j < nh; ++j)
      if ((hb >> j) & 1u) a += m.weights.col(j);
    subset_sums(a, vsum);
    for (std::size_t vb = 0; vb < nvs; ++vb) neg_energy(hb * nvs + vb) = vsum[vb] + hsum[hb];
  }
  const double mx = neg_energy.maxCoeff();
  Eigen::VectorXd p = (neg_energy.array() - mx).exp();
  return p / p.sum();
}

Eigen::VectorXd exact_visible_distribution(const Rbm& m, int cap) {
  m.check();
  check_cap(m.n_visible(), cap, "exact_visible_distribution");
  const std::vector<double> lp = layer_log_marginal(m.weights, m.visible_bias, m.hidden_bias);
  const double lz = log_sum_exp(lp);
  Eigen::VectorXd p(lp.size());
  for (std::size_t k = 0; k < lp.size(); ++k) p(k) = std::exp(lp[k] - lz);
  return p;
}

double log_partition(const Rbm& m, int cap) {
  m.check();
  if (m.n_visible() <= m.n_hidden()) {
    check_cap(m.n_visible(), cap, "log_partition");
    return log_sum_exp(layer_log_marginal(m.weights, m.visible_bias, m.hidden_bias));
  }
  check_cap(m.n_hidden(), cap, "log_partition");
  return log_sum_exp(layer_log_marginal(m.weights.transpose(), m.hidden_bias, m.visible_bias));
}

double log_unnormalized_visible(const Rbm& m, const Eigen::VectorXd& v) {
  const Eigen::VectorXd drive = m.weights.transpose() * v + m.hidden_bias;
  double acc = m.visible_bias.dot(v);
  for (Index j = 0; j < drive.size(); ++j) acc += softplus(drive(j));
  return acc;
}

double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: support size mismatch");
  double acc = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0)
      throw std::domain_error("kl_divergence: q is zero where p is positive (index " +
                              std::to_string(i) + ")");
    acc += p(i) * std::log(p(i) / q(i));
  }
  return std::max(acc, 0.0);
}

Mask patch_mask(int image_side, int patch_side) {
  if (image_side < 1 || patch_side < 1 || patch_side > image_side)
    throw std::invalid_argument("patch_mask: need 1 <= patch <= image side");
  const int positions = image_side - patch_side + 1;
  Mask mask = Mask::Zero(Index(image_side) * image_side, Index(positions) * positions);
  for (int top = 0; top < positions; ++top)
    for (int left = 0; left < positions; ++left) {
      const Index col = Index(top) * positions + left;
      for (int r = top; r < top + patch_side; ++r)
        for (int c = left; c < left + patch_side; ++c) mask(Index(r) * image_side + c, col) = 1;
    }
  return mask;
}

Rbm random_rbm(Index n_visible, Index n_hidden, double weight_sd, double bias_sd, Rng& rng) {
  Rbm m(n_visible, n_hidden);
  for (Index j = 0; j < n_hidden; ++j)
    for (Index i = 0; i < n_visible; ++i) m.weights(i, j) = weight_sd * normal01(rng);
  for (Index i = 0; i < n_visible; ++i) m.visible_bias(i) = bias_sd * normal01(rng);
  for (Index j = 0; j < n_hidden; ++j) m.hidden_bias(j) = bias_sd * normal01(rng);
  return m;
}

}  // namespace spikerbm
