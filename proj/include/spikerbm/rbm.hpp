#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "spikerbm/rng.hpp"

namespace spikerbm {

using Index = Eigen::Index;
typedef Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1> BinaryVector;
typedef Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> Mask;
typedef Eigen::MatrixXi IntMatrix;
typedef Eigen::VectorXi IntVector;

// Dense RBM. weights is n_visible x n_hidden; mask zeros force weight zeros.
template <typename Scalar>
struct RbmModel {
  typedef Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> Matrix;
  typedef Eigen::Matrix<Scalar, Eigen::Dynamic, 1> Vector;

  Matrix weights;
  Vector visible_bias;
  Vector hidden_bias;
  Mask mask;

  RbmModel() = default;
  RbmModel(Index n_visible, Index n_hidden)
      : weights(Matrix::Zero(n_visible, n_hidden)),
        visible_bias(Vector::Zero(n_visible)),
        hidden_bias(Vector::Zero(n_hidden)),
        mask(Mask::Ones(n_visible, n_hidden)) {}

  Index n_visible() const { return weights.rows(); }
  Index n_hidden() const { return weights.cols(); }

  void apply_mask() { weights = weights.cwiseProduct(mask.template cast<Scalar>()); }

  // Throws std::invalid_argument when shapes disagree or a masked weight is nonzero.
  void check() const {
    if (visible_bias.size() != n_visible() || hidden_bias.size() != n_hidden() ||
        mask.rows() != n_visible() || mask.cols() != n_hidden())
      throw std::invalid_argument("rbm: inconsistent dimensions");
    for (Index j = 0; j < n_hidden(); ++j)
      for (Index i = 0; i < n_visible(); ++i)
        if (!mask(i, j) && weights(i, j) != Scalar(0))
          throw std::invalid_argument("rbm: nonzero weight outside mask at (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
  }

  template <typename To>
  RbmModel<To> cast() const {
    RbmModel<To> out;
    out.weights = weights.template cast<To>();
    out.visible_bias = visible_bias.template cast<To>();
    out.hidden_bias = hidden_bias.template cast<To>();
    out.mask = mask;
    return out;
  }
};

typedef RbmModel<double> Rbm;
typedef RbmModel<float> RbmF;

// Integer model in the membrane-potential domain: every field is round(x * scale).
struct QuantizedRbm {
  int scale = 1;
  IntMatrix weights;
  IntVector visible_bias;
  IntVector hidden_bias;
  Mask mask;

  Index n_visible() const { return weights.rows(); }
  Index n_hidden() const { return weights.cols(); }
  void check() const;
  Rbm dequantized() const;
};

struct UnitState {
  BinaryVector v;
  BinaryVector h;

  UnitState() = default;
  UnitState(Index n_visible, Index n_hidden)
      : v(BinaryVector::Zero(n_visible)), h(BinaryVector::Zero(n_hidden)) {}
};

enum class Direction { visible_to_hidden, hidden_to_visible };

inline double logistic(double x) {
  // Branching keeps exp() from overflowing on either tail.
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Round half away from zero; std::round already has that tie rule.
inline int round_half_away(double x) { return static_cast<int>(std::round(x)); }

// ---------------------------------------------------------------------------
// Pre-activations. Real models return real drive, quantized models return the
// real drive implied by their integers (integer / scale), so either can feed a
// UnitSampler. The integer versions are what the spiking backends consume.

template <typename Scalar>
Eigen::VectorXd hidden_drive(const RbmModel<Scalar>& m, const BinaryVector& v) {
  return (m.weights.transpose() * v.cast<Scalar>() + m.hidden_bias).template cast<double>();
}
template <typename Scalar>
Eigen::VectorXd visible_drive(const RbmModel<Scalar>& m, const BinaryVector& h) {
  return (m.weights * h.cast<Scalar>() + m.visible_bias).template cast<double>();
}
inline IntVector hidden_potential(const QuantizedRbm& m, const BinaryVector& v) {
  return m.weights.transpose() * v.cast<int>() + m.hidden_bias;
}
inline IntVector visible_potential(const QuantizedRbm& m, const BinaryVector& h) {
  return m.weights * h.cast<int>() + m.visible_bias;
}
inline Eigen::VectorXd hidden_drive(const QuantizedRbm& m, const BinaryVector& v) {
  return hidden_potential(m, v).cast<double>() / double(m.scale);
}
inline Eigen::VectorXd visible_drive(const QuantizedRbm& m, const BinaryVector& h) {
  return visible_potential(m, h).cast<double>() / double(m.scale);
}

template <typename Scalar>
double energy(const RbmModel<Scalar>& m, const UnitState& s) {
  if (s.v.size() != m.n_visible() || s.h.size() != m.n_hidden())
    throw std::invalid_argument("energy: state does not match model");
  const auto v = s.v.cast<double>();
  const auto h = s.h.cast<double>();
  const Eigen::MatrixXd w = m.weights.template cast<double>();
  return -(v.transpose() * w * h)(0) - m.visible_bias.template cast<double>().dot(v) -
         m.hidden_bias.template cast<double>().dot(h);
}

// Logistic unit sampler: one uniform draw per call.
struct IdealSampler {
  bool operator()(double x, Rng& rng) const { return uniform01(rng) < logistic(x); }
};

// Resample one layer. A UnitSampler is any callable (double drive, Rng&) -> bool.
// `clamp` (visible-sized, nonzero = clamped) keeps those visible units at their
// incoming values; it is only meaningful for the hidden-to-visible direction.
template <typename Model, typename Sampler>
UnitState gibbs_step(const Model& m, const UnitState& state, Sampler&& sampler, Direction dir,
                     Rng& rng, const BinaryVector* clamp = nullptr) {
  if (state.v.size() != m.n_visible() || state.h.size() != m.n_hidden())
    throw std::invalid_argument("gibbs_step: state does not match model");
  UnitState out = state;
  if (dir == Direction::visible_to_hidden) {
    if (clamp) throw std::invalid_argument("gibbs_step: clamp only applies to hidden_to_visible");
    const Eigen::VectorXd x = hidden_drive(m, state.v);
    for (Index j = 0; j < x.size(); ++j) out.h(j) = sampler(x(j), rng) ? 1 : 0;
  } else {
    if (clamp && clamp->size() != m.n_visible())
      throw std::invalid_argument("gibbs_step: clamp size mismatch");
    const Eigen::VectorXd x = visible_drive(m, state.h);
    for (Index i = 0; i < x.size(); ++i) {
      const bool draw = sampler(x(i), rng);
      if (!(clamp && (*clamp)(i))) out.v(i) = draw ? 1 : 0;
    }
  }
  return out;
}

// Alternating visible->hidden->visible sweep.
template <typename Model, typename Sampler>
UnitState gibbs_sweep(const Model& m, const UnitState& state, Sampler&& sampler, Rng& rng,
                      const BinaryVector* clamp = nullptr) {
  UnitState s = gibbs_step(m, state, sampler, Direction::visible_to_hidden, rng);
  return gibbs_step(m, s, sampler, Direction::hidden_to_visible, rng, clamp);
}

// ---------------------------------------------------------------------------
// Exact inference on small models. A joint state is indexed with the visible
// bits in the low-order positions: index = v_bits | (h_bits << n_visible),
// where bit i of v_bits is v(i).

constexpr int kDefaultEnumerationCap = 24;

std::uint64_t state_index(const UnitState& s);
UnitState state_from_index(std::uint64_t index, Index n_visible, Index n_hidden);
std::uint64_t visible_index(const BinaryVector& v);
BinaryVector visible_from_index(std::uint64_t index, Index n_visible);

Eigen::VectorXd exact_distribution(const Rbm& m, int cap = kDefaultEnumerationCap);
// Marginal over visible configurations, indexed like visible_index().
Eigen::VectorXd exact_visible_distribution(const Rbm& m, int cap = kDefaultEnumerationCap);
double log_partition(const Rbm& m, int cap = kDefaultEnumerationCap);
// log of the unnormalized visible marginal: b_v.v + sum_j softplus(b_h + W^T v)_j.
double log_unnormalized_visible(const Rbm& m, const Eigen::VectorXd& v);

// sum_i P(i) log(P(i)/Q(i)); zero-probability terms of P contribute nothing.
double kl_divergence(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

QuantizedRbm quantize(const Rbm& m, int scale);

// Sliding p x p windows over an N x N image: N^2 rows, (N-p+1)^2 columns.
// Column j covers the window whose top-left corner is j in row-major order.
Mask patch_mask(int image_side, int patch_side);

// Random model helper for tests and experiments: weights ~ N(0, sd) under mask.
Rbm random_rbm(Index n_visible, Index n_hidden, double weight_sd, double bias_sd, Rng& rng);

}  // namespace spikerbm
