#include "spikerbm/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace spikerbm {

namespace {

typedef Eigen::MatrixXd Mat;

// Elementwise logistic, and Bernoulli draws against those probabilities.
Mat sigmoid(const Mat& x) { return x.unaryExpr([](double v) { return logistic(v); }); }

Mat sample(const Mat& p, Rng& rng) {
  Mat out(p.rows(), p.cols());
  for (Index j = 0; j < p.cols(); ++j)
    for (Index i = 0; i < p.rows(); ++i) out(i, j) = uniform01(rng) < p(i, j) ? 1.0 : 0.0;
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || epochs < 1 || batch_size < 1 || persistent_chains < 1 || init_weight_sd < 0)
    throw std::invalid_argument("train config: all hyperparameters must be positive");
}

Rbm train_pcd(const Dataset& data, const Mask& mask, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("train_pcd: empty dataset");
  if (mask.rows() != data.dimension())
    throw std::invalid_argument("train_pcd: mask rows " + std::to_string(mask.rows()) + " != image size " +
                                std::to_string(data.dimension()));
  const Index nv = mask.rows(), nh = mask.cols();
  Rng rng = make_rng(cfg.seed);

  Rbm m(nv, nh);
  m.mask = mask;
  for (Index j = 0; j < nh; ++j)
    for (Index i = 0; i < nv; ++i) m.weights(i, j) = mask(i, j) ? cfg.init_weight_sd * normal01(rng) : 0.0;
  const Eigen::VectorXd means = data.pixel_means();
  for (Index i = 0; i < nv; ++i) {
    const double p = std::clamp(means(i), 1e-3, 1 - 1e-3);
    m.visible_bias(i) = std::log(p / (1 - p));
  }
  const Mat mask_d = mask.cast<double>();

  // Persistent chains start from random training images.
  Mat chains(cfg.persistent_chains, nv);
  for (Index c = 0; c < chains.rows(); ++c)
    chains.row(c) = data.pixels.row(Index(uniform_below(rng, std::uint64_t(data.size())))).cast<double>();

  std::vector<Index> order(std::size_t(data.size()));
  std::iota(order.begin(), order.end(), Index(0));
  Mat batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const Index b = Index(std::min<std::size_t>(std::size_t(cfg.batch_size), order.size() - start));
      batch.resize(b, nv);
      for (Index k = 0; k < b; ++k) batch.row(k) = data.pixels.row(order[start + std::size_t(k)]).cast<double>();

      const Mat pos_h = sigmoid((batch * m.weights).rowwise() + m.hidden_bias.transpose());
      const Mat chain_h = sample(sigmoid((chains * m.weights).rowwise() + m.hidden_bias.transpose()), rng);
      chains = sample(sigmoid((chain_h * m.weights.transpose()).rowwise() + m.visible_bias.transpose()), rng);
      const Mat neg_h = sigmoid((chains * m.weights).rowwise() + m.hidden_bias.transpose());

      const double lr = cfg.learning_rate;
      const Mat grad_w = batch.transpose() * pos_h / double(b) - chains.transpose() * neg_h / double(chains.rows());
      const Eigen::VectorXd grad_bv = batch.colwise().mean().transpose() - chains.colwise().mean().transpose();
      const Eigen::VectorXd grad_bh = pos_h.colwise().mean().transpose() - neg_h.colwise().mean().transpose();
      if (!grad_w.allFinite() || !grad_bv.allFinite() || !grad_bh.allFinite())
        throw std::runtime_error("train_pcd: non-finite update (learning rate too large?)");
      m.weights += lr * grad_w.cwiseProduct(mask_d);
      m.visible_bias += lr * grad_bv;
      m.hidden_bias += lr * grad_bh;
      if (!m.weights.allFinite() || !m.visible_bias.allFinite() || !m.hidden_bias.allFinite())
        throw std::runtime_error("train_pcd: non-finite parameters");
    }
    if (on_epoch) on_epoch(epoch, m);
  }
  return m;
}

std::vector<double> AisConfig::betas() const {
  if (schedule.empty()) return ais_schedule(n_intermediate);
  if (schedule.size() < 2 || schedule.front() != 0.0 || schedule.back() != 1.0)
    throw std::invalid_argument("ais schedule must run from 0 to 1");
  for (std::size_t k = 1; k < schedule.size(); ++k)
    if (!(schedule[k] > schedule[k - 1])) throw std::invalid_argument("ais schedule must be strictly increasing");
  return schedule;
}

std::vector<double> ais_schedule(int n_intermediate) {
  if (n_intermediate < 1) throw std::invalid_argument("ais: need at least one annealing step");
  const int k = n_intermediate;
  if (k < 10) {
    std::vector<double> b(std::size_t(k) + 1);
    for (int i = 0; i <= k; ++i) b[std::size_t(i)] = double(i) / k;
    return b;
  }
  const int k1 = k / 10, k2 = (4 * k) / 10, k3 = k - k1 - k2;
  std::vector<double> b;
  b.reserve(std::size_t(k) + 1);
  for (int i = 0; i < k1; ++i) b.push_back(0.5 * i / k1);
  for (int i = 0; i < k2; ++i) b.push_back(0.5 + 0.4 * i / k2);
  for (int i = 0; i < k3; ++i) b.push_back(0.9 + 0.1 * i / k3);
  b.push_back(1.0);
  return b;
}

Eigen::VectorXd base_rate_bias(const Dataset& data, double pseudo_count) {
  const double n = double(data.size());
  Eigen::VectorXd bias(data.dimension());
  const Eigen::VectorXd means = data.pixel_means();
  for (Index i = 0; i < bias.size(); ++i) {
    const double p = (means(i) * n + pseudo_count) / (n + 2 * pseudo_count);
    bias(i) = std::log(p / (1 - p));
  }
  return bias;
}

AisResult ais_log_partition(const Rbm& m, const Eigen::VectorXd& base_bias, const AisConfig& cfg) {
  m.check();
  if (base_bias.size() != m.n_visible()) throw std::invalid_argument("ais: base bias size mismatch");
  if (cfg.n_runs < 2) throw std::invalid_argument("ais: need at least two runs");
  const std::vector<double> betas = cfg.betas();
  const Index runs = cfg.n_runs, nv = m.n_visible(), nh = m.n_hidden();
  Rng rng = make_rng(cfg.seed);

  AisResult res;
  res.log_z_base = double(nh) * std::log(2.0);
  for (Index i = 0; i < nv; ++i) res.log_z_base += softplus(base_bias(i));

  // Unnormalized log marginal of v at inverse temperature beta, given the
  // hidden drive x = v W + b_h already computed for these rows.
  auto log_star = [&](const Mat& v, const Mat& x, double beta) {
    Eigen::VectorXd out = (1 - beta) * (v * base_bias) + beta * (v * m.visible_bias);
    for (Index r = 0; r < v.rows(); ++r) {
      double acc = 0.0;
      for (Index j = 0; j < nh; ++j) acc += softplus(beta * x(r, j));
      out(r) += acc;
    }
    return out;
  };

  Mat v = sample(sigmoid(base_bias.transpose().replicate(runs, 1)), rng);
  Eigen::VectorXd log_w = Eigen::VectorXd::Zero(runs);
  for (std::size_t k = 1; k < betas.size(); ++k) {
    const Mat x = (v * m.weights).rowwise() + m.hidden_bias.transpose();
    log_w += log_star(v, x, betas[k]) - log_star(v, x, betas[k - 1]);
    if (k + 1 == betas.size()) break;
    const double b = betas[k];
    const Mat h = sample(sigmoid(b * x), rng);
    const Mat vx = ((b * (h * m.weights.transpose())).rowwise() +
                    (b * m.visible_bias + (1 - b) * base_bias).transpose());
    v = sample(sigmoid(vx), rng);
  }
  if (!log_w.allFinite()) throw std::overflow_error("ais: non-finite importance weight");

  // log mean exp with a delta-method standard error in log space.
  const double mx = log_w.maxCoeff();
  const Eigen::VectorXd w = (log_w.array() - mx).exp();
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / double(runs - 1);
  res.log_z = res.log_z_base + mx + std::log(mean);
  res.log_z_stderr = std::sqrt(var / double(runs)) / mean;
  res.stderr = res.log_z_stderr;
  return res;
}

AisResult ais_log_prob(const Rbm& m, const Dataset& data, const AisConfig& cfg) {
  if (data.dimension() != m.n_visible()) throw std::invalid_argument("ais_log_prob: data/model size mismatch");
  if (data.size() == 0) throw std::invalid_argument("ais_log_prob: empty dataset");
  AisResult res = ais_log_partition(m, base_rate_bias(data), cfg);
  const Mat v = data.pixels.cast<double>();
  const Mat x = (v * m.weights).rowwise() + m.hidden_bias.transpose();
  double acc = 0.0;
  for (Index r = 0; r < v.rows(); ++r) {
    double lp = v.row(r).dot(m.visible_bias);
    for (Index j = 0; j < x.cols(); ++j) lp += softplus(x(r, j));
    acc += lp;
  }
  res.mean_log_prob = acc / double(v.rows()) - res.log_z;
  res.stderr = res.log_z_stderr;
  return res;
}

}  // namespace spikerbm
