// Feed-forward network: sigmoid hidden layers, softmax output, trained with Adam
// on mini-batches.
#include <algorithm>
#include <cmath>
#include <numeric>

#include "chromaeeg/error.hpp"
#include "chromaeeg/rng.hpp"
#include "../dense.hpp"
#include "families.hpp"

namespace chromaeeg::models {

namespace {

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Activations per layer; acts[0] is the input.
std::vector<Matrix> forward_all(const MlpModel& m, const Matrix& x) {
  std::vector<Matrix> acts;
  acts.reserve(m.weights.size() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    Matrix z;
    dense::affine(acts.back(), m.weights[l], m.biases[l], z);
    if (l + 1 < m.weights.size()) {
      for (double& v : z.data()) v = sigmoid(v);
    } else {
      detail::softmax_rows(z);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

void check_width(const MlpModel& m, const Matrix& x) {
  if (m.weights.empty() || x.cols() != m.weights.front().cols()) {
    throw Error(ErrorKind::DimensionMismatch, "feature count differs from model");
  }
}

}  // namespace

MlpModel mlp_init(std::span<const int> layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw Error(ErrorKind::InvalidArgument, "network needs at least two layers");
  Rng rng(seed);
  MlpModel m;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const auto fan_in = static_cast<std::size_t>(layer_sizes[l]);
    const auto fan_out = static_cast<std::size_t>(layer_sizes[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

double mlp_objective(const MlpModel& model, const Matrix& x, std::span<const int> y, double l2, MlpModel* grad) {
  check_width(model, x);
  const std::size_t m = x.rows();
  const double inv_m = 1.0 / static_cast<double>(m);
  const auto acts = forward_all(model, x);
  const Matrix& prob = acts.back();

  double loss = 0.0;
  for (std::size_t r = 0; r < m; ++r) loss -= std::log(std::max(prob(r, static_cast<std::size_t>(y[r])), 1e-300));
  loss *= inv_m;
  double sq = 0.0;
  for (const auto& w : model.weights) {
    for (double v : w.data()) sq += v * v;
  }
  loss += 0.5 * l2 * inv_m * sq;
  if (!grad) return loss;

  const std::size_t layers = model.weights.size();
  grad->weights.resize(layers);
  grad->biases.resize(layers);
  // delta holds dLoss/dz for the current layer, one row per sample.
  Matrix delta = prob;
  for (std::size_t r = 0; r < m; ++r) delta(r, static_cast<std::size_t>(y[r])) -= 1.0;
  for (double& v : delta.data()) v *= inv_m;

  for (std::size_t li = layers; li-- > 0;) {
    const Matrix& a_in = acts[li];
    const Matrix& w = model.weights[li];
    Matrix gw;
    std::vector<double> gb;
    dense::layer_grad(delta, a_in, gw, gb);
    const auto& wd = w.data();
    auto& gd = gw.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] += l2 * inv_m * wd[i];

    if (li > 0) {
      Matrix prev = dense::back(delta, w);
      for (std::size_t i = 0; i < prev.data().size(); ++i) {
        const double a = a_in.data()[i];
        prev.data()[i] *= a * (1.0 - a);
      }
      delta = std::move(prev);
    }
    grad->weights[li] = std::move(gw);
    grad->biases[li] = std::move(gb);
  }
  return loss;
}

namespace detail {

MlpModel fit_mlp(const MlpParams& p, const Matrix& x, std::span<const int> y, int n_classes, std::uint64_t seed) {
  if (p.epochs < 1 || p.batch_size < 1 || !(p.learning_rate > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid MLP training settings");
  }
  std::vector<int> sizes{static_cast<int>(x.cols())};
  sizes.insert(sizes.end(), p.hidden.begin(), p.hidden.end());
  sizes.push_back(n_classes);
  MlpModel model = mlp_init(sizes, derive_seed(seed, {0}));
  Rng rng(derive_seed(seed, {1}));

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  MlpModel m1 = model, m2 = model;
  for (auto& w : m1.weights) std::fill(w.data().begin(), w.data().end(), 0.0);
  for (auto& b : m1.biases) std::fill(b.begin(), b.end(), 0.0);
  m2 = m1;

  const std::size_t n = x.rows();
  const auto batch = static_cast<std::size_t>(p.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  long long t = 0;
  MlpModel grad;
  std::vector<int> yb;
  auto adam = [&](std::vector<double>& param, const std::vector<double>& g, std::vector<double>& mom,
                  std::vector<double>& vel, double c1, double c2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      mom[i] = beta1 * mom[i] + (1.0 - beta1) * g[i];
      vel[i] = beta2 * vel[i] + (1.0 - beta2) * g[i] * g[i];
      param[i] -= p.learning_rate * (mom[i] / c1) / (std::sqrt(vel[i] / c2) + eps);
    }
  };

  for (int epoch = 0; epoch < p.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix xb = x.select_rows(rows);
      yb.clear();
      for (std::size_t r : rows) yb.push_back(y[r]);
      const double loss = mlp_objective(model, xb, yb, p.l2, &grad);
      if (!std::isfinite(loss)) throw Error(ErrorKind::SingularData, "MLP training diverged");
      ++t;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        adam(model.weights[l].data(), grad.weights[l].data(), m1.weights[l].data(), m2.weights[l].data(), c1, c2);
        adam(model.biases[l], grad.biases[l], m1.biases[l], m2.biases[l], c1, c2);
      }
    }
  }
  return model;
}

Matrix mlp_scores(const MlpModel& m, const Matrix& x) {
  check_width(m, x);
  return forward_all(m, x).back();
}

}  // namespace detail
}  // namespace chromaeeg::models
