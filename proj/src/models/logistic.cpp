// Multinomial logistic regression, full-batch (proximal) gradient descent with
// backtracking.
#include <cmath>

#include "chromaeeg/error.hpp"
#include "families.hpp"

namespace chromaeeg::models {

namespace {

// Probabilities for every row, written into `prob` (n x K).
void forward(const LogisticModel& m, const Matrix& x, Matrix& prob) {
  const std::size_t k_classes = m.weights.rows();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    auto out = prob.row(r);
    for (std::size_t k = 0; k < k_classes; ++k) {
      const auto w = m.weights.row(k);
      double z = m.bias[k];
      for (std::size_t c = 0; c < row.size(); ++c) z += w[c] * row[c];
      out[k] = z;
    }
    detail::softmax_inplace(out);
  }
}

double l1_norm(const Matrix& w) {
  double s = 0.0;
  for (double v : w.data()) s += std::abs(v);
  return s;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

double logistic_objective(const LogisticModel& model, const Matrix& x, std::span<const int> y,
                          const LogisticParams& params, LogisticModel* grad) {
  const std::size_t n = x.rows();
  const std::size_t k_classes = model.weights.rows();
  const std::size_t d = model.weights.cols();
  Matrix prob(n, k_classes);
  forward(model, x, prob);

  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    loss -= std::log(std::max(prob(r, static_cast<std::size_t>(y[r])), 1e-300));
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  loss *= inv_n;
  const double lambda = 1.0 / (params.C * static_cast<double>(n));
  if (params.penalty == Penalty::L2) {
    double sq = 0.0;
    for (double v : model.weights.data()) sq += v * v;
    loss += 0.5 * lambda * sq;
  }

  if (grad) {
    grad->weights = Matrix(k_classes, d, 0.0);
    grad->bias.assign(k_classes, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = x.row(r);
      for (std::size_t k = 0; k < k_classes; ++k) {
        const double delta = (prob(r, k) - (static_cast<std::size_t>(y[r]) == k ? 1.0 : 0.0)) * inv_n;
        grad->bias[k] += delta;
        auto g = grad->weights.row(k);
        for (std::size_t c = 0; c < d; ++c) g[c] += delta * row[c];
      }
    }
    if (params.penalty == Penalty::L2) {
      auto& g = grad->weights.data();
      const auto& w = model.weights.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda * w[i];
    }
  }
  return loss;
}

namespace detail {

LogisticModel fit_logistic(const LogisticParams& p, const Matrix& x, std::span<const int> y, int n_classes) {
  if (!(p.C > 0.0)) throw Error(ErrorKind::InvalidArgument, "C must be positive");
  const auto k_classes = static_cast<std::size_t>(n_classes);
  const std::size_t d = x.cols();
  const double lambda = 1.0 / (p.C * static_cast<double>(x.rows()));
  const bool l1 = p.penalty == Penalty::L1;

  LogisticModel model{Matrix(k_classes, d, 0.0), std::vector<double>(k_classes, 0.0)};
  LogisticModel grad;
  double smooth = logistic_objective(model, x, y, p, &grad);
  double total = smooth + (l1 ? lambda * l1_norm(model.weights) : 0.0);
  double step = 1.0;

  for (int iter = 0; iter < p.max_iter; ++iter) {
    LogisticModel candidate;
    double cand_smooth = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      candidate = model;
      auto& cw = candidate.weights.data();
      const auto& gw = grad.weights.data();
      for (std::size_t i = 0; i < cw.size(); ++i) {
        cw[i] -= step * gw[i];
        if (l1) cw[i] = soft_threshold(cw[i], step * lambda);
      }
      for (std::size_t k = 0; k < k_classes; ++k) candidate.bias[k] -= step * grad.bias[k];

      // Sufficient decrease for the proximal step:
      // f(w+) <= f(w) + <g, w+ - w> + |w+ - w|^2 / (2 step)
      double inner = 0.0, dist_sq = 0.0;
      for (std::size_t i = 0; i < cw.size(); ++i) {
        const double diff = cw[i] - model.weights.data()[i];
        inner += gw[i] * diff;
        dist_sq += diff * diff;
      }
      for (std::size_t k = 0; k < k_classes; ++k) {
        const double diff = candidate.bias[k] - model.bias[k];
        inner += grad.bias[k] * diff;
        dist_sq += diff * diff;
      }
      cand_smooth = logistic_objective(candidate, x, y, p, nullptr);
      if (!std::isfinite(cand_smooth)) {
        step *= 0.5;
        continue;
      }
      if (cand_smooth <= smooth + inner + dist_sq / (2.0 * step) + 1e-15) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const double cand_total = cand_smooth + (l1 ? lambda * l1_norm(candidate.weights) : 0.0);
    const double improvement = total - cand_total;
    model = std::move(candidate);
    smooth = logistic_objective(model, x, y, p, &grad);
    total = cand_total;
    if (!std::isfinite(total)) throw Error(ErrorKind::SingularData, "logistic regression diverged");
    if (std::abs(improvement) <= p.tol * std::max(1.0, std::abs(total))) break;
    step *= 2.0;
  }
  return model;
}

Matrix logistic_scores(const LogisticModel& m, const Matrix& x) {
  if (x.cols() != m.weights.cols()) throw Error(ErrorKind::DimensionMismatch, "feature count differs from model");
  Matrix prob(x.rows(), m.weights.rows());
  forward(m, x, prob);
  return prob;
}

}  // namespace detail
}  // namespace chromaeeg::models
