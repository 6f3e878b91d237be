// One-vs-rest RBF support vector machines. The binary solver is SMO with
// second-order working set selection, in the style of LIBSVM.
#include <algorithm>
#include <cmath>
#include <limits>

#include "chromaeeg/error.hpp"
#include "families.hpp"

namespace chromaeeg::models {

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma) {
  if (a.cols() != b.cols()) throw Error(ErrorKind::DimensionMismatch, "kernel operands differ in width");
  std::vector<double> na(a.rows()), nb(b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (double v : a.row(i)) na[i] += v * v;
  }
  for (std::size_t j = 0; j < b.rows(); ++j) {
    for (double v : b.row(j)) nb[j] += v * v;
  }
  Matrix k(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i).data();
    double* out = k.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j).data();
      double dot = 0.0;
      for (std::size_t c = 0; c < a.cols(); ++c) dot += ai[c] * bj[c];
      out[j] = std::exp(-gamma * std::max(0.0, na[i] + nb[j] - 2.0 * dot));
    }
  }
  return k;
}

SmoResult smo_solve(const Matrix& kernel, std::span<const double> labels, double C, double tol,
                    long long max_iter) {
  const std::size_t n = labels.size();
  if (kernel.rows() != n || kernel.cols() != n) throw Error(ErrorKind::DimensionMismatch, "kernel must be n x n");
  if (!(C > 0.0)) throw Error(ErrorKind::InvalidArgument, "C must be positive");
  constexpr double tau = 1e-12;
  const double inf = std::numeric_limits<double>::infinity();

  SmoResult res;
  res.alpha.assign(n, 0.0);
  auto& alpha = res.alpha;
  std::vector<double> grad(n, -1.0);  // gradient of the dual objective, Q alpha - e
  auto q = [&](std::size_t i, std::size_t j) { return labels[i] * labels[j] * kernel(i, j); };
  auto in_up = [&](std::size_t t) { return labels[t] > 0 ? alpha[t] < C : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return labels[t] > 0 ? alpha[t] > 0.0 : alpha[t] < C; };

  while (true) {
    double gmax = -inf, gmin = inf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -labels[t] * grad[t] > gmax) {
        gmax = -labels[t] * grad[t];
        i = t;
      }
    }
    std::size_t j = n;
    double best_obj = inf;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -labels[t] * grad[t];
      gmin = std::min(gmin, v);
      if (i == n || !(v < gmax)) continue;
      const double b = gmax - v;
      double a = kernel(i, i) + kernel(t, t) - 2.0 * kernel(i, t);
      if (a <= 0.0) a = tau;
      const double obj = -(b * b) / a;
      if (obj < best_obj) {
        best_obj = obj;
        j = t;
      }
    }
    res.kkt_gap = (i == n || gmin == inf) ? 0.0 : gmax - gmin;
    if (i == n || j == n || res.kkt_gap < tol || res.iterations >= max_iter) break;
    ++res.iterations;

    const double old_i = alpha[i], old_j = alpha[j];
    if (labels[i] != labels[j]) {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
  }

  // rho from the free vectors; midpoint of the feasible interval otherwise.
  double sum_free = 0.0, ub = inf, lb = -inf;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = labels[t] * grad[t];
    if (alpha[t] >= C) {
      if (labels[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (labels[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double rho = 0.0;
  if (n_free > 0) {
    rho = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    rho = 0.5 * (ub + lb);
  } else if (std::isfinite(ub)) {
    rho = ub;
  } else if (std::isfinite(lb)) {
    rho = lb;
  }
  res.bias = -rho;
  return res;
}

namespace detail {

SvmModel fit_svm(const SvmParams& p, const Matrix& x, std::span<const int> y, int n_classes) {
  if (!(p.gamma > 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma must be positive");
  const std::size_t n = x.rows();
  const long long max_iter = p.max_iter > 0 ? p.max_iter : std::max<long long>(1'000'000, 100LL * static_cast<long long>(n));
  const Matrix kernel = rbf_kernel(x, x, p.gamma);
  SvmModel model;
  model.gamma = p.gamma;
  std::vector<double> labels(n);
  for (int k = 0; k < n_classes; ++k) {
    for (std::size_t i = 0; i < n; ++i) labels[i] = y[i] == k ? 1.0 : -1.0;
    const SmoResult res = smo_solve(kernel, labels, p.C, p.tol, max_iter);
    SvmMachine machine;
    machine.bias = res.bias;
    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i) {
      if (res.alpha[i] > 0.0) {
        sv.push_back(i);
        machine.coef.push_back(res.alpha[i] * labels[i]);
      }
    }
    machine.support = x.select_rows(sv);
    model.machines.push_back(std::move(machine));
  }
  return model;
}

}  // namespace detail

Matrix svm_decision_values(const SvmModel& m, const Matrix& x) {
  Matrix out(x.rows(), m.machines.size());
  for (std::size_t k = 0; k < m.machines.size(); ++k) {
    const auto& machine = m.machines[k];
    if (machine.support.rows() > 0 && machine.support.cols() != x.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "feature count differs from model");
    }
    if (machine.support.rows() == 0) {
      for (std::size_t r = 0; r < x.rows(); ++r) out(r, k) = machine.bias;
      continue;
    }
    const Matrix kern = rbf_kernel(x, machine.support, m.gamma);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto kr = kern.row(r);
      double s = machine.bias;
      for (std::size_t i = 0; i < kr.size(); ++i) s += machine.coef[i] * kr[i];
      out(r, k) = s;
    }
  }
  return out;
}

}  // namespace chromaeeg::models
