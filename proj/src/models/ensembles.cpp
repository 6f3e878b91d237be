// Random forest and gradient-boosted trees.
#include "families.hpp"

#include <algorithm>
#include <cmath>

#include "chromaeeg/error.hpp"
#include "chromaeeg/rng.hpp"
#include "tree_builder.hpp"

namespace chromaeeg::models::detail {

ForestModel fit_forest(const ForestParams& p, const Matrix& x, std::span<const int> y, int n_classes,
                       std::uint64_t seed) {
  if (p.n_estimators < 1) throw Error(ErrorKind::InvalidArgument, "n_estimators must be at least 1");
  const Presorted data(x);
  const std::size_t n = x.rows();
  TreeConfig cfg;
  cfg.max_depth = p.max_depth;
  cfg.min_leaf_weight = std::max(1, p.min_samples_leaf);
  cfg.max_features = p.max_features > 0 ? p.max_features
                                        : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));

  ForestModel model;
  model.trees.reserve(static_cast<std::size_t>(p.n_estimators));
  std::vector<double> weights(n);
  for (int t = 0; t < p.n_estimators; ++t) {
    // Each tree owns its stream, so the first k trees of a larger forest are
    // exactly the forest grown with k trees.
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    std::fill(weights.begin(), weights.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) weights[rng.below(n)] += 1.0;
    model.trees.push_back(grow_classification_tree(data, y, n_classes, weights, cfg, &rng));
  }
  return model;
}

Matrix forest_scores(const ForestModel& m, const Matrix& x, int n_classes) {
  Matrix scores(x.rows(), static_cast<std::size_t>(n_classes), 0.0);
  if (m.trees.empty()) return scores;
  const double vote = 1.0 / static_cast<double>(m.trees.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    auto out = scores.row(r);
    for (const auto& tree : m.trees) {
      const auto& dist = tree.leaf(row).value;
      // Majority vote: each tree votes for its leaf's most frequent class.
      const auto winner = std::max_element(dist.begin(), dist.end()) - dist.begin();
      out[static_cast<std::size_t>(winner)] += vote;
    }
  }
  return scores;
}

BoostModel fit_boosting(const BoostParams& p, const Matrix& x, std::span<const int> y, int n_classes) {
  if (p.n_estimators < 1) throw Error(ErrorKind::InvalidArgument, "n_estimators must be at least 1");
  const std::size_t n = x.rows();
  const auto k_classes = static_cast<std::size_t>(n_classes);
  const Presorted data(x);
  TreeConfig cfg;
  cfg.max_depth = p.max_depth;
  cfg.min_leaf_weight = std::max(1, p.min_samples_leaf);

  BoostModel model;
  model.learning_rate = p.learning_rate;
  model.init.assign(k_classes, 0.0);
  std::vector<double> counts(k_classes, 0.0);
  for (int label : y) counts[static_cast<std::size_t>(label)] += 1.0;
  for (std::size_t k = 0; k < k_classes; ++k) model.init[k] = std::log(counts[k] / static_cast<double>(n));

  Matrix raw(n, k_classes);
  for (std::size_t i = 0; i < n; ++i) std::copy(model.init.begin(), model.init.end(), raw.row(i).begin());
  const std::vector<double> unit_weights(n, 1.0);
  std::vector<double> residual(n);
  Matrix prob(n, k_classes);
  const double newton_scale = static_cast<double>(n_classes - 1) / static_cast<double>(n_classes);

  for (int round = 0; round < p.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      auto pr = prob.row(i);
      const auto rr = raw.row(i);
      std::copy(rr.begin(), rr.end(), pr.begin());
      softmax_inplace(pr);
    }
    std::vector<Tree> trees;
    trees.reserve(k_classes);
    for (std::size_t k = 0; k < k_classes; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        residual[i] = (static_cast<std::size_t>(y[i]) == k ? 1.0 : 0.0) - prob(i, k);
      }
      // One Newton step per leaf for the multinomial deviance.
      const LeafValue leaf = [&](std::span<const std::uint32_t> samples) {
        double num = 0.0, den = 0.0;
        for (std::uint32_t r : samples) {
          const double g = residual[r];
          num += g;
          den += std::abs(g) * (1.0 - std::abs(g));
        }
        if (den < 1e-150) return 0.0;
        return newton_scale * num / den;
      };
      trees.push_back(grow_regression_tree(data, residual, unit_weights, cfg, nullptr, leaf));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = x.row(i);
      for (std::size_t k = 0; k < k_classes; ++k) raw(i, k) += p.learning_rate * trees[k].leaf(row).value[0];
    }
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

Matrix boosting_scores(const BoostModel& m, const Matrix& x) {
  const std::size_t k_classes = m.init.size();
  Matrix scores(x.rows(), k_classes);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    auto out = scores.row(r);
    std::copy(m.init.begin(), m.init.end(), out.begin());
    for (const auto& round : m.rounds) {
      for (std::size_t k = 0; k < k_classes; ++k) out[k] += m.learning_rate * round[k].leaf(row).value[0];
    }
    softmax_inplace(out);
  }
  return scores;
}

}  // namespace chromaeeg::models::detail
