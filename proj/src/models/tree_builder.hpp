#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "chromaeeg/matrix.hpp"
#include "chromaeeg/models.hpp"
#include "chromaeeg/rng.hpp"

namespace chromaeeg::models::detail {

/// Column-major copy of the training matrix plus, per feature, every row index
/// sorted by that feature (ties by row index). Built once per fit.
struct Presorted {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> columns;                 // cols x rows
  std::vector<std::vector<std::uint32_t>> order;  // per feature

  explicit Presorted(const Matrix& x);
  double value(std::size_t row, std::size_t feature) const { return columns[feature * rows + row]; }
};

struct TreeConfig {
  int max_depth = 0;         // 0 = unlimited
  double min_leaf_weight = 1.0;
  int max_features = 0;      // 0 = all
};

/// Gini CART on weighted samples (weight 0 = not in the bootstrap). Leaves
/// hold the normalised class distribution.
Tree grow_classification_tree(const Presorted& data, std::span<const int> labels, int n_classes,
                              std::span<const double> weights, const TreeConfig& config, Rng* rng);

using LeafValue = std::function<double(std::span<const std::uint32_t> samples)>;

/// Least-squares regression tree on `targets`; leaf values come from `leaf_value`.
Tree grow_regression_tree(const Presorted& data, std::span<const double> targets,
                          std::span<const double> weights, const TreeConfig& config, Rng* rng,
                          const LeafValue& leaf_value);

}  // namespace chromaeeg::models::detail
