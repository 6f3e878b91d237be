#include "tree_builder.hpp"

#include <algorithm>
#include <numeric>

#include "chromaeeg/error.hpp"

namespace chromaeeg::models {

const TreeNode& Tree::leaf(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (node->feature >= 0) {
    node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold
                                               ? node->left
                                               : node->right)];
  }
  return *node;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace detail {

Presorted::Presorted(const Matrix& x) : rows(x.rows()), cols(x.cols()), columns(x.rows() * x.cols()), order(x.cols()) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) columns[c * rows + r] = x(r, c);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    auto& o = order[c];
    o.resize(rows);
    std::iota(o.begin(), o.end(), 0u);
    const double* col = columns.data() + c * rows;
    std::stable_sort(o.begin(), o.end(), [col](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
  }
}

namespace {

using Lists = std::vector<std::vector<std::uint32_t>>;

// Shared recursion for both tree kinds; `Stats` abstracts the split criterion.
template <typename Stats>
class Grower {
 public:
  Grower(const Presorted& data, std::span<const double> weights, const TreeConfig& config, Rng* rng, Stats stats)
      : data_(data), weights_(weights), config_(config), rng_(rng), stats_(std::move(stats)),
        goes_left_(data.rows, 0), features_(data.cols) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  Tree grow() {
    Lists lists(data_.cols);
    for (std::size_t f = 0; f < data_.cols; ++f) {
      auto& l = lists[f];
      l.reserve(data_.rows);
      for (std::uint32_t r : data_.order[f]) {
        if (weights_[r] > 0.0) l.push_back(r);
      }
    }
    if (lists.empty() || lists[0].empty()) throw Error(ErrorKind::InsufficientData, "tree has no samples");
    build(std::move(lists), 0);
    return std::move(tree_);
  }

 private:
  int build(Lists lists, int depth) {
    const auto& samples = lists[0];
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    auto parent = stats_.empty();
    for (std::uint32_t r : samples) stats_.add(parent, r, weights_[r]);
    tree_.nodes[static_cast<std::size_t>(index)].value = stats_.leaf_value(parent, samples);

    const bool depth_limited = config_.max_depth > 0 && depth >= config_.max_depth;
    if (depth_limited || stats_.weight(parent) < 2.0 * config_.min_leaf_weight || stats_.pure(parent)) {
      return index;
    }

    std::size_t n_try = data_.cols;
    if (config_.max_features > 0 && static_cast<std::size_t>(config_.max_features) < data_.cols) {
      n_try = static_cast<std::size_t>(config_.max_features);
      // Partial Fisher-Yates over the persistent feature permutation.
      for (std::size_t i = 0; i < n_try; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng_->below(data_.cols - i));
        std::swap(features_[i], features_[j]);
      }
    }

    const double parent_score = stats_.score(parent);
    double best_score = parent_score;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t fi = 0; fi < n_try; ++fi) {
      const std::size_t f = n_try == data_.cols ? fi : features_[fi];
      const auto& list = lists[f];
      auto left = stats_.empty();
      for (std::size_t i = 0; i + 1 < list.size(); ++i) {
        const std::uint32_t r = list[i];
        stats_.add(left, r, weights_[r]);
        const double v = data_.value(r, f);
        const double v_next = data_.value(list[i + 1], f);
        if (!(v < v_next)) continue;
        const double wl = stats_.weight(left);
        const double wr = stats_.weight(parent) - wl;
        if (wl < config_.min_leaf_weight || wr < config_.min_leaf_weight) continue;
        const double s = stats_.split_score(left, parent);
        if (s > best_score * (1.0 + 1e-12) + 1e-12) {
          best_score = s;
          best_feature = static_cast<int>(f);
          double mid = 0.5 * (v + v_next);
          if (!(mid < v_next)) mid = v;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return index;

    const auto bf = static_cast<std::size_t>(best_feature);
    for (std::uint32_t r : lists[bf]) goes_left_[r] = data_.value(r, bf) <= best_threshold;
    Lists left_lists(data_.cols), right_lists(data_.cols);
    for (std::size_t f = 0; f < data_.cols; ++f) {
      auto& src = lists[f];
      auto& l = left_lists[f];
      auto& rr = right_lists[f];
      for (std::uint32_t r : src) (goes_left_[r] ? l : rr).push_back(r);
      std::vector<std::uint32_t>().swap(src);
    }
    const int left_index = build(std::move(left_lists), depth + 1);
    const int right_index = build(std::move(right_lists), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left_index;
    node.right = right_index;
    return index;
  }

  const Presorted& data_;
  std::span<const double> weights_;
  TreeConfig config_;
  Rng* rng_;
  Stats stats_;
  Tree tree_;
  std::vector<char> goes_left_;
  std::vector<std::size_t> features_;
};

// Gini: maximising sum_c L_c^2 / W_L + sum_c R_c^2 / W_R minimises the
// weighted impurity of the children.
struct GiniStats {
  std::span<const int> labels;
  int classes;

  struct Acc {
    std::vector<double> w;
    double total = 0.0;
  };
  Acc empty() const { return {std::vector<double>(static_cast<std::size_t>(classes), 0.0), 0.0}; }
  void add(Acc& a, std::uint32_t r, double weight) const {
    a.w[static_cast<std::size_t>(labels[r])] += weight;
    a.total += weight;
  }
  double weight(const Acc& a) const { return a.total; }
  bool pure(const Acc& a) const {
    return std::count_if(a.w.begin(), a.w.end(), [](double v) { return v > 0.0; }) <= 1;
  }
  double score(const Acc& a) const {
    double s = 0.0;
    for (double v : a.w) s += v * v;
    return s / a.total;
  }
  double split_score(const Acc& left, const Acc& parent) const {
    double sl = 0.0, sr = 0.0;
    for (std::size_t c = 0; c < left.w.size(); ++c) {
      const double r = parent.w[c] - left.w[c];
      sl += left.w[c] * left.w[c];
      sr += r * r;
    }
    return sl / left.total + sr / (parent.total - left.total);
  }
  std::vector<double> leaf_value(const Acc& a, std::span<const std::uint32_t>) const {
    std::vector<double> dist = a.w;
    for (double& v : dist) v /= a.total;
    return dist;
  }
};

struct SquaredErrorStats {
  std::span<const double> targets;
  const LeafValue* leaf;

  struct Acc {
    double w = 0.0;
    double sum = 0.0;
  };
  Acc empty() const { return {}; }
  void add(Acc& a, std::uint32_t r, double weight) const {
    a.w += weight;
    a.sum += weight * targets[r];
  }
  double weight(const Acc& a) const { return a.w; }
  bool pure(const Acc&) const { return false; }
  double score(const Acc& a) const { return a.sum * a.sum / a.w; }
  double split_score(const Acc& left, const Acc& parent) const {
    const double rs = parent.sum - left.sum;
    return left.sum * left.sum / left.w + rs * rs / (parent.w - left.w);
  }
  std::vector<double> leaf_value(const Acc&, std::span<const std::uint32_t> samples) const {
    return {(*leaf)(samples)};
  }
};

}  // namespace

Tree grow_classification_tree(const Presorted& data, std::span<const int> labels, int n_classes,
                              std::span<const double> weights, const TreeConfig& config, Rng* rng) {
  Grower<GiniStats> g(data, weights, config, rng, GiniStats{labels, n_classes});
  return g.grow();
}

Tree grow_regression_tree(const Presorted& data, std::span<const double> targets,
                          std::span<const double> weights, const TreeConfig& config, Rng* rng,
                          const LeafValue& leaf_value) {
  Grower<SquaredErrorStats> g(data, weights, config, rng, SquaredErrorStats{targets, &leaf_value});
  return g.grow();
}

}  // namespace detail
}  // namespace chromaeeg::models
