#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "chromaeeg/matrix.hpp"

namespace chromaeeg::eval {

/// C[i][k] = samples of true class i predicted as k.
struct ConfusionMatrix {
  int classes = 0;
  std::vector<long long> counts;  // row-major classes x classes

  static ConfusionMatrix from_labels(std::span<const int> y_true, std::span<const int> y_pred, int classes);
  long long at(int truth, int predicted) const { return counts[truth * classes + predicted]; }
  long long total() const;
  long long correct() const;
  long long true_count(int k) const;       // t_k, row sum
  long long predicted_count(int k) const;  // p_k, column sum
};

double accuracy(std::span<const int> y_true, std::span<const int> y_pred);

/// Multiclass Matthews correlation from the confusion matrix; 0 when either
/// denominator factor vanishes.
double mcc(const ConfusionMatrix& cm);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

/// Points for every distinct threshold, highest first, starting at (0, 0)
/// with threshold +inf and ending at (1, 1). Tied scores move together.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> positive);

/// Trapezoidal area under roc_curve.
double binary_auc(std::span<const double> scores, std::span<const int> positive);
/// Mann-Whitney U / (n_pos n_neg) with midranks for ties.
double binary_auc_rank(std::span<const double> scores, std::span<const int> positive);

/// Average over all ordered pairs (j, k), j != k, of AUC(j | k): restricted to
/// classes j and k, class-j scores ranking j above k. Equal to
/// 2 / (c (c - 1)) * sum_{j<k} (AUC(j|k) + AUC(k|j)) / 2.
double multiclass_auc(const Matrix& scores, std::span<const int> y);

// ---- cross-validation splits -------------------------------------------------

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// k folds; every class is shuffled with the seed and dealt round-robin, so
/// per-class counts differ by at most one between folds.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> y, int k, std::uint64_t seed);
/// Complementary train/test index sets for each fold.
std::vector<Split> kfold_splits(std::span<const int> y, int k, std::uint64_t seed);

struct SubjectSplit {
  int held_out = 0;
  std::vector<int> train_subjects;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// One split per distinct subject (ascending id); the held-out subject's rows
/// never appear in train.
std::vector<SubjectSplit> loso_split(std::span<const int> subject_ids);

/// One split per distinct group value (e.g. trial) in ascending order.
std::vector<Split> group_splits(std::span<const int> groups);

/// Macro-averaged F1 over the given number of classes.
double macro_f1(std::span<const int> y_true, std::span<const int> y_pred, int classes);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};
MeanStd mean_std(std::span<const double> values);

}  // namespace chromaeeg::eval
