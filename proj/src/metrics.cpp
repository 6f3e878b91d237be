#include "chromaeeg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "chromaeeg/error.hpp"
#include "chromaeeg/rng.hpp"

namespace chromaeeg::eval {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorKind::LengthMismatch, "label vectors differ in length");
  if (a == 0) throw Error(ErrorKind::Empty, "no samples");
}

void check_binary(std::span<const double> scores, std::span<const int> positive) {
  check_lengths(scores.size(), positive.size());
  const auto pos = std::count_if(positive.begin(), positive.end(), [](int v) { return v != 0; });
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(positive.size())) {
    throw Error(ErrorKind::SingleClass, "AUC needs both positive and negative samples");
  }
}

}  // namespace

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const int> y_true, std::span<const int> y_pred,
                                             int classes) {
  check_lengths(y_true.size(), y_pred.size());
  ConfusionMatrix cm;
  cm.classes = classes;
  cm.counts.assign(static_cast<std::size_t>(classes * classes), 0);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= classes || y_pred[i] < 0 || y_pred[i] >= classes) {
      throw Error(ErrorKind::InvalidArgument, "label outside 0.." + std::to_string(classes - 1));
    }
    ++cm.counts[y_true[i] * classes + y_pred[i]];
  }
  return cm;
}

long long ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), 0LL); }

long long ConfusionMatrix::correct() const {
  long long c = 0;
  for (int k = 0; k < classes; ++k) c += at(k, k);
  return c;
}

long long ConfusionMatrix::true_count(int k) const {
  long long s = 0;
  for (int j = 0; j < classes; ++j) s += at(k, j);
  return s;
}

long long ConfusionMatrix::predicted_count(int k) const {
  long long s = 0;
  for (int i = 0; i < classes; ++i) s += at(i, k);
  return s;
}

double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  check_lengths(y_true.size(), y_pred.size());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hit += y_true[i] == y_pred[i];
  return static_cast<double>(hit) / static_cast<double>(y_true.size());
}

double mcc(const ConfusionMatrix& cm) {
  // Products of counts stay exact in double well past any realistic dataset size.
  const double s = static_cast<double>(cm.total());
  const double c = static_cast<double>(cm.correct());
  double sum_pt = 0.0, sum_pp = 0.0, sum_tt = 0.0;
  for (int k = 0; k < cm.classes; ++k) {
    const double p = static_cast<double>(cm.predicted_count(k));
    const double t = static_cast<double>(cm.true_count(k));
    sum_pt += p * t;
    sum_pp += p * p;
    sum_tt += t * t;
  }
  const double denom_p = s * s - sum_pp;
  const double denom_t = s * s - sum_tt;
  if (denom_p == 0.0 || denom_t == 0.0) return 0.0;
  return (c * s - sum_pt) / std::sqrt(denom_p * denom_t);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> positive) {
  check_binary(scores, positive);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double n_pos = 0.0;
  for (int p : positive) n_pos += p != 0;
  const double n_neg = static_cast<double>(scores.size()) - n_pos;

  std::vector<RocPoint> curve;
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      if (positive[order[i]] != 0) {
        tp += 1.0;
      } else {
        fp += 1.0;
      }
      ++i;
    }
    curve.push_back({threshold, fp / n_neg, tp / n_pos});
  }
  return curve;
}

double binary_auc(std::span<const double> scores, std::span<const int> positive) {
  const auto curve = roc_curve(scores, positive);
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) * 0.5;
  }
  return area;
}

double binary_auc_rank(std::span<const double> scores, std::span<const int> positive) {
  check_binary(scores, positive);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double n_pos = 0.0, rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (positive[k] != 0) {
      n_pos += 1.0;
      rank_sum += rank[k];
    }
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double multiclass_auc(const Matrix& scores, std::span<const int> y) {
  if (scores.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "score rows differ from label count");
  const int c = static_cast<int>(scores.cols());
  if (c < 2) throw Error(ErrorKind::InvalidArgument, "multiclass AUC needs at least two classes");
  std::vector<std::size_t> per_class(static_cast<std::size_t>(c), 0);
  for (int label : y) {
    if (label < 0 || label >= c) throw Error(ErrorKind::InvalidArgument, "label outside score columns");
    ++per_class[static_cast<std::size_t>(label)];
  }
  for (int k = 0; k < c; ++k) {
    if (per_class[static_cast<std::size_t>(k)] == 0) {
      throw Error(ErrorKind::ClassMissing, "class " + std::to_string(k) + " has no samples");
    }
  }

  double total = 0.0;
  std::vector<double> s;
  std::vector<int> pos;
  for (int j = 0; j < c; ++j) {
    for (int k = j + 1; k < c; ++k) {
      for (int positive_class : {j, k}) {
        s.clear();
        pos.clear();
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (y[i] != j && y[i] != k) continue;
          s.push_back(scores(i, static_cast<std::size_t>(positive_class)));
          pos.push_back(y[i] == positive_class ? 1 : 0);
        }
        total += binary_auc(s, pos);
      }
    }
  }
  return total / (static_cast<double>(c) * static_cast<double>(c - 1));
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  for (const auto& [label, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorKind::ClassTooSmall, "class " + std::to_string(label) + " has " +
                                                std::to_string(idx.size()) + " rows, fewer than " +
                                                std::to_string(k) + " folds");
    }
  }
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t offset = 0;
  for (auto& [label, idx] : by_class) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(label)}));
    rng.shuffle(idx.begin(), idx.end());
    for (std::size_t i = 0; i < idx.size(); ++i) folds[(offset + i) % folds.size()].push_back(idx[i]);
    // Continue dealing where this class stopped so fold sizes stay balanced.
    offset = (offset + idx.size()) % folds.size();
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<Split> kfold_splits(std::span<const int> y, int k, std::uint64_t seed) {
  const auto folds = stratified_kfold(y, k, seed);
  std::vector<Split> out(folds.size());
  std::vector<int> fold_of(y.size(), -1);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    for (std::size_t i : folds[f]) fold_of[i] = static_cast<int>(f);
  }
  for (std::size_t f = 0; f < folds.size(); ++f) {
    out[f].test = folds[f];
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (fold_of[i] != static_cast<int>(f)) out[f].train.push_back(i);
    }
  }
  return out;
}

std::vector<SubjectSplit> loso_split(std::span<const int> subject_ids) {
  const std::set<int> subjects(subject_ids.begin(), subject_ids.end());
  if (subjects.size() < 2) throw Error(ErrorKind::SingleSubject, "leave-one-subject-out needs two subjects");
  std::vector<SubjectSplit> out;
  for (int held : subjects) {
    SubjectSplit s;
    s.held_out = held;
    for (int other : subjects) {
      if (other != held) s.train_subjects.push_back(other);
    }
    for (std::size_t i = 0; i < subject_ids.size(); ++i) {
      (subject_ids[i] == held ? s.test : s.train).push_back(i);
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Split> group_splits(std::span<const int> groups) {
  const std::set<int> distinct(groups.begin(), groups.end());
  if (distinct.size() < 2) throw Error(ErrorKind::InsufficientData, "group split needs two groups");
  std::vector<Split> out;
  for (int g : distinct) {
    Split s;
    for (std::size_t i = 0; i < groups.size(); ++i) (groups[i] == g ? s.test : s.train).push_back(i);
    out.push_back(std::move(s));
  }
  return out;
}

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred, int classes) {
  const auto cm = ConfusionMatrix::from_labels(y_true, y_pred, classes);
  double sum = 0.0;
  for (int k = 0; k < classes; ++k) {
    const double tp = static_cast<double>(cm.at(k, k));
    const double denom = static_cast<double>(cm.true_count(k) + cm.predicted_count(k));
    sum += denom == 0.0 ? 0.0 : 2.0 * tp / denom;
  }
  return sum / classes;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

}  // namespace chromaeeg::eval
