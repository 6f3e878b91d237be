#include <doctest.h>

#include <algorithm>
#include <set>

#include "chromaeeg/error.hpp"
#include "chromaeeg/metrics.hpp"
#include "chromaeeg/rng.hpp"
#include "oracles.hpp"

using namespace chromaeeg;
using namespace chromaeeg::eval;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

// Directed AUC(j | k) by enumeration: class-j score of class-j rows against
// class-j score of class-k rows.
double directed_auc(const Matrix& s, const std::vector<int>& y, int j, int k) {
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == j) pos.push_back(s(i, static_cast<std::size_t>(j)));
    if (y[i] == k) neg.push_back(s(i, static_cast<std::size_t>(j)));
  }
  return oracle::pairwise_auc(pos, neg);
}

}  // namespace

TEST_CASE("accuracy") {
  const std::vector<int> y{0, 1, 2, 0}, p{0, 1, 1, 0}, q{1, 2, 0, 1};
  CHECK(accuracy(y, y) == 1.0);
  CHECK(accuracy(y, q) == 0.0);
  CHECK(accuracy(y, p) == 0.75);
  CHECK(kind_of([&] { accuracy(y, std::vector<int>{0}); }) == ErrorKind::LengthMismatch);
  CHECK(kind_of([&] { accuracy(std::vector<int>{}, std::vector<int>{}); }) == ErrorKind::Empty);
}

TEST_CASE("binary AUC: identities and trapezoid vs rank statistic") {
  const std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
  const std::vector<int> lab{0, 0, 1, 1};
  CHECK(binary_auc(sep, lab) == 1.0);
  CHECK(binary_auc(std::vector<double>(4, 0.3), lab) == 0.5);
  CHECK(kind_of([&] { binary_auc(sep, std::vector<int>(4, 1)); }) == ErrorKind::SingleClass);

  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = t == 0 ? 1000 : 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    // Coarse scores so ties occur often.
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 10.0) / 10.0;
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 0;
    y[1] = 1;
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (y[i] ? pos : neg).push_back(s[i]);
    const double want = oracle::pairwise_auc(pos, neg);
    CHECK(std::abs(binary_auc(s, y) - want) < 1e-12);
    CHECK(std::abs(binary_auc_rank(s, y) - want) < 1e-12);
    // Strictly monotone transform leaves it unchanged.
    std::vector<double> e(n);
    std::transform(s.begin(), s.end(), e.begin(), [](double v) { return std::exp(3.0 * v) - 7.0; });
    CHECK(std::abs(binary_auc(e, y) - binary_auc(s, y)) < 1e-12);
  }
}

TEST_CASE("ROC curve starts at the origin, ends at (1,1), is monotone") {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.3, 0.1};
  const std::vector<int> y{1, 0, 1, 0, 1};
  const auto roc = roc_curve(s, y);
  CHECK(roc.front().fpr == 0.0);
  CHECK(roc.front().tpr == 0.0);
  CHECK(std::isinf(roc.front().threshold));
  CHECK(roc.back().fpr == 1.0);
  CHECK(roc.back().tpr == 1.0);
  CHECK(roc.size() == 5);  // inf + 4 distinct thresholds
  for (std::size_t i = 1; i < roc.size(); ++i) {
    CHECK(roc[i].fpr >= roc[i - 1].fpr);
    CHECK(roc[i].tpr >= roc[i - 1].tpr);
    CHECK(roc[i].threshold < roc[i - 1].threshold);
  }
}

TEST_CASE("multiclass AUC against exhaustive directed pairs") {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 30;
    Matrix s(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(i % 3);
      for (std::size_t c = 0; c < 3; ++c) s(i, c) = std::round(rng.uniform() * 20.0);
    }
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        if (j != k) sum += directed_auc(s, y, j, k);
      }
    }
    CHECK(std::abs(multiclass_auc(s, y) - sum / 6.0) < 1e-12);
  }

  Matrix onehot(6, 3, 0.0), flat(6, 3, 0.25);
  std::vector<int> y{0, 1, 2, 2, 1, 0};
  for (std::size_t i = 0; i < 6; ++i) onehot(i, static_cast<std::size_t>(y[i])) = 1.0;
  CHECK(multiclass_auc(onehot, y) == 1.0);
  CHECK(multiclass_auc(flat, y) == 0.5);

  // Two classes: mean of the two directed binary AUCs.
  Matrix two(8, 2);
  std::vector<int> y2{0, 1, 0, 1, 1, 0, 0, 1};
  for (std::size_t i = 0; i < 8; ++i) {
    two(i, 0) = rng.uniform();
    two(i, 1) = rng.uniform();
  }
  CHECK(std::abs(multiclass_auc(two, y2) - 0.5 * (directed_auc(two, y2, 0, 1) + directed_auc(two, y2, 1, 0))) <
        1e-12);

  std::vector<int> missing{0, 0, 1, 1, 0, 1};
  CHECK(kind_of([&] { multiclass_auc(onehot, missing); }) == ErrorKind::ClassMissing);
}

TEST_CASE("MCC against the direct formula") {
  auto cm_of = [](const std::vector<std::vector<double>>& c) {
    ConfusionMatrix cm;
    cm.classes = static_cast<int>(c.size());
    for (const auto& row : c) {
      for (double v : row) cm.counts.push_back(static_cast<long long>(v));
    }
    return cm;
  };
  CHECK(mcc(cm_of({{2, 0, 0}, {0, 2, 0}, {0, 0, 2}})) == 1.0);
  CHECK(mcc(cm_of({{1, 1}, {1, 1}})) == 0.0);
  const std::vector<std::vector<double>> c{{5, 1, 0}, {2, 4, 0}, {0, 1, 5}};
  // Hand evaluation: s=18, c=14, t=(6,6,6), p=(7,6,5) -> (252-108)/sqrt((324-110)(324-108)).
  const double hand = (14.0 * 18.0 - (7 * 6 + 6 * 6 + 5 * 6)) / std::sqrt((324.0 - 110.0) * (324.0 - 108.0));
  CHECK(std::abs(mcc(cm_of(c)) - hand) < 1e-12);
  CHECK(std::abs(mcc(cm_of(c)) - oracle::mcc_formula(c)) < 1e-12);

  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 5 + rng.below(80);
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(3));
      p[i] = rng.uniform() < 0.5 ? y[i] : static_cast<int>(rng.below(3));
    }
    const auto cm = ConfusionMatrix::from_labels(y, p, 3);
    std::vector<std::vector<double>> dense(3, std::vector<double>(3, 0.0));
    for (std::size_t i = 0; i < n; ++i) dense[static_cast<std::size_t>(y[i])][static_cast<std::size_t>(p[i])] += 1;
    CHECK(std::abs(mcc(cm) - oracle::mcc_formula(dense)) < 1e-12);
    // Relabelling classes consistently leaves MCC unchanged.
    std::vector<int> y2(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
      y2[i] = (y[i] + 1) % 3;
      p2[i] = (p[i] + 1) % 3;
    }
    CHECK(std::abs(mcc(ConfusionMatrix::from_labels(y2, p2, 3)) - mcc(cm)) < 1e-12);
  }
  CHECK(mcc(ConfusionMatrix::from_labels(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}, 3)) == 1.0);
}

TEST_CASE("stratified folds") {
  std::vector<int> y;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 20; ++i) y.push_back(c);
  }
  const auto folds = stratified_kfold(y, 5, 7);
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    int per[3] = {0, 0, 0};
    for (std::size_t i : f) {
      CHECK(seen.insert(i).second);
      ++per[y[i]];
    }
    CHECK(per[0] == 4);
    CHECK(per[1] == 4);
    CHECK(per[2] == 4);
  }
  CHECK(seen.size() == 60);
  CHECK(stratified_kfold(y, 5, 7) == folds);
  CHECK_FALSE(stratified_kfold(y, 5, 8) == folds);

  std::vector<int> uneven(23, 0);
  for (int i = 0; i < 11; ++i) uneven.push_back(1);
  for (int i = 0; i < 7; ++i) uneven.push_back(2);
  for (const auto& s : kfold_splits(uneven, 5, 1)) {
    CHECK(s.train.size() + s.test.size() == uneven.size());
  }
  CHECK(kind_of([&] { stratified_kfold(std::vector<int>{0, 0, 0, 1, 1}, 3, 0); }) == ErrorKind::ClassTooSmall);
}

TEST_CASE("leave-one-subject-out splits") {
  std::vector<int> subjects;
  for (int s = 1; s <= 8; ++s) {
    for (int r = 0; r < 5; ++r) subjects.push_back(s);
  }
  const auto splits = loso_split(subjects);
  REQUIRE(splits.size() == 8);
  std::set<int> held;
  for (const auto& sp : splits) {
    held.insert(sp.held_out);
    CHECK(sp.train_subjects.size() == 7);
    for (std::size_t i : sp.train) CHECK(subjects[i] != sp.held_out);
    for (std::size_t i : sp.test) CHECK(subjects[i] == sp.held_out);
    CHECK(sp.train.size() + sp.test.size() == subjects.size());
  }
  CHECK(held.size() == 8);
  CHECK(loso_split(std::vector<int>{3, 9, 3}).size() == 2);
  CHECK(kind_of([] { loso_split(std::vector<int>{4, 4, 4}); }) == ErrorKind::SingleSubject);
}

TEST_CASE("macro F1 and population std") {
  const std::vector<int> y{0, 0, 1, 1, 2, 2}, p{0, 1, 1, 1, 2, 0};
  // class 0: P=1/2 R=1/2 F=1/2; class 1: P=2/3 R=1 F=0.8; class 2: P=1 R=1/2 F=2/3
  CHECK(macro_f1(y, p, 3) == doctest::Approx((0.5 + 0.8 + 2.0 / 3.0) / 3.0).epsilon(1e-14));
  const auto ms = mean_std(std::vector<double>{1, 2, 3, 4});
  CHECK(ms.mean == 2.5);
  CHECK(ms.std == doctest::Approx(std::sqrt(1.25)));
}
