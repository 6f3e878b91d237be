#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chromaeeg/matrix.hpp"

namespace chromaeeg::models {

inline constexpr int kDefaultClassCount = 3;

enum class Family { KNN, LogisticRegression, RandomForest, MLP, SVM, GradientBoosting };

/// Column order of every report table.
inline constexpr std::array<Family, 6> kReportOrder{Family::KNN, Family::SVM, Family::LogisticRegression,
                                                    Family::RandomForest, Family::MLP, Family::GradientBoosting};

std::string_view family_tag(Family f);  // knn, svm, lr, rf, mlp, gb
Family parse_family(std::string_view tag);

enum class Penalty { L1, L2 };

struct KnnParams {
  int k = 5;
};

/// Multinomial softmax. Objective: mean cross-entropy + penalty / (C * n),
/// the intercepts are not penalised.
struct LogisticParams {
  Penalty penalty = Penalty::L2;
  double C = 1.0;
  int max_iter = 500;
  double tol = 1e-7;
};

struct ForestParams {
  int n_estimators = 100;
  int max_depth = 0;         // 0 = grow until pure
  int min_samples_leaf = 1;
  int max_features = 0;      // 0 = floor(sqrt(d))
};

/// Sigmoid hidden layers, softmax output, cross-entropy + L2.
struct MlpParams {
  std::vector<int> hidden{300, 100};
  double l2 = 1e-4;
  int epochs = 500;
  double learning_rate = 0.01;
  int batch_size = 32;
};

/// RBF kernel exp(-gamma |x - z|^2); one-vs-rest machines trained by SMO.
struct SvmParams {
  double C = 1.0;
  double gamma = 0.1;
  double tol = 1e-3;
  long long max_iter = 0;  // 0 = max(1e6, 100 n)
};

struct BoostParams {
  int n_estimators = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_leaf = 1;
};

using Params = std::variant<KnnParams, LogisticParams, ForestParams, MlpParams, SvmParams, BoostParams>;

struct ModelSpec {
  Params params;
  std::uint64_t seed = 0;

  Family family() const;
  /// Short human-readable hyperparameter summary, e.g. "svm C=1 gamma=0.1".
  std::string describe() const;
  static ModelSpec defaults(Family f, std::uint64_t seed = 0);
};

// ---- fitted state ----------------------------------------------------------

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class distribution (forest) or a single leaf value (boosting)
};

struct Tree {
  std::vector<TreeNode> nodes;
  /// Leaf reached by x.
  const TreeNode& leaf(std::span<const double> x) const;
  int depth() const;
};

struct KnnModel {
  int k = 5;
  Matrix x;
  std::vector<int> y;
};

struct LogisticModel {
  Matrix weights;             // classes x features
  std::vector<double> bias;   // classes
};

struct ForestModel {
  std::vector<Tree> trees;
};

struct MlpModel {
  std::vector<Matrix> weights;              // layer l: out x in
  std::vector<std::vector<double>> biases;  // layer l: out
};

struct SvmMachine {
  Matrix support;             // support vectors
  std::vector<double> coef;   // alpha_i * y_i
  double bias = 0.0;
};

struct SvmModel {
  double gamma = 0.1;
  std::vector<SvmMachine> machines;  // one per class (one-vs-rest)
};

struct BoostModel {
  std::vector<double> init;               // log class priors
  double learning_rate = 0.1;
  std::vector<std::vector<Tree>> rounds;  // rounds x classes
};

using State = std::variant<KnnModel, LogisticModel, ForestModel, MlpModel, SvmModel, BoostModel>;

struct TrainedModel {
  ModelSpec spec;
  int n_features = 0;
  int n_classes = kDefaultClassCount;
  State state;
  std::vector<std::string> feature_names;
  std::string normalization_id;

  Family family() const { return spec.family(); }
};

/// Labels must be 0..n_classes-1 with every class present.
TrainedModel fit(const ModelSpec& spec, const Matrix& x, std::span<const int> y,
                 int n_classes = kDefaultClassCount);

/// One row per sample, one column per class. Probabilistic families return
/// probabilities; SVM returns a softmax over its one-vs-rest decision values.
Matrix predict_scores(const TrainedModel& m, const Matrix& x);
/// argmax of the scores, lowest class index on ties.
std::vector<int> predict(const TrainedModel& m, const Matrix& x);
std::vector<int> argmax_rows(const Matrix& scores);

/// Raw one-vs-rest SVM decision values (rows x classes).
Matrix svm_decision_values(const SvmModel& m, const Matrix& x);

/// Copy of a forest or boosted model keeping only the first n trees/rounds.
/// Identical to refitting with n_estimators = n because tree seeds and
/// boosting rounds depend only on their index.
TrainedModel truncated(const TrainedModel& m, int n_estimators);

// ---- objectives exposed for gradient checking ------------------------------

/// Smooth part of the logistic objective (cross-entropy, plus the L2 term when
/// penalty is L2). Fills `grad` with the same shape as `model` when non-null.
double logistic_objective(const LogisticModel& model, const Matrix& x, std::span<const int> y,
                          const LogisticParams& params, LogisticModel* grad);

/// Mean cross-entropy + l2 / (2 m) * sum of squared weights over a batch of m rows.
double mlp_objective(const MlpModel& model, const Matrix& x, std::span<const int> y, double l2, MlpModel* grad);

/// Glorot-uniform initialisation for the given layer sizes.
MlpModel mlp_init(std::span<const int> layer_sizes, std::uint64_t seed);

// ---- SMO ----------------------------------------------------------------------

struct SmoResult {
  std::vector<double> alpha;
  double bias = 0.0;
  long long iterations = 0;
  /// max over I_up of -y G minus min over I_low of -y G at termination
  double kkt_gap = 0.0;
};

/// Binary soft-margin dual solved with maximal-violating-pair SMO on a
/// precomputed kernel (n x n). Labels are +1/-1.
SmoResult smo_solve(const Matrix& kernel, std::span<const double> labels, double C, double tol,
                    long long max_iter);

Matrix rbf_kernel(const Matrix& a, const Matrix& b, double gamma);

// ---- grid search ------------------------------------------------------------

struct HyperGrid {
  std::vector<KnnParams> knn;
  std::vector<LogisticParams> lr;
  std::vector<ForestParams> rf;
  std::vector<MlpParams> mlp;
  std::vector<SvmParams> svm;
  std::vector<BoostParams> gb;

  /// KNN k 4..8; LR {L1, L2} x C in decades 0.01..100; RF and GB
  /// n_estimators 10..100 step 10; MLP [300, 100] sigmoid with L2 1e-4;
  /// SVM C in decades 0.001..100 x gamma in decades 0.01..10.
  static HyperGrid full();
  /// One default point per family.
  static HyperGrid single_point();

  /// Grid points for one family as specs, in documented order.
  std::vector<ModelSpec> points(Family f, std::uint64_t seed) const;
};

struct GridRow {
  ModelSpec spec;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
};

struct GridSearchResult {
  ModelSpec best;
  std::vector<GridRow> table;
};

/// Stratified k-fold mean accuracy for every grid point; ties resolve to the
/// earliest point.
GridSearchResult grid_search(Family family, const HyperGrid& grid, const Matrix& x, std::span<const int> y,
                             int folds, std::uint64_t seed, int n_classes = kDefaultClassCount);

// ---- serialization ----------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;
std::string model_to_json(const TrainedModel& m);
TrainedModel model_from_json(std::string_view text);

}  // namespace chromaeeg::models
