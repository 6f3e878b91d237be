#include "chromaeeg/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "chromaeeg/error.hpp"
#include "chromaeeg/metrics.hpp"
#include "chromaeeg/rng.hpp"
#include "chromaeeg/text_io.hpp"
#include "families.hpp"

namespace chromaeeg::models {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

std::string_view family_tag(Family f) {
  switch (f) {
    case Family::KNN: return "knn";
    case Family::LogisticRegression: return "lr";
    case Family::RandomForest: return "rf";
    case Family::MLP: return "mlp";
    case Family::SVM: return "svm";
    case Family::GradientBoosting: return "gb";
  }
  return "?";
}

Family parse_family(std::string_view tag) {
  for (Family f : kReportOrder) {
    if (family_tag(f) == tag) return f;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model family '" + std::string(tag) + "'");
}

Family ModelSpec::family() const {
  return std::visit(overloaded{
                        [](const KnnParams&) { return Family::KNN; },
                        [](const LogisticParams&) { return Family::LogisticRegression; },
                        [](const ForestParams&) { return Family::RandomForest; },
                        [](const MlpParams&) { return Family::MLP; },
                        [](const SvmParams&) { return Family::SVM; },
                        [](const BoostParams&) { return Family::GradientBoosting; },
                    },
                    params);
}

std::string ModelSpec::describe() const {
  using io::format_double;
  std::ostringstream os;
  os << family_tag(family());
  std::visit(overloaded{
                 [&](const KnnParams& p) { os << " k=" << p.k; },
                 [&](const LogisticParams& p) {
                   os << " penalty=" << (p.penalty == Penalty::L1 ? "l1" : "l2") << " C=" << format_double(p.C);
                 },
                 [&](const ForestParams& p) { os << " n_estimators=" << p.n_estimators; },
                 [&](const MlpParams& p) {
                   os << " hidden=";
                   for (std::size_t i = 0; i < p.hidden.size(); ++i) os << (i ? "x" : "") << p.hidden[i];
                   os << " l2=" << format_double(p.l2) << " epochs=" << p.epochs;
                 },
                 [&](const SvmParams& p) { os << " C=" << format_double(p.C) << " gamma=" << format_double(p.gamma); },
                 [&](const BoostParams& p) {
                   os << " n_estimators=" << p.n_estimators << " learning_rate=" << format_double(p.learning_rate)
                      << " max_depth=" << p.max_depth;
                 },
             },
             params);
  return os.str();
}

ModelSpec ModelSpec::defaults(Family f, std::uint64_t seed) {
  switch (f) {
    case Family::KNN: return {KnnParams{}, seed};
    case Family::LogisticRegression: return {LogisticParams{}, seed};
    case Family::RandomForest: return {ForestParams{}, seed};
    case Family::MLP: return {MlpParams{}, seed};
    case Family::SVM: return {SvmParams{}, seed};
    case Family::GradientBoosting: return {BoostParams{}, seed};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model family");
}

namespace detail {

void softmax_inplace(std::span<double> z) {
  if (z.empty()) return;
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

void softmax_rows(Matrix& z) {
  for (std::size_t r = 0; r < z.rows(); ++r) softmax_inplace(z.row(r));
}

}  // namespace detail

TrainedModel fit(const ModelSpec& spec, const Matrix& x, std::span<const int> y, int n_classes) {
  if (x.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "feature rows and labels differ in length");
  if (n_classes < 2) throw Error(ErrorKind::InvalidArgument, "need at least two classes");
  if (x.rows() < static_cast<std::size_t>(n_classes)) throw Error(ErrorKind::InsufficientData, "fewer rows than classes");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "feature matrix contains non-finite values");
  }
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (int label : y) {
    if (label < 0 || label >= n_classes) throw Error(ErrorKind::InvalidArgument, "label out of range");
    ++counts[static_cast<std::size_t>(label)];
  }
  for (int k = 0; k < n_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      throw Error(ErrorKind::ClassMissing, "class " + std::to_string(k) + " has no training rows");
    }
  }

  TrainedModel m;
  m.spec = spec;
  m.n_features = static_cast<int>(x.cols());
  m.n_classes = n_classes;
  m.state = std::visit(overloaded{
                           [&](const KnnParams& p) -> State { return detail::fit_knn(p, x, y); },
                           [&](const LogisticParams& p) -> State { return detail::fit_logistic(p, x, y, n_classes); },
                           [&](const ForestParams& p) -> State {
                             return detail::fit_forest(p, x, y, n_classes, spec.seed);
                           },
                           [&](const MlpParams& p) -> State { return detail::fit_mlp(p, x, y, n_classes, spec.seed); },
                           [&](const SvmParams& p) -> State { return detail::fit_svm(p, x, y, n_classes); },
                           [&](const BoostParams& p) -> State { return detail::fit_boosting(p, x, y, n_classes); },
                       },
                       spec.params);
  return m;
}

Matrix predict_scores(const TrainedModel& m, const Matrix& x) {
  if (x.cols() != static_cast<std::size_t>(m.n_features)) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(m.n_features) + " features, got " +
                                                  std::to_string(x.cols()));
  }
  return std::visit(overloaded{
                        [&](const KnnModel& s) { return detail::knn_scores(s, x, m.n_classes); },
                        [&](const LogisticModel& s) { return detail::logistic_scores(s, x); },
                        [&](const ForestModel& s) { return detail::forest_scores(s, x, m.n_classes); },
                        [&](const MlpModel& s) { return detail::mlp_scores(s, x); },
                        [&](const SvmModel& s) {
                          Matrix d = svm_decision_values(s, x);
                          detail::softmax_rows(d);
                          return d;
                        },
                        [&](const BoostModel& s) { return detail::boosting_scores(s, x); },
                    },
                    m.state);
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const auto row = scores.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

std::vector<int> predict(const TrainedModel& m, const Matrix& x) { return argmax_rows(predict_scores(m, x)); }

TrainedModel truncated(const TrainedModel& m, int n_estimators) {
  if (n_estimators < 1) throw Error(ErrorKind::InvalidArgument, "n_estimators must be at least 1");
  TrainedModel out = m;
  auto cut = [&](auto& v) {
    if (static_cast<std::size_t>(n_estimators) > v.size()) {
      throw Error(ErrorKind::InvalidArgument, "model has fewer estimators than requested");
    }
    v.resize(static_cast<std::size_t>(n_estimators));
  };
  if (auto* f = std::get_if<ForestModel>(&out.state)) {
    cut(f->trees);
    std::get<ForestParams>(out.spec.params).n_estimators = n_estimators;
  } else if (auto* b = std::get_if<BoostModel>(&out.state)) {
    cut(b->rounds);
    std::get<BoostParams>(out.spec.params).n_estimators = n_estimators;
  } else {
    throw Error(ErrorKind::InvalidArgument, "only forests and boosted models can be truncated");
  }
  return out;
}

// ---- grids ------------------------------------------------------------------

HyperGrid HyperGrid::full() {
  HyperGrid g;
  for (int k = 4; k <= 8; ++k) g.knn.push_back({k});
  for (Penalty pen : {Penalty::L1, Penalty::L2}) {
    for (double c : {0.01, 0.1, 1.0, 10.0, 100.0}) {
      LogisticParams p;
      p.penalty = pen;
      p.C = c;
      g.lr.push_back(p);
    }
  }
  for (int n = 10; n <= 100; n += 10) {
    ForestParams f;
    f.n_estimators = n;
    g.rf.push_back(f);
    BoostParams b;
    b.n_estimators = n;
    g.gb.push_back(b);
  }
  g.mlp.push_back(MlpParams{});
  for (double c : {0.001, 0.01, 0.1, 1.0, 10.0, 100.0}) {
    for (double gamma : {0.01, 0.1, 1.0, 10.0}) {
      SvmParams s;
      s.C = c;
      s.gamma = gamma;
      g.svm.push_back(s);
    }
  }
  return g;
}

HyperGrid HyperGrid::single_point() {
  HyperGrid g;
  g.knn.push_back({});
  g.lr.push_back({});
  g.rf.push_back({});
  g.mlp.push_back({});
  g.svm.push_back({});
  g.gb.push_back({});
  return g;
}

std::vector<ModelSpec> HyperGrid::points(Family f, std::uint64_t seed) const {
  std::vector<ModelSpec> out;
  auto add = [&](const auto& list) {
    for (const auto& p : list) out.push_back({p, seed});
  };
  switch (f) {
    case Family::KNN: add(knn); break;
    case Family::LogisticRegression: add(lr); break;
    case Family::RandomForest: add(rf); break;
    case Family::MLP: add(mlp); break;
    case Family::SVM: add(svm); break;
    case Family::GradientBoosting: add(gb); break;
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "grid for " + std::string(family_tag(f)) + " is empty");
  return out;
}

namespace {

// Key identifying the parameters that matter besides n_estimators, so points
// that only differ in ensemble size can share one fit.
std::string ensemble_key(const ModelSpec& s) {
  std::ostringstream os;
  if (const auto* f = std::get_if<ForestParams>(&s.params)) {
    os << "rf " << f->max_depth << ' ' << f->min_samples_leaf << ' ' << f->max_features;
  } else if (const auto* b = std::get_if<BoostParams>(&s.params)) {
    os << "gb " << io::format_double(b->learning_rate) << ' ' << b->max_depth << ' ' << b->min_samples_leaf;
  }
  return os.str();
}

int n_estimators_of(const ModelSpec& s) {
  if (const auto* f = std::get_if<ForestParams>(&s.params)) return f->n_estimators;
  if (const auto* b = std::get_if<BoostParams>(&s.params)) return b->n_estimators;
  return 0;
}

}  // namespace

GridSearchResult grid_search(Family family, const HyperGrid& grid, const Matrix& x, std::span<const int> y,
                             int folds, std::uint64_t seed, int n_classes) {
  if (folds < 2) throw Error(ErrorKind::InvalidArgument, "grid search needs at least two folds");
  const auto specs = grid.points(family, seed);
  const auto splits = eval::kfold_splits(y, folds, seed);

  GridSearchResult result;
  result.table.resize(specs.size());
  for (std::size_t g = 0; g < specs.size(); ++g) {
    result.table[g].spec = specs[g];
    result.table[g].fold_accuracy.assign(splits.size(), 0.0);
  }
  const bool ensemble = family == Family::RandomForest || family == Family::GradientBoosting;

  for (std::size_t fi = 0; fi < splits.size(); ++fi) {
    const auto& split = splits[fi];
    const Matrix xtr = x.select_rows(split.train);
    const Matrix xte = x.select_rows(split.test);
    std::vector<int> ytr, yte;
    for (std::size_t i : split.train) ytr.push_back(y[i]);
    for (std::size_t i : split.test) yte.push_back(y[i]);
    // The fold seed is shared by all grid points, so an ensemble fitted with
    // the largest size can be cut down to every smaller size exactly.
    const std::uint64_t fold_seed = derive_seed(seed, {static_cast<std::uint64_t>(fi)});

    if (ensemble) {
      std::map<std::string, std::vector<std::size_t>> groups;
      for (std::size_t g = 0; g < specs.size(); ++g) groups[ensemble_key(specs[g])].push_back(g);
      for (const auto& [key, members] : groups) {
        std::size_t largest = members.front();
        for (std::size_t g : members) {
          if (n_estimators_of(specs[g]) > n_estimators_of(specs[largest])) largest = g;
        }
        ModelSpec big = specs[largest];
        big.seed = fold_seed;
        const TrainedModel full = fit(big, xtr, ytr, n_classes);
        for (std::size_t g : members) {
          const TrainedModel m = truncated(full, n_estimators_of(specs[g]));
          result.table[g].fold_accuracy[fi] = eval::accuracy(yte, predict(m, xte));
        }
      }
    } else {
      for (std::size_t g = 0; g < specs.size(); ++g) {
        ModelSpec s = specs[g];
        s.seed = fold_seed;
        const TrainedModel m = fit(s, xtr, ytr, n_classes);
        result.table[g].fold_accuracy[fi] = eval::accuracy(yte, predict(m, xte));
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t g = 0; g < specs.size(); ++g) {
    double s = 0.0;
    for (double a : result.table[g].fold_accuracy) s += a;
    result.table[g].mean_accuracy = s / static_cast<double>(splits.size());
    if (result.table[g].mean_accuracy > result.table[best].mean_accuracy) best = g;
  }
  result.best = specs[best];
  return result;
}

// ---- serialization ----------------------------------------------------------

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

Matrix matrix_from(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols()) throw Error(ErrorKind::MalformedRow, "matrix data has the wrong length");
  m.data() = std::move(data);
  return m;
}

json tree_json(const Tree& t) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       value = json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

Tree tree_from(const json& j) {
  Tree t;
  const auto& f = j.at("feature");
  for (std::size_t i = 0; i < f.size(); ++i) {
    TreeNode n;
    n.feature = f[i].get<int>();
    n.threshold = j.at("threshold")[i].get<double>();
    n.left = j.at("left")[i].get<int>();
    n.right = j.at("right")[i].get<int>();
    n.value = j.at("value")[i].get<std::vector<double>>();
    t.nodes.push_back(std::move(n));
  }
  return t;
}

json params_json(const Params& params) {
  return std::visit(
      overloaded{
          [](const KnnParams& p) -> json { return {{"k", p.k}}; },
          [](const LogisticParams& p) -> json {
            return {{"penalty", p.penalty == Penalty::L1 ? "l1" : "l2"}, {"C", p.C}, {"max_iter", p.max_iter},
                    {"tol", p.tol}};
          },
          [](const ForestParams& p) -> json {
            return {{"n_estimators", p.n_estimators}, {"max_depth", p.max_depth},
                    {"min_samples_leaf", p.min_samples_leaf}, {"max_features", p.max_features}};
          },
          [](const MlpParams& p) -> json {
            return {{"hidden", p.hidden}, {"l2", p.l2}, {"epochs", p.epochs},
                    {"learning_rate", p.learning_rate}, {"batch_size", p.batch_size}};
          },
          [](const SvmParams& p) -> json {
            return {{"C", p.C}, {"gamma", p.gamma}, {"tol", p.tol}, {"max_iter", p.max_iter}};
          },
          [](const BoostParams& p) -> json {
            return {{"n_estimators", p.n_estimators}, {"learning_rate", p.learning_rate},
                    {"max_depth", p.max_depth}, {"min_samples_leaf", p.min_samples_leaf}};
          },
      },
      params);
}

Params params_from(Family f, const json& j) {
  switch (f) {
    case Family::KNN: return KnnParams{j.at("k").get<int>()};
    case Family::LogisticRegression: {
      LogisticParams p;
      p.penalty = j.at("penalty").get<std::string>() == "l1" ? Penalty::L1 : Penalty::L2;
      p.C = j.at("C").get<double>();
      p.max_iter = j.at("max_iter").get<int>();
      p.tol = j.at("tol").get<double>();
      return p;
    }
    case Family::RandomForest: {
      ForestParams p;
      p.n_estimators = j.at("n_estimators").get<int>();
      p.max_depth = j.at("max_depth").get<int>();
      p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
      p.max_features = j.at("max_features").get<int>();
      return p;
    }
    case Family::MLP: {
      MlpParams p;
      p.hidden = j.at("hidden").get<std::vector<int>>();
      p.l2 = j.at("l2").get<double>();
      p.epochs = j.at("epochs").get<int>();
      p.learning_rate = j.at("learning_rate").get<double>();
      p.batch_size = j.at("batch_size").get<int>();
      return p;
    }
    case Family::SVM: {
      SvmParams p;
      p.C = j.at("C").get<double>();
      p.gamma = j.at("gamma").get<double>();
      p.tol = j.at("tol").get<double>();
      p.max_iter = j.at("max_iter").get<long long>();
      return p;
    }
    case Family::GradientBoosting: {
      BoostParams p;
      p.n_estimators = j.at("n_estimators").get<int>();
      p.learning_rate = j.at("learning_rate").get<double>();
      p.max_depth = j.at("max_depth").get<int>();
      p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
      return p;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model family");
}

json state_json(const State& state) {
  return std::visit(overloaded{
                        [](const KnnModel& s) -> json { return {{"k", s.k}, {"x", matrix_json(s.x)}, {"y", s.y}}; },
                        [](const LogisticModel& s) -> json {
                          return {{"weights", matrix_json(s.weights)}, {"bias", s.bias}};
                        },
                        [](const ForestModel& s) -> json {
                          json trees = json::array();
                          for (const auto& t : s.trees) trees.push_back(tree_json(t));
                          return {{"trees", trees}};
                        },
                        [](const MlpModel& s) -> json {
                          json w = json::array();
                          for (const auto& m : s.weights) w.push_back(matrix_json(m));
                          return {{"weights", w}, {"biases", s.biases}};
                        },
                        [](const SvmModel& s) -> json {
                          json machines = json::array();
                          for (const auto& m : s.machines) {
                            machines.push_back(
                                {{"support", matrix_json(m.support)}, {"coef", m.coef}, {"bias", m.bias}});
                          }
                          return {{"gamma", s.gamma}, {"machines", machines}};
                        },
                        [](const BoostModel& s) -> json {
                          json rounds = json::array();
                          for (const auto& r : s.rounds) {
                            json trees = json::array();
                            for (const auto& t : r) trees.push_back(tree_json(t));
                            rounds.push_back(trees);
                          }
                          return {{"init", s.init}, {"learning_rate", s.learning_rate}, {"rounds", rounds}};
                        },
                    },
                    state);
}

State state_from(Family f, const json& j) {
  switch (f) {
    case Family::KNN: return KnnModel{j.at("k").get<int>(), matrix_from(j.at("x")), j.at("y").get<std::vector<int>>()};
    case Family::LogisticRegression:
      return LogisticModel{matrix_from(j.at("weights")), j.at("bias").get<std::vector<double>>()};
    case Family::RandomForest: {
      ForestModel m;
      for (const auto& t : j.at("trees")) m.trees.push_back(tree_from(t));
      return m;
    }
    case Family::MLP: {
      MlpModel m;
      for (const auto& w : j.at("weights")) m.weights.push_back(matrix_from(w));
      m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
      return m;
    }
    case Family::SVM: {
      SvmModel m;
      m.gamma = j.at("gamma").get<double>();
      for (const auto& mj : j.at("machines")) {
        m.machines.push_back(
            {matrix_from(mj.at("support")), mj.at("coef").get<std::vector<double>>(), mj.at("bias").get<double>()});
      }
      return m;
    }
    case Family::GradientBoosting: {
      BoostModel m;
      m.init = j.at("init").get<std::vector<double>>();
      m.learning_rate = j.at("learning_rate").get<double>();
      for (const auto& r : j.at("rounds")) {
        std::vector<Tree> trees;
        for (const auto& t : r) trees.push_back(tree_from(t));
        m.rounds.push_back(std::move(trees));
      }
      return m;
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown model family");
}

}  // namespace

std::string model_to_json(const TrainedModel& m) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["family"] = std::string(family_tag(m.family()));
  j["params"] = params_json(m.spec.params);
  j["seed"] = m.spec.seed;
  j["n_features"] = m.n_features;
  j["n_classes"] = m.n_classes;
  j["classes"] = {"red", "green", "blue"};
  j["feature_names"] = m.feature_names;
  j["normalization_id"] = m.normalization_id;
  j["state"] = state_json(m.state);
  return j.dump();
}

TrainedModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRow, std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::InvalidArgument, "unsupported model format version");
    }
    TrainedModel m;
    const Family f = parse_family(j.at("family").get<std::string>());
    m.spec.params = params_from(f, j.at("params"));
    m.spec.seed = j.at("seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<int>();
    m.n_classes = j.at("n_classes").get<int>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.normalization_id = j.at("normalization_id").get<std::string>();
    m.state = state_from(f, j.at("state"));
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRow, std::string("model file is missing fields: ") + e.what());
  }
}

}  // namespace chromaeeg::models
