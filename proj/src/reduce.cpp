#include "chromaeeg/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "chromaeeg/error.hpp"
#include "chromaeeg/metrics.hpp"
#include "chromaeeg/rng.hpp"
#include "chromaeeg/text_io.hpp"
#include "dense.hpp"

namespace chromaeeg::reduce {

// ---- forward selection --------------------------------------------------------

models::ModelSpec default_wrapper(std::uint64_t seed) {
  models::LogisticParams p;
  p.max_iter = 30;
  p.tol = 1e-4;
  return {p, seed};
}

namespace {

std::vector<eval::Split> selection_splits(std::span<const int> y, int folds, std::uint64_t seed, int n_classes) {
  if (folds < 2) throw Error(ErrorKind::InvalidArgument, "forward selection needs at least two folds");
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (int label : y) {
    if (label < 0 || label >= n_classes) throw Error(ErrorKind::InvalidArgument, "label out of range");
    ++counts[static_cast<std::size_t>(label)];
  }
  for (int k = 0; k < n_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] < folds) {
      throw Error(ErrorKind::DegenerateClass, "class " + std::to_string(k) + " has " +
                                                  std::to_string(counts[static_cast<std::size_t>(k)]) +
                                                  " rows, so some fold would lack it");
    }
  }
  return eval::kfold_splits(y, folds, seed);
}

struct FoldData {
  std::vector<int> ytr, yte;
};

double cv_f1(const Matrix& x, std::span<const std::size_t> columns,
             const models::ModelSpec& spec, const std::vector<eval::Split>& splits,
             const std::vector<FoldData>& fold_labels, int n_classes) {
  const Matrix xc = x.select_cols(columns);
  double total = 0.0;
  for (std::size_t f = 0; f < splits.size(); ++f) {
    const auto m = models::fit(spec, xc.select_rows(splits[f].train), fold_labels[f].ytr, n_classes);
    const auto pred = models::predict(m, xc.select_rows(splits[f].test));
    total += eval::macro_f1(fold_labels[f].yte, pred, n_classes);
  }
  return total / static_cast<double>(splits.size());
}

std::vector<FoldData> fold_labels_of(std::span<const int> y, const std::vector<eval::Split>& splits) {
  std::vector<FoldData> out(splits.size());
  for (std::size_t f = 0; f < splits.size(); ++f) {
    for (std::size_t i : splits[f].train) out[f].ytr.push_back(y[i]);
    for (std::size_t i : splits[f].test) out[f].yte.push_back(y[i]);
  }
  return out;
}

}  // namespace

double subset_cv_f1(const Matrix& x, std::span<const int> y, std::span<const std::size_t> columns,
                    const models::ModelSpec& spec, int folds, std::uint64_t seed, int n_classes) {
  if (x.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "feature rows and labels differ in length");
  const auto splits = selection_splits(y, folds, seed, n_classes);
  return cv_f1(x, columns, spec, splits, fold_labels_of(y, splits), n_classes);
}

FeatureSubset forward_select(const Matrix& x, std::span<const int> y, std::span<const std::string> names,
                             const models::ModelSpec& wrapper, std::size_t k, int folds, std::uint64_t seed,
                             int n_classes) {
  if (x.rows() != y.size()) throw Error(ErrorKind::LengthMismatch, "feature rows and labels differ in length");
  if (!names.empty() && names.size() != x.cols()) {
    throw Error(ErrorKind::LengthMismatch, "feature names do not match the column count");
  }
  if (k == 0 || k > x.cols()) {
    throw Error(ErrorKind::InsufficientData, "cannot select " + std::to_string(k) + " of " +
                                                 std::to_string(x.cols()) + " columns");
  }
  const auto splits = selection_splits(y, folds, seed, n_classes);
  const auto labels = fold_labels_of(y, splits);

  FeatureSubset out;
  std::vector<bool> taken(x.cols(), false);
  std::vector<std::size_t> trial;
  for (std::size_t step = 0; step < k; ++step) {
    double best_score = -1.0;
    std::size_t best_col = x.cols();
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (taken[c]) continue;
      trial = out.indices;
      trial.push_back(c);
      const double s = cv_f1(x, trial, wrapper, splits, labels, n_classes);
      if (s > best_score) {  // strict: the lowest index wins ties
        best_score = s;
        best_col = c;
      }
    }
    taken[best_col] = true;
    out.indices.push_back(best_col);
    out.names.push_back(names.empty() ? "col" + std::to_string(best_col) : names[best_col]);
    out.trace.push_back(best_score);
  }
  return out;
}

std::string serialize_subset(const FeatureSubset& s) {
  std::string out = "index,name,cv_f1\n";
  for (std::size_t i = 0; i < s.indices.size(); ++i) {
    out += std::to_string(s.indices[i]) + "," + s.names[i] + "," +
           io::format_double(i < s.trace.size() ? s.trace[i] : 0.0) + "\n";
  }
  return out;
}

FeatureSubset parse_subset(std::string_view text) {
  const auto lines = io::split_lines(text);
  if (lines.empty() || io::trim(lines[0]) != "index,name,cv_f1") {
    throw Error(ErrorKind::MissingColumn, "subset manifest header must be index,name,cv_f1");
  }
  FeatureSubset s;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto fields = io::split_csv(lines[i]);
    const auto idx = fields.size() == 3 ? io::parse_int(fields[0]) : std::nullopt;
    const auto score = fields.size() == 3 ? io::parse_double(fields[2]) : std::nullopt;
    if (!idx || *idx < 0 || !score) {
      throw Error(ErrorKind::MalformedRow, "bad subset manifest line " + std::to_string(i + 1));
    }
    s.indices.push_back(static_cast<std::size_t>(*idx));
    s.names.emplace_back(io::trim(fields[1]));
    s.trace.push_back(*score);
  }
  return s;
}

// ---- autoencoder ----------------------------------------------------------------

namespace {

std::vector<int> layer_sizes_for(int input_width, const AutoencoderConfig& cfg) {
  if (cfg.latent < 1 || cfg.latent >= input_width) {
    throw Error(ErrorKind::InvalidArgument, "latent width must be between 1 and the input width");
  }
  std::vector<int> sizes{input_width};
  for (int h : cfg.hidden) sizes.push_back(h);
  sizes.push_back(cfg.latent);
  for (auto it = cfg.hidden.rbegin(); it != cfg.hidden.rend(); ++it) sizes.push_back(*it);
  sizes.push_back(input_width);
  return sizes;
}

// Activations after every layer; acts[0] is the input. The last layer is linear.
std::vector<Matrix> forward(const AutoencoderModel& m, const Matrix& x, std::size_t layers) {
  std::vector<Matrix> acts;
  acts.reserve(layers + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix out;
    dense::affine(acts.back(), m.weights[l], m.biases[l], out);
    if (l + 1 < m.weights.size()) {
      for (double& v : out.data()) v = std::tanh(v);
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

void check_input(const AutoencoderModel& m, const Matrix& x) {
  if (m.weights.empty() || x.cols() != m.weights.front().cols()) {
    throw Error(ErrorKind::DimensionMismatch, "input width differs from the autoencoder");
  }
}

// p -= step * g over every parameter.
void axpy(AutoencoderModel& p, const AutoencoderModel& g, double step) {
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    auto& w = p.weights[l].data();
    const auto& gw = g.weights[l].data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * gw[i];
    for (std::size_t i = 0; i < p.biases[l].size(); ++i) p.biases[l][i] -= step * g.biases[l][i];
  }
}

double grad_norm_sq(const AutoencoderModel& g) {
  double s = 0.0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (double v : g.weights[l].data()) s += v * v;
    for (double v : g.biases[l]) s += v * v;
  }
  return s;
}

}  // namespace

AutoencoderModel autoencoder_init(int input_width, const AutoencoderConfig& cfg) {
  AutoencoderModel m;
  m.config = cfg;
  m.layer_sizes = layer_sizes_for(input_width, cfg);
  Rng rng(derive_seed(cfg.seed, {0}));
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const auto fan_in = static_cast<std::size_t>(m.layer_sizes[l]);
    const auto fan_out = static_cast<std::size_t>(m.layer_sizes[l + 1]);
    const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    Matrix w(fan_out, fan_in);
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

double autoencoder_objective(const AutoencoderModel& m, const Matrix& x, AutoencoderModel* grad) {
  check_input(m, x);
  const std::size_t layers = m.weights.size();
  const auto acts = forward(m, x, layers);
  const Matrix& out = acts.back();
  const double scale = 1.0 / static_cast<double>(x.rows() * x.cols());
  double loss = 0.0;
  Matrix delta(out.rows(), out.cols());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    const double e = out.data()[i] - x.data()[i];
    loss += e * e;
    delta.data()[i] = 2.0 * e * scale;
  }
  loss *= scale;
  if (!grad) return loss;

  grad->layer_sizes = m.layer_sizes;
  grad->weights.resize(layers);
  grad->biases.resize(layers);
  for (std::size_t li = layers; li-- > 0;) {
    const Matrix& a_in = acts[li];
    const Matrix& w = m.weights[li];
    Matrix gw;
    std::vector<double> gb;
    dense::layer_grad(delta, a_in, gw, gb);
    if (li > 0) {
      Matrix prev = dense::back(delta, w);
      // a_in is a tanh output here: derivative 1 - a^2.
      for (std::size_t i = 0; i < prev.data().size(); ++i) {
        const double a = a_in.data()[i];
        prev.data()[i] *= 1.0 - a * a;
      }
      delta = std::move(prev);
    }
    grad->weights[li] = std::move(gw);
    grad->biases[li] = std::move(gb);
  }
  return loss;
}

AutoencoderModel autoencoder_train(const Matrix& x, const AutoencoderConfig& cfg) {
  if (x.rows() == 0) throw Error(ErrorKind::InsufficientData, "autoencoder needs at least one row");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0) || cfg.polish_fraction < 0.0 ||
      cfg.polish_fraction > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "invalid autoencoder training settings");
  }
  AutoencoderModel m = autoencoder_init(static_cast<int>(x.cols()), cfg);
  const int polish = cfg.polish_fraction > 0.0
                         ? std::max(1, static_cast<int>(std::lround(cfg.epochs * cfg.polish_fraction)))
                         : 0;
  const int sgd_epochs = cfg.epochs - polish;

  // Adam moments for the mini-batch phase.
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  AutoencoderModel mom = m, vel = m;
  for (auto* s : {&mom, &vel}) {
    for (auto& w : s->weights) std::fill(w.data().begin(), w.data().end(), 0.0);
    for (auto& b : s->biases) std::fill(b.begin(), b.end(), 0.0);
  }
  auto adam = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m1,
                  std::vector<double>& m2, double c1, double c2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * g[i];
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * g[i] * g[i];
      p[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
    }
  };

  Rng rng(derive_seed(cfg.seed, {1}));
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  AutoencoderModel grad;
  long long t = 0;
  auto diverged = [](double v) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteLoss, "autoencoder loss is not finite; lower the learning rate");
  };

  for (int epoch = 0; epoch < sgd_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < x.rows(); start += batch) {
      const std::size_t end = std::min(x.rows(), start + batch);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      diverged(autoencoder_objective(m, x.select_rows(rows), &grad));
      ++t;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
      for (std::size_t l = 0; l < m.weights.size(); ++l) {
        adam(m.weights[l].data(), grad.weights[l].data(), mom.weights[l].data(), vel.weights[l].data(), c1, c2);
        adam(m.biases[l], grad.biases[l], mom.biases[l], vel.biases[l], c1, c2);
      }
    }
    const double loss = autoencoder_objective(m, x, nullptr);
    diverged(loss);
    m.loss_curve.push_back(loss);
  }

  // Full-batch polish: Armijo backtracking never accepts a step that raises the loss.
  double loss = autoencoder_objective(m, x, &grad);
  diverged(loss);
  double step = 1.0;
  for (int epoch = 0; epoch < polish; ++epoch) {
    const double gsq = grad_norm_sq(grad);
    bool moved = false;
    for (int ls = 0; ls < 50 && gsq > 0.0; ++ls) {
      AutoencoderModel trial = m;
      axpy(trial, grad, step);
      const double candidate = autoencoder_objective(trial, x, nullptr);
      if (std::isfinite(candidate) && candidate <= loss - 1e-4 * step * gsq) {
        m.weights = std::move(trial.weights);
        m.biases = std::move(trial.biases);
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (moved) {
      loss = autoencoder_objective(m, x, &grad);
      step *= 2.0;
    }
    m.loss_curve.push_back(loss);
  }
  m.final_mse = loss;
  return m;
}

Matrix autoencoder_encode(const AutoencoderModel& m, const Matrix& x) {
  check_input(m, x);
  return forward(m, x, m.encoder_layers()).back();
}

Matrix autoencoder_reconstruct(const AutoencoderModel& m, const Matrix& x) {
  check_input(m, x);
  return forward(m, x, m.weights.size()).back();
}

std::string autoencoder_to_json(const AutoencoderModel& m) {
  using nlohmann::json;
  json layers = json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    layers.push_back({{"rows", m.weights[l].rows()},
                      {"cols", m.weights[l].cols()},
                      {"weights", m.weights[l].data()},
                      {"bias", m.biases[l]}});
  }
  json j;
  j["format_version"] = kAutoencoderFormatVersion;
  j["layer_sizes"] = m.layer_sizes;
  j["activation"] = "tanh";
  j["output_activation"] = "linear";
  j["layers"] = layers;
  j["config"] = {{"hidden", m.config.hidden},         {"latent", m.config.latent},
                 {"epochs", m.config.epochs},         {"learning_rate", m.config.learning_rate},
                 {"batch_size", m.config.batch_size}, {"seed", m.config.seed},
                 {"polish_fraction", m.config.polish_fraction}};
  j["loss_curve"] = m.loss_curve;
  j["final_mse"] = m.final_mse;
  return j.dump();
}

AutoencoderModel autoencoder_from_json(std::string_view text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != kAutoencoderFormatVersion) {
      throw Error(ErrorKind::InvalidArgument, "unsupported autoencoder format version");
    }
    AutoencoderModel m;
    m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    for (const auto& layer : j.at("layers")) {
      Matrix w(layer.at("rows").get<std::size_t>(), layer.at("cols").get<std::size_t>());
      w.data() = layer.at("weights").get<std::vector<double>>();
      if (w.data().size() != w.rows() * w.cols()) throw Error(ErrorKind::MalformedRow, "weight array has the wrong length");
      m.weights.push_back(std::move(w));
      m.biases.push_back(layer.at("bias").get<std::vector<double>>());
    }
    const auto& c = j.at("config");
    m.config.hidden = c.at("hidden").get<std::vector<int>>();
    m.config.latent = c.at("latent").get<int>();
    m.config.epochs = c.at("epochs").get<int>();
    m.config.learning_rate = c.at("learning_rate").get<double>();
    m.config.batch_size = c.at("batch_size").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.polish_fraction = c.at("polish_fraction").get<double>();
    m.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    m.final_mse = j.at("final_mse").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedRow, std::string("bad autoencoder file: ") + e.what());
  }
}

}  // namespace chromaeeg::reduce
