#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "chromaeeg/error.hpp"
#include "chromaeeg/experiment.hpp"
#include "chromaeeg/reduce.hpp"
#include "chromaeeg/rng.hpp"

using namespace chromaeeg;
using namespace chromaeeg::reduce;

namespace {

struct Fixture {
  Matrix x;
  std::vector<int> y;
  std::vector<std::string> names;
};

// Column `signal` carries the class; every other column is noise.
Fixture one_signal(std::size_t rows, std::size_t cols, std::size_t signal, std::uint64_t seed) {
  Rng rng(seed);
  Fixture f{Matrix(rows, cols), {}, {}};
  for (std::size_t c = 0; c < cols; ++c) f.names.push_back("c" + std::to_string(c));
  for (std::size_t r = 0; r < rows; ++r) {
    const int label = static_cast<int>(r % 3);
    f.y.push_back(label);
    for (std::size_t c = 0; c < cols; ++c) f.x(r, c) = rng.normal();
    f.x(r, signal) = 10.0 * label + 0.1 * rng.normal();
  }
  return f;
}

models::ModelSpec knn_wrapper() { return {models::KnnParams{3}, 0}; }

features::FeatureMatrix synthetic_features(int subjects, int reps, int window_ms, std::uint64_t seed) {
  experiment::SyntheticDatasetConfig cfg;
  cfg.subjects = subjects;
  cfg.seed = seed;
  cfg.protocol.repetitions_per_color = reps;
  cfg.protocol.trial_duration = reps * 12.0;
  const auto epochs = experiment::epoch_synthetic(experiment::generate_synthetic_dataset(cfg), cfg.protocol);
  features::ExtractConfig ec;
  ec.window.length_ms = window_ms;
  return features::assemble(epochs, ec);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST_CASE("the single informative column is chosen first, with the maximal step-1 score") {
  const auto f = one_signal(45, 8, 0, 1);
  const auto s = forward_select(f.x, f.y, f.names, default_wrapper(), 3, 3, 7);
  REQUIRE(s.indices.size() == 3);
  CHECK(s.indices[0] == 0);
  CHECK(s.names[0] == "c0");
  double best = -1.0;
  for (std::size_t c = 0; c < 8; ++c) {
    const std::vector<std::size_t> cols{c};
    best = std::max(best, subset_cv_f1(f.x, f.y, cols, default_wrapper(), 3, 7));
  }
  CHECK(s.trace[0] == best);
}

TEST_CASE("each trace entry is the maximum over that step's candidates") {
  const auto f = one_signal(30, 6, 4, 2);
  const auto s = forward_select(f.x, f.y, f.names, knn_wrapper(), 4, 3, 5);
  std::vector<std::size_t> chosen;
  for (std::size_t step = 0; step < 4; ++step) {
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < 6; ++c) {
      if (std::find(chosen.begin(), chosen.end(), c) != chosen.end()) continue;
      auto cols = chosen;
      cols.push_back(c);
      const double v = subset_cv_f1(f.x, f.y, cols, knn_wrapper(), 3, 5);
      if (v > best) {
        best = v;
        arg = c;
      }
    }
    CHECK(s.trace[step] == best);
    CHECK(s.indices[step] == arg);
    chosen.push_back(arg);
  }
}

TEST_CASE("subset sizes, exhaustion and determinism") {
  const auto f = one_signal(24, 86, 50, 3);
  const auto ten = forward_select(f.x, f.y, f.names, knn_wrapper(), 10, 2, 1);
  CHECK(ten.indices.size() == 10);
  CHECK(std::set<std::size_t>(ten.indices.begin(), ten.indices.end()).size() == 10);
  const auto again = forward_select(f.x, f.y, f.names, knn_wrapper(), 10, 2, 1);
  CHECK(again.indices == ten.indices);
  CHECK(again.trace == ten.trace);

  const auto small = one_signal(12, 9, 2, 4);
  const auto all = forward_select(small.x, small.y, small.names, knn_wrapper(), 9, 2, 0);
  auto sorted = all.indices;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 9; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("forward selection contract") {
  auto f = one_signal(12, 4, 0, 5);
  CHECK_THROWS_AS(forward_select(f.x, f.y, f.names, knn_wrapper(), 5, 2, 0), Error);
  CHECK_THROWS_AS(forward_select(f.x, f.y, f.names, knn_wrapper(), 2, 1, 0), Error);
  f.y[0] = 1;
  f.y[3] = 1;
  f.y[6] = 1;  // class 0 now has 1 row
  try {
    forward_select(f.x, f.y, f.names, knn_wrapper(), 2, 3, 0);
    FAIL("expected DegenerateClass");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateClass);
  }
}

TEST_CASE("subset manifest round trip") {
  FeatureSubset s;
  s.indices = {4, 0, 17};
  s.names = {"var_alpha_TP9", "mean_alpha_TP9", "hemdiff_beta"};
  s.trace = {0.5, 2.0 / 3.0, 0.9};
  const auto back = parse_subset(serialize_subset(s));
  CHECK(back.indices == s.indices);
  CHECK(back.names == s.names);
  CHECK(back.trace == s.trace);
}

TEST_CASE("autoencoder gradient matches central differences on a 5-sample batch") {
  Rng rng(6);
  Matrix x(5, 12);
  for (double& v : x.data()) v = rng.normal();
  AutoencoderConfig cfg;
  cfg.hidden = {6};
  cfg.latent = 3;
  auto m = autoencoder_init(12, cfg);
  for (auto& b : m.biases) {
    for (double& v : b) v = 0.1 * rng.normal();
  }
  AutoencoderModel g;
  autoencoder_objective(m, x, &g);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    for (std::size_t i = 0; i < m.weights[l].data().size(); ++i) {
      auto a = m, b = m;
      a.weights[l].data()[i] += h;
      b.weights[l].data()[i] -= h;
      const double num = (autoencoder_objective(a, x, nullptr) - autoencoder_objective(b, x, nullptr)) / (2 * h);
      worst = std::max(worst, rel_err(g.weights[l].data()[i], num));
    }
    for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
      auto a = m, b = m;
      a.biases[l][i] += h;
      b.biases[l][i] -= h;
      const double num = (autoencoder_objective(a, x, nullptr) - autoencoder_objective(b, x, nullptr)) / (2 * h);
      worst = std::max(worst, rel_err(g.biases[l][i], num));
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("autoencoder on synthetic features beats the mean predictor") {
  const auto fm = synthetic_features(2, 4, 500, 3).normalized();
  AutoencoderConfig cfg;
  cfg.epochs = 60;
  const auto m = autoencoder_train(fm.values, cfg);
  CHECK(m.layer_sizes == std::vector<int>{86, 32, 10, 32, 86});
  REQUIRE(m.loss_curve.size() == 60);
  for (double v : m.loss_curve) CHECK(std::isfinite(v));
  CHECK(m.loss_curve.back() < m.loss_curve.front());
  CHECK(m.final_mse < 1.0);
  // Final 10 % of epochs never increase the loss.
  for (std::size_t i = 54; i < 60; ++i) CHECK(m.loss_curve[i] <= m.loss_curve[i - 1]);

  const auto z = autoencoder_encode(m, fm.values);
  CHECK(z.cols() == 10);
  CHECK(z.rows() == fm.rows());
  CHECK(autoencoder_encode(m, fm.values) == z);
  CHECK(autoencoder_train(fm.values, cfg).weights == m.weights);
  CHECK_THROWS_AS(autoencoder_encode(m, Matrix(3, 85)), Error);

  const auto back = autoencoder_from_json(autoencoder_to_json(m));
  CHECK(autoencoder_encode(back, fm.values) == z);
  CHECK(back.final_mse == m.final_mse);
}

TEST_CASE("zero-weight encoder maps every row to the same code") {
  AutoencoderConfig cfg;
  auto m = autoencoder_init(86, cfg);
  for (auto& w : m.weights) std::fill(w.data().begin(), w.data().end(), 0.0);
  for (auto& b : m.biases) {
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = 0.01 * static_cast<double>(i);
  }
  Rng rng(1);
  Matrix x(4, 86);
  for (double& v : x.data()) v = rng.normal();
  const auto z = autoencoder_encode(m, x);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 10; ++c) CHECK(z(r, c) == std::tanh(0.01 * static_cast<double>(c)));
  }
}

TEST_CASE("divergent training reports NonFiniteLoss") {
  Rng rng(2);
  Matrix x(40, 8);
  for (double& v : x.data()) v = rng.normal() * 1e200;
  AutoencoderConfig cfg;
  cfg.hidden = {4};
  cfg.latent = 2;
  cfg.epochs = 5;
  try {
    autoencoder_train(x, cfg);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonFiniteLoss);
  }
}
