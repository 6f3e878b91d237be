#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "chromaeeg/error.hpp"
#include "chromaeeg/experiment.hpp"
#include "chromaeeg/rng.hpp"
#include "chromaeeg/text_io.hpp"
#include "oracles.hpp"

using namespace chromaeeg;
using namespace chromaeeg::experiment;
namespace fs = std::filesystem;

namespace {

Dataset small_dataset(const std::vector<int>& windows, int subjects = 3, int reps = 3) {
  SyntheticDatasetConfig cfg;
  cfg.subjects = subjects;
  cfg.seed = 5;
  cfg.protocol.repetitions_per_color = reps;
  cfg.protocol.trial_duration = reps * 12.0;
  const auto epochs = epoch_synthetic(generate_synthetic_dataset(cfg), cfg.protocol);
  Dataset d;
  for (int w : windows) {
    features::ExtractConfig ec;
    ec.window.length_ms = w;
    d[w] = features::assemble(epochs, ec);
  }
  return d;
}

ExperimentConfig quick_config(std::vector<int> windows) {
  ExperimentConfig c;
  c.windows_ms = std::move(windows);
  c.families = {models::Family::KNN, models::Family::LogisticRegression};
  c.autoencoder.epochs = 10;
  c.selection_folds = 2;
  return c;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("tags parse back") {
  for (auto r : kRegimes) CHECK(parse_regime(regime_tag(r)) == r);
  for (auto f : kFeatureSets) CHECK(parse_feature_set(feature_set_tag(f)) == f);
  CHECK(metric_tag(Metric::Mcc) == "mcc");
  CHECK_THROWS_AS(parse_regime("cross"), Error);
}

TEST_CASE("cell formatting and best cell") {
  CHECK(format_cell({0.625, 0.018}) == "0.625 (0.018)");
  CHECK(format_cell({0.80649, 0.0}) == "0.806 (0.000)");
  ExperimentResult r;
  r.config.regimes = {Regime::Inter};
  r.config.families = {models::Family::RandomForest};
  r.config.windows_ms = {200};
  r.config.feature_sets = {FeatureSet::All};
  CellResult c;
  c.key = {200, FeatureSet::All, Regime::Inter, models::Family::RandomForest};
  c.average[0] = {0.581, 0.05};
  r.cells.push_back(c);
  const auto table = render_table(r, 200, Metric::Accuracy, FeatureSet::All);
  CHECK(table == "metric_row,rf\ninter_subject,0.581 (0.050)\n");

  CellResult d = c;
  d.key.window_ms = 500;
  d.average[0] = {0.7, 0.1};
  CellResult e = c;
  e.key.window_ms = 1000;
  e.average[0] = {0.7, 0.0};
  r.cells.push_back(d);
  r.cells.push_back(e);
  const auto best = best_cell(r);
  CHECK(best.key.window_ms == 500);  // first of the tied maxima
  CHECK(best.accuracy == 0.7);

  ExperimentResult empty;
  CHECK_THROWS_AS(write_report(empty, oracle::scratch_dir("empty")), Error);
}

TEST_CASE("experiment covers the requested grid and is independent of the job count") {
  const auto data = small_dataset({500, 1000});
  auto cfg = quick_config({500, 1000});
  const auto r1 = run_experiment(data, cfg);
  CHECK(r1.failures.empty());
  REQUIRE(r1.cells.size() == 2 * 3 * 2 * 2);
  // Canonical order: window, feature set, regime, family.
  for (std::size_t i = 1; i < r1.cells.size(); ++i) {
    const auto& a = r1.cells[i - 1].key;
    const auto& b = r1.cells[i].key;
    CHECK(std::tie(a.window_ms, a.feature_set, a.regime) <= std::tie(b.window_ms, b.feature_set, b.regime));
  }
  for (const auto& c : r1.cells) {
    if (c.key.regime == Regime::Intra) {
      CHECK(c.subjects.size() == 3);
      CHECK(c.fold_count == 15);
      for (std::size_t m = 0; m < 3; ++m) CHECK(c.best[m].mean >= c.average[m].mean - 1e-12);
    } else {
      CHECK(c.subjects.size() == 3);
      CHECK(c.fold_count == 3);
    }
  }

  cfg.jobs = 3;
  const auto r3 = run_experiment(data, cfg);
  const auto d1 = oracle::scratch_dir("det1"), d3 = oracle::scratch_dir("det3");
  write_report(r1, d1);
  write_report(r3, d3);
  const auto t1 = read_tree(d1), t3 = read_tree(d3);
  CHECK(t1.size() > 20);
  CHECK(t1 == t3);
  CHECK(t1.count("cells.csv") == 1);
  CHECK(t1.count("manifest.json") == 1);
  CHECK(t1.count("w500/table_accuracy_all.csv") == 1);
  CHECK(t1.count("window_sweep.csv") == 1);

  // cells.csv alone reproduces the tables.
  const auto parsed = parse_cells_csv(t1.at("cells.csv"));
  CHECK(parsed.cells.size() == r1.cells.size());
  CHECK(render_table(parsed, 1000, Metric::Auc, FeatureSet::Ae10) ==
        render_table(r1, 1000, Metric::Auc, FeatureSet::Ae10));
  CHECK(render_summary(parsed) == render_summary(r1));
}

TEST_CASE("a failing cell is recorded while the others complete") {
  auto data = small_dataset({1000}, 3, 3);
  // Give subject 3 a single row of class 0 so its 5-fold split cannot be built.
  auto& fm = data[1000];
  std::vector<std::size_t> keep;
  bool kept_one = false;
  for (std::size_t i = 0; i < fm.rows(); ++i) {
    if (fm.subjects[i] == 3 && fm.labels[i] == 0) {
      if (kept_one) continue;
      kept_one = true;
    }
    keep.push_back(i);
  }
  fm = fm.select_rows(keep);
  auto cfg = quick_config({1000});
  cfg.feature_sets = {FeatureSet::All};
  cfg.families = {models::Family::KNN};
  const auto r = run_experiment(data, cfg);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].key.regime == Regime::Intra);
  CHECK(r.failures[0].kind == "ClassTooSmall");
  REQUIRE(r.cells.size() == 1);
  CHECK(r.cells[0].key.regime == Regime::Inter);
  const auto dir = oracle::scratch_dir("fail");
  write_report(r, dir);
  CHECK(io::read_file(dir / "failures.json").find("ClassTooSmall") != std::string::npos);
}

TEST_CASE("forward selection keeps the informative columns that the autoencoder mixes away") {
  // 10 informative columns at scattered positions, 76 noise columns, two subjects.
  Rng rng(17);
  features::FeatureMatrix fm;
  fm.names = features::feature_names();
  const std::vector<std::size_t> informative{3, 11, 19, 27, 35, 43, 51, 59, 67, 75};
  for (int s = 1; s <= 2; ++s) {
    for (int i = 0; i < 90; ++i) {
      features::FeatureVector v;
      v.label = i % 3;
      v.subject_id = s;
      v.trial_id = 1;
      v.window_index = i;
      for (double& x : v.values) x = 3.0 * rng.normal();
      for (std::size_t k = 0; k < informative.size(); ++k) {
        v.values[informative[k]] = rng.normal() + (static_cast<int>(k % 3) == v.label ? 1.2 : 0.0);
      }
      fm.append(v);
    }
  }
  Dataset data{{200, fm}};
  ExperimentConfig cfg;
  cfg.windows_ms = {200};
  cfg.regimes = {Regime::Intra};
  cfg.feature_sets = {FeatureSet::Forward10, FeatureSet::Ae10};
  cfg.families = {models::Family::RandomForest};
  cfg.autoencoder.epochs = 40;
  const auto r = run_experiment(data, cfg);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.cells[0].key.feature_set == FeatureSet::Forward10);
  CHECK(r.cells[0].average[0].mean >= r.cells[1].average[0].mean);
}

TEST_CASE("synthetic dataset files load back to the same epochs") {
  SyntheticDatasetConfig cfg;
  cfg.subjects = 2;
  cfg.trials = 2;
  cfg.protocol.repetitions_per_color = 2;
  cfg.protocol.trial_duration = 24.0;
  const auto trials = generate_synthetic_dataset(cfg);
  CHECK(trials.size() == 4);
  const auto dir = oracle::scratch_dir("synth");
  write_synthetic_dataset(trials, dir);
  const auto loaded = load_dataset_epochs(dir);
  const auto direct = epoch_synthetic(trials, cfg.protocol);
  REQUIRE(loaded.size() == direct.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].subject_id == direct[i].subject_id);
    CHECK(loaded[i].trial_id == direct[i].trial_id);
    CHECK(loaded[i].label == direct[i].label);
    // Text storage rounds to the shortest exact representation.
    CHECK(loaded[i].channels == direct[i].channels);
  }
  CHECK_THROWS_AS(load_dataset_epochs(dir / "missing"), Error);
}
