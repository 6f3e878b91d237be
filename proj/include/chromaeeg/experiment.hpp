#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chromaeeg/features.hpp"
#include "chromaeeg/ingest.hpp"
#include "chromaeeg/metrics.hpp"
#include "chromaeeg/models.hpp"
#include "chromaeeg/reduce.hpp"

namespace chromaeeg::experiment {

enum class Regime { Intra, Inter };
enum class FeatureSet { All, Forward10, Ae10 };
enum class Metric { Accuracy, Auc, Mcc };

inline constexpr std::array<Regime, 2> kRegimes{Regime::Intra, Regime::Inter};
inline constexpr std::array<FeatureSet, 3> kFeatureSets{FeatureSet::All, FeatureSet::Forward10, FeatureSet::Ae10};
inline constexpr std::array<Metric, 3> kMetrics{Metric::Accuracy, Metric::Auc, Metric::Mcc};

std::string_view regime_tag(Regime r);          // intra, inter
std::string_view feature_set_tag(FeatureSet f);  // all, forward10, ae10
std::string_view metric_tag(Metric m);           // accuracy, auc, mcc
Regime parse_regime(std::string_view s);
FeatureSet parse_feature_set(std::string_view s);

/// Which classifier scores candidate columns during forward selection.
enum class SelectionWrapper { Logistic, SameFamily };

struct ExperimentConfig {
  std::vector<int> windows_ms{100, 200, 500, 1000};
  std::vector<FeatureSet> feature_sets{kFeatureSets.begin(), kFeatureSets.end()};
  std::vector<Regime> regimes{kRegimes.begin(), kRegimes.end()};
  std::vector<models::Family> families{models::kReportOrder.begin(), models::kReportOrder.end()};
  std::uint64_t seed = 0;
  int folds = 5;
  /// Intra-subject folds follow trials instead of stratified pooled windows.
  bool group_by_trial = false;

  /// Without tuning every family uses the first point of its grid.
  bool tune = false;
  models::HyperGrid grid = models::HyperGrid::single_point();
  int tune_folds = 3;

  std::size_t subset_size = reduce::kDefaultSubsetSize;
  int selection_folds = 3;
  SelectionWrapper selection_wrapper = SelectionWrapper::Logistic;
  reduce::AutoencoderConfig autoencoder{};

  /// Worker threads; results do not depend on it.
  int jobs = 1;
};

using Triple = std::array<double, 3>;  // indexed by Metric

struct SubjectScores {
  int subject = 0;
  std::vector<Triple> folds;
  std::array<eval::MeanStd, 3> summary{};
};

struct CellKey {
  int window_ms = 0;
  FeatureSet feature_set = FeatureSet::All;
  Regime regime = Regime::Intra;
  models::Family family = models::Family::KNN;
  auto operator<=>(const CellKey&) const = default;
};

struct CellResult {
  CellKey key;
  /// Intra: one entry per subject with its CV folds. Inter: one entry per
  /// held-out subject holding a single fold.
  std::vector<SubjectScores> subjects;
  /// Intra: mean of subject means (std = mean of subject stds).
  /// Inter: mean and std over held-out subjects.
  std::array<eval::MeanStd, 3> average{};
  /// Intra only: the best subject for each metric separately.
  std::array<eval::MeanStd, 3> best{};
  std::array<int, 3> best_subject{};
  std::size_t fold_count = 0;
  /// Hyperparameters used per split (differs between splits when tuning).
  std::vector<std::string> specs;
  /// Out-of-fold labels and scores per subject, intra only (for ROC curves).
  std::map<int, std::pair<std::vector<int>, Matrix>> out_of_fold;
};

struct Failure {
  CellKey key;
  std::string kind;
  std::string message;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;  // successful cells in canonical order
  std::vector<Failure> failures;
};

/// Feature matrices keyed by window length in ms.
using Dataset = std::map<int, features::FeatureMatrix>;

/// Runs every (window, feature set, regime, family) cell. Each split fits the
/// z-score (and the reductions) on its training rows only. A cell whose split
/// throws is recorded as a failure; the other cells still run.
ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& config);

// ---- reporting ----------------------------------------------------------------

/// "0.625 (0.018)"
std::string format_cell(const eval::MeanStd& v);

struct BestCell {
  CellKey key;
  double accuracy = 0.0;
};
/// Highest average accuracy over all cells; ties keep the earlier cell.
BestCell best_cell(const ExperimentResult& r);

/// One table for a window, metric and feature set: rows avg_subject,
/// best_subject (intra) and inter_subject, one column per family.
std::string render_table(const ExperimentResult& r, int window_ms, Metric metric, FeatureSet fs);
std::string render_summary(const ExperimentResult& r);

/// Writes cells.csv, per-window tables, window_sweep.csv, roc/, summary.txt,
/// failures.json and manifest.json. Throws EmptyReport without cells.
void write_report(const ExperimentResult& r, const std::filesystem::path& dir);

/// Rebuilds the summary rows of every cell from a cells.csv written by
/// write_report (per-fold detail is not stored there).
ExperimentResult parse_cells_csv(std::string_view text);

// ---- datasets -------------------------------------------------------------------

struct SyntheticDatasetConfig {
  int subjects = 8;
  int trials = 1;
  std::uint64_t seed = 0;
  double noise_sigma = 6.0;
  /// Per-subject multiplicative jitter on every class gain.
  double subject_jitter = 0.15;
  StimulusProtocol protocol{};
  std::map<Color, BandGains> gains = default_class_gains();

  static std::map<Color, BandGains> default_class_gains();
};

struct SyntheticTrial {
  int subject = 0;
  int trial = 0;
  SyntheticRecording data;
};

std::vector<SyntheticTrial> generate_synthetic_dataset(const SyntheticDatasetConfig& cfg);

/// Epochs of every trial, in subject then trial order.
std::vector<EpochedTrial> epoch_synthetic(const std::vector<SyntheticTrial>& trials, const StimulusProtocol& protocol);

/// Writes recordings, schedule sidecars and an index `dataset.csv`
/// (subject,trial,recording,schedule) into `dir`.
void write_synthetic_dataset(const std::vector<SyntheticTrial>& trials, const std::filesystem::path& dir);

/// Reads `dataset.csv` and epochs every listed recording at its first jaw clench.
std::vector<EpochedTrial> load_dataset_epochs(const std::filesystem::path& dir, const StimulusProtocol& protocol = {});

inline std::string features_file_name(int window_ms) { return "features_" + std::to_string(window_ms) + "ms.csv"; }

/// Loads every features_<w>ms.csv present in `dir` for the requested windows.
Dataset load_feature_dataset(const std::filesystem::path& dir, const std::vector<int>& windows_ms);

}  // namespace chromaeeg::experiment
