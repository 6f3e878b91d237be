#include "chromaeeg/cli.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chromaeeg/error.hpp"
#include "chromaeeg/experiment.hpp"
#include "chromaeeg/features.hpp"
#include "chromaeeg/ingest.hpp"
#include "chromaeeg/models.hpp"
#include "chromaeeg/reduce.hpp"
#include "chromaeeg/text_io.hpp"

#ifndef CHROMAEEG_VERSION
#define CHROMAEEG_VERSION "dev"
#endif

namespace chromaeeg {

namespace fs = std::filesystem;
using experiment::FeatureSet;
using experiment::Regime;

namespace {

const std::vector<int> kWindows{features::kSupportedWindowsMs.begin(), features::kSupportedWindowsMs.end()};
const std::vector<std::string> kFamilyTags{"knn", "svm", "lr", "rf", "mlp", "gb"};

// Where a failing command leaves failure.json.
struct FailureSink {
  fs::path dir = ".";
};

std::string read(const fs::path& p) {
  if (!fs::exists(p)) throw Error(ErrorKind::Io, "no such file: " + p.string());
  return io::read_file(p);
}

models::HyperGrid grid_for(const std::string& tag, std::optional<int> mlp_epochs) {
  auto grid = tag == "single" ? models::HyperGrid::single_point() : models::HyperGrid::full();
  if (mlp_epochs) {
    for (auto& p : grid.mlp) p.epochs = *mlp_epochs;
  }
  return grid;
}

std::vector<EpochedTrial> epochs_from_dir(const fs::path& dir) {
  if (fs::exists(dir / "epochs.csv")) return parse_epochs(io::read_file(dir / "epochs.csv"));
  return experiment::load_dataset_epochs(dir);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"EEG colour-response pipeline: ingest, features, reduction, models, evaluation", "chromaeeg"};
  app.set_version_flag("--version", std::string("chromaeeg ") + CHROMAEEG_VERSION);
  app.set_config("--config", "", "Read options from a key=value file; command-line flags take precedence");
  app.require_subcommand(1);
  FailureSink sink;
  std::function<void()> action;

  // ---- synth ---------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic dataset (recordings, schedules, dataset.csv)");
  experiment::SyntheticDatasetConfig synth_cfg;
  std::string synth_out;
  int reps = synth_cfg.protocol.repetitions_per_color;
  synth->add_option("--seed", synth_cfg.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--subjects", synth_cfg.subjects, "Number of subjects")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--trials", synth_cfg.trials, "Trials per subject")->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--noise", synth_cfg.noise_sigma, "White noise standard deviation (uV)")->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--reps", reps, "Presentations per colour per trial")->capture_default_str()->check(CLI::PositiveNumber);
  synth->callback([&] {
    action = [&] {
      sink.dir = synth_out;
      auto& p = synth_cfg.protocol;
      p.repetitions_per_color = reps;
      p.trial_duration = reps * static_cast<double>(p.colors.size()) * (p.stimulus_duration + p.baseline_duration);
      const auto trials = experiment::generate_synthetic_dataset(synth_cfg);
      experiment::write_synthetic_dataset(trials, synth_out);
      out << "wrote " << trials.size() << " recordings to " << synth_out << "\n";
    };
  });

  // ---- ingest --------------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Epoch every recording listed in <in>/dataset.csv");
  std::string ingest_in, ingest_out;
  ingest->add_option("--in", ingest_in, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  ingest->add_option("--out", ingest_out, "Epochs file (default <in>/epochs.csv)");
  ingest->callback([&] {
    action = [&] {
      sink.dir = ingest_in;
      const auto epochs = experiment::load_dataset_epochs(ingest_in);
      const fs::path path = ingest_out.empty() ? fs::path(ingest_in) / "epochs.csv" : fs::path(ingest_out);
      io::write_file(path, serialize_epochs(epochs));
      out << "wrote " << epochs.size() << " epochs to " << path.string() << "\n";
    };
  });

  // ---- extract -------------------------------------------------------------------
  auto* extract = app.add_subcommand("extract", "Compute the 86 window features");
  std::string extract_in, extract_out;
  int extract_window = 200;
  std::string threshold = "auto";
  double cycles = dsp::kDefaultCycles;
  extract->add_option("--in", extract_in, "Dataset directory (epochs.csv or dataset.csv)")->required()->check(CLI::ExistingDirectory);
  extract->add_option("--window", extract_window, "Window length in ms")->capture_default_str()->check(CLI::IsMember(kWindows));
  extract->add_option("--artifact-threshold,--threshold", threshold, "Artifact variance threshold in uV^2, or auto (5 x median window variance)")
      ->capture_default_str()
      ->check(CLI::Validator(
          [](std::string& v) -> std::string {
            if (v == "auto") return {};
            const auto d = io::parse_double(v);
            return d && *d > 0.0 ? std::string{} : "must be a positive number or auto";
          },
          "FLOAT|auto"));
  extract->add_option("--cycles", cycles, "Morlet wavelet cycles")->capture_default_str()->check(CLI::PositiveNumber);
  extract->add_option("--out", extract_out, "Feature file (default <in>/features_<w>ms.csv)");
  extract->callback([&] {
    action = [&] {
      sink.dir = extract_in;
      features::ExtractConfig cfg;
      cfg.window.length_ms = extract_window;
      if (threshold != "auto") cfg.artifact_threshold = io::parse_double(threshold);
      cfg.cwt.n_cycles = cycles;
      const auto epochs = epochs_from_dir(extract_in);
      features::ExtractStats stats;
      const auto fm = features::assemble(epochs, cfg, &stats);
      const fs::path path =
          extract_out.empty() ? fs::path(extract_in) / experiment::features_file_name(extract_window) : fs::path(extract_out);
      io::write_file(path, features::serialize_feature_matrix(fm));
      out << "epochs=" << stats.epochs << " windows=" << stats.windows << " degenerate_dropped=" << stats.degenerate_windows
          << " short_epochs=" << stats.short_epochs << "\n";
      out << "wrote " << fm.rows() << " rows to " << path.string() << "\n";
    };
  });

  // ---- reduce --------------------------------------------------------------------
  auto* reduce_cmd = app.add_subcommand("reduce", "Forward selection or autoencoder on a feature file");
  std::string reduce_features, reduce_method, reduce_out, reduce_wrapper = "lr";
  std::size_t reduce_k = reduce::kDefaultSubsetSize;
  int reduce_folds = 3;
  std::uint64_t reduce_seed = 0;
  reduce::AutoencoderConfig ae_cfg;
  reduce_cmd->add_option("--features", reduce_features, "Feature CSV")->required()->check(CLI::ExistingFile);
  reduce_cmd->add_option("--method", reduce_method, "forward or autoencoder")->required()->check(CLI::IsMember({"forward", "autoencoder"}));
  reduce_cmd->add_option("--out", reduce_out, "Subset manifest or autoencoder JSON")->required();
  reduce_cmd->add_option("--k", reduce_k, "Columns to select")->capture_default_str()->check(CLI::PositiveNumber);
  reduce_cmd->add_option("--folds", reduce_folds, "Selection CV folds")->capture_default_str()->check(CLI::Range(2, 100));
  reduce_cmd->add_option("--wrapper", reduce_wrapper, "Selection classifier")->capture_default_str()->check(CLI::IsMember(kFamilyTags));
  reduce_cmd->add_option("--seed", reduce_seed, "Random seed")->capture_default_str();
  reduce_cmd->add_option("--epochs", ae_cfg.epochs, "Autoencoder epochs")->capture_default_str()->check(CLI::PositiveNumber);
  reduce_cmd->add_option("--lr", ae_cfg.learning_rate, "Autoencoder learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  reduce_cmd->callback([&] {
    action = [&] {
      sink.dir = fs::path(reduce_out).parent_path();
      const auto fm = features::parse_feature_matrix(read(reduce_features)).normalized();
      if (reduce_method == "forward") {
        auto wrapper = reduce_wrapper == "lr" ? reduce::default_wrapper(reduce_seed)
                                              : models::ModelSpec::defaults(models::parse_family(reduce_wrapper), reduce_seed);
        const auto subset = reduce::forward_select(fm.values, fm.labels, fm.names, wrapper, reduce_k, reduce_folds, reduce_seed);
        io::write_file(reduce_out, reduce::serialize_subset(subset));
        for (std::size_t i = 0; i < subset.names.size(); ++i) {
          out << i + 1 << " " << subset.names[i] << " " << io::format_fixed(subset.trace[i], 4) << "\n";
        }
      } else {
        ae_cfg.seed = reduce_seed;
        const auto ae = reduce::autoencoder_train(fm.values, ae_cfg);
        io::write_file(reduce_out, reduce::autoencoder_to_json(ae));
        out << "final reconstruction mse " << io::format_fixed(ae.final_mse, 6) << "\n";
      }
    };
  });

  // ---- train ---------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Fit one model family (with grid search) on a feature file");
  std::string train_family, train_grid = "default", train_features, train_out;
  std::uint64_t train_seed = 0;
  int train_folds = 5;
  std::optional<int> train_mlp_epochs;
  train->add_option("--family", train_family, "Model family")->required()->check(CLI::IsMember(kFamilyTags));
  train->add_option("--grid", train_grid, "default (full grid) or single")->capture_default_str()->check(CLI::IsMember({"default", "single"}));
  train->add_option("--features", train_features, "Feature CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Model JSON")->required();
  train->add_option("--seed", train_seed, "Random seed")->capture_default_str();
  train->add_option("--folds", train_folds, "Grid search folds")->capture_default_str()->check(CLI::Range(2, 100));
  train->add_option("--mlp-epochs", train_mlp_epochs, "Override MLP epochs")->check(CLI::PositiveNumber);
  train->callback([&] {
    action = [&] {
      sink.dir = fs::path(train_out).parent_path();
      const auto fm = features::parse_feature_matrix(read(train_features)).normalized();
      const auto family = models::parse_family(train_family);
      const auto grid = grid_for(train_grid, train_mlp_epochs);
      auto spec = grid.points(family, train_seed).front();
      if (grid.points(family, train_seed).size() > 1) {
        const auto result = models::grid_search(family, grid, fm.values, fm.labels, train_folds, train_seed);
        for (const auto& row : result.table) {
          out << row.spec.describe() << " " << io::format_fixed(row.mean_accuracy, 4) << "\n";
        }
        spec = result.best;
      }
      auto model = models::fit(spec, fm.values, fm.labels);
      model.feature_names = fm.names;
      model.normalization_id = "zscore-fitted-on-training-file";
      io::write_file(train_out, models::model_to_json(model));
      out << "selected " << spec.describe() << "\n";
    };
  });

  // ---- evaluate ------------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "Cross-validate families over windows, feature sets and regimes");
  std::string eval_in = ".", eval_out, eval_grid = "single", eval_wrapper = "lr";
  std::vector<std::string> eval_families, eval_feature_sets, eval_regimes;
  std::vector<int> eval_windows;
  experiment::ExperimentConfig eval_cfg;
  eval_cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::optional<int> eval_mlp_epochs;
  evaluate->add_option("--in", eval_in, "Directory with features_<w>ms.csv files")->capture_default_str()->check(CLI::ExistingDirectory);
  evaluate->add_option("--out", eval_out, "Report directory (default <in>/report)");
  evaluate->add_option("--family", eval_families, "Families (default all)")->delimiter(',')->check(CLI::IsMember(kFamilyTags));
  evaluate->add_option("--window", eval_windows, "Windows in ms (default: every feature file present)")->delimiter(',')->check(CLI::IsMember(kWindows));
  evaluate->add_option("--feature-set", eval_feature_sets, "all, forward10, ae10 (default all three)")->delimiter(',')->check(CLI::IsMember({"all", "forward10", "ae10"}));
  evaluate->add_option("--regime", eval_regimes, "intra, inter (default both)")->delimiter(',')->check(CLI::IsMember({"intra", "inter"}));
  evaluate->add_option("--seed", eval_cfg.seed, "Random seed")->capture_default_str();
  evaluate->add_option("--folds", eval_cfg.folds, "Intra-subject folds")->capture_default_str()->check(CLI::Range(2, 100));
  evaluate->add_flag("--group-by-trial", eval_cfg.group_by_trial, "Intra-subject folds follow trials");
  evaluate->add_option("--grid", eval_grid, "single (defaults) or default (tune by grid search)")->capture_default_str()->check(CLI::IsMember({"single", "default"}));
  evaluate->add_option("--mlp-epochs", eval_mlp_epochs, "Override MLP epochs")->check(CLI::PositiveNumber);
  evaluate->add_option("--ae-epochs", eval_cfg.autoencoder.epochs, "Autoencoder epochs")->capture_default_str()->check(CLI::PositiveNumber);
  evaluate->add_option("--selection-folds", eval_cfg.selection_folds, "Forward selection folds")->capture_default_str()->check(CLI::Range(2, 100));
  evaluate->add_option("--selection-wrapper", eval_wrapper, "lr or same (the evaluated family)")->capture_default_str()->check(CLI::IsMember({"lr", "same"}));
  evaluate->add_option("--jobs", eval_cfg.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  evaluate->callback([&] {
    action = [&] {
      const fs::path out_dir = eval_out.empty() ? fs::path(eval_in) / "report" : fs::path(eval_out);
      sink.dir = out_dir;
      if (!eval_families.empty()) {
        eval_cfg.families.clear();
        for (const auto& t : eval_families) eval_cfg.families.push_back(models::parse_family(t));
      }
      if (!eval_feature_sets.empty()) {
        eval_cfg.feature_sets.clear();
        for (const auto& t : eval_feature_sets) eval_cfg.feature_sets.push_back(experiment::parse_feature_set(t));
      }
      if (!eval_regimes.empty()) {
        eval_cfg.regimes.clear();
        for (const auto& t : eval_regimes) eval_cfg.regimes.push_back(experiment::parse_regime(t));
      }
      if (eval_windows.empty()) {
        for (int w : kWindows) {
          if (fs::exists(fs::path(eval_in) / experiment::features_file_name(w))) eval_windows.push_back(w);
        }
        if (eval_windows.empty()) throw Error(ErrorKind::Io, "no features_<w>ms.csv files in " + eval_in);
      }
      eval_cfg.windows_ms = eval_windows;
      eval_cfg.tune = eval_grid != "single";
      eval_cfg.grid = grid_for(eval_grid, eval_mlp_epochs);
      eval_cfg.selection_wrapper =
          eval_wrapper == "lr" ? experiment::SelectionWrapper::Logistic : experiment::SelectionWrapper::SameFamily;
      const auto data = experiment::load_feature_dataset(eval_in, eval_cfg.windows_ms);
      const auto result = experiment::run_experiment(data, eval_cfg);
      experiment::write_report(result, out_dir);
      out << experiment::render_summary(result);
      out << "report written to " << out_dir.string() << "\n";
    };
  });

  // ---- report --------------------------------------------------------------------
  auto* report = app.add_subcommand("report", "Re-render tables and summary from a report's cells.csv");
  std::string report_in, report_out;
  report->add_option("--in", report_in, "Report directory containing cells.csv")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "Output directory (default: --in)");
  report->callback([&] {
    action = [&] {
      const fs::path out_dir = report_out.empty() ? fs::path(report_in) : fs::path(report_out);
      sink.dir = out_dir;
      const auto result = experiment::parse_cells_csv(read(fs::path(report_in) / "cells.csv"));
      if (result.cells.empty()) throw Error(ErrorKind::EmptyReport, "cells.csv lists no cells");
      for (int w : result.config.windows_ms) {
        for (auto fs_tag : result.config.feature_sets) {
          for (auto metric : experiment::kMetrics) {
            io::write_file(out_dir / ("w" + std::to_string(w)) /
                               ("table_" + std::string(experiment::metric_tag(metric)) + "_" +
                                std::string(experiment::feature_set_tag(fs_tag)) + ".csv"),
                           experiment::render_table(result, w, metric, fs_tag));
          }
        }
      }
      const auto summary = experiment::render_summary(result);
      io::write_file(out_dir / "summary.txt", summary);
      out << summary;
    };
  });

  // ---- spectrogram ---------------------------------------------------------------
  auto* spectrogram = app.add_subcommand("spectrogram", "Write the wavelet power of one epoch and channel as CSV");
  std::string spec_epochs, spec_channel, spec_out;
  int spec_epoch = 0;
  std::optional<int> spec_subject, spec_trial;
  double spec_cycles = dsp::kDefaultCycles;
  spectrogram->add_option("--epochs", spec_epochs, "Epochs CSV (from ingest)")->required()->check(CLI::ExistingFile);
  spectrogram->add_option("--epoch", spec_epoch, "Epoch index")->required()->check(CLI::NonNegativeNumber);
  spectrogram->add_option("--channel", spec_channel, "TP9, AF7, AF8 or TP10")->required()->check(CLI::IsMember({"TP9", "AF7", "AF8", "TP10"}));
  spectrogram->add_option("--subject", spec_subject, "Subject id (default: first)");
  spectrogram->add_option("--trial", spec_trial, "Trial id (default: first)");
  spectrogram->add_option("--cycles", spec_cycles, "Morlet wavelet cycles")->capture_default_str()->check(CLI::PositiveNumber);
  spectrogram->add_option("--out", spec_out, "Output CSV")->required();
  spectrogram->callback([&] {
    action = [&] {
      sink.dir = fs::path(spec_out).parent_path();
      const auto epochs = parse_epochs(read(spec_epochs));
      const EpochedTrial* match = nullptr;
      for (const auto& e : epochs) {
        if (e.epoch_index == spec_epoch && (!spec_subject || e.subject_id == *spec_subject) &&
            (!spec_trial || e.trial_id == *spec_trial)) {
          match = &e;
          break;
        }
      }
      if (!match) throw Error(ErrorKind::InvalidArgument, "no epoch " + std::to_string(spec_epoch) + " in " + spec_epochs);
      const Channel ch = parse_channel(spec_channel);
      dsp::CwtOptions opts;
      opts.n_cycles = spec_cycles;
      auto power = dsp::cwt_power(match->channels[static_cast<int>(ch)], dsp::default_frequencies(), kMuseSampleRate, opts);
      power.channel = spec_channel;
      dsp::emit_spectrogram(power, spec_out);
      out << "wrote " << power.freqs.size() << " x " << power.times.size() << " spectrogram to " << spec_out << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const std::exception& e) {
    std::string kind = "Exception";
    if (const auto* ce = dynamic_cast<const Error*>(&e)) kind = std::string(to_string(ce->kind()));
    const fs::path manifest = (sink.dir.empty() ? fs::path(".") : sink.dir) / "failure.json";
    nlohmann::json j;
    j["command"] = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    j["kind"] = kind;
    j["message"] = e.what();
    try {
      io::write_file(manifest, j.dump(2) + "\n");
      err << "error (" << kind << "): " << e.what() << "\nfailure manifest: " << manifest.string() << "\n";
    } catch (const std::exception&) {
      err << "error (" << kind << "): " << e.what() << "\n";
    }
    return 2;
  }
}

}  // namespace chromaeeg
