#include <algorithm>

#include "chromaeeg/error.hpp"
#include "chromaeeg/experiment.hpp"
#include "chromaeeg/rng.hpp"
#include "chromaeeg/text_io.hpp"

namespace chromaeeg::experiment {

std::map<Color, BandGains> SyntheticDatasetConfig::default_class_gains() {
  return {{Color::Red, {1.6, 0.5}}, {Color::Green, {0.5, 1.6}}, {Color::Blue, {1.1, 1.1}}};
}

std::vector<SyntheticTrial> generate_synthetic_dataset(const SyntheticDatasetConfig& cfg) {
  if (cfg.subjects < 1 || cfg.trials < 1) throw Error(ErrorKind::InvalidArgument, "need at least one subject and trial");
  cfg.protocol.validate();
  SyntheticOptions opts;
  opts.stimulus_duration = cfg.protocol.stimulus_duration;
  opts.trial_duration = cfg.protocol.trial_duration;

  std::vector<SyntheticTrial> out;
  for (int s = 1; s <= cfg.subjects; ++s) {
    // Each subject responds a little differently to the same colours.
    Rng jitter(derive_seed(cfg.seed, {static_cast<std::uint64_t>(s), 0}));
    std::map<Color, BandGains> gains;
    for (const auto& [color, g] : cfg.gains) {
      gains[color] = {g.alpha * (1.0 + cfg.subject_jitter * jitter.uniform(-1.0, 1.0)),
                      g.beta * (1.0 + cfg.subject_jitter * jitter.uniform(-1.0, 1.0))};
    }
    for (int t = 1; t <= cfg.trials; ++t) {
      const std::uint64_t trial_seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(t)});
      const auto schedule = make_random_schedule(cfg.protocol, derive_seed(trial_seed, {1}));
      out.push_back({s, t, generate_synthetic_recording(derive_seed(trial_seed, {2}), schedule, gains, cfg.noise_sigma, opts)});
    }
  }
  return out;
}

std::vector<EpochedTrial> epoch_synthetic(const std::vector<SyntheticTrial>& trials, const StimulusProtocol& protocol) {
  std::vector<EpochedTrial> out;
  for (const auto& t : trials) {
    const double start = detect_start_marker(t.data.recording);
    auto epochs = epoch_trials(t.data.recording, t.data.schedule, start, protocol, t.subject, t.trial);
    std::move(epochs.begin(), epochs.end(), std::back_inserter(out));
  }
  return out;
}

namespace {

std::string trial_stem(int subject, int trial) {
  return "subject" + std::to_string(subject) + "_trial" + std::to_string(trial);
}

}  // namespace

void write_synthetic_dataset(const std::vector<SyntheticTrial>& trials, const std::filesystem::path& dir) {
  std::string index = "subject,trial,recording,schedule\n";
  for (const auto& t : trials) {
    const std::string stem = trial_stem(t.subject, t.trial);
    io::write_file(dir / (stem + ".csv"), serialize_recording(t.data.recording));
    io::write_file(dir / (stem + ".schedule.csv"), serialize_schedule(t.data.schedule));
    index += std::to_string(t.subject) + "," + std::to_string(t.trial) + "," + stem + ".csv," + stem + ".schedule.csv\n";
  }
  io::write_file(dir / "dataset.csv", index);
}

std::vector<EpochedTrial> load_dataset_epochs(const std::filesystem::path& dir, const StimulusProtocol& protocol) {
  const auto index_path = dir / "dataset.csv";
  if (!std::filesystem::exists(index_path)) {
    throw Error(ErrorKind::Io, "no dataset.csv in " + dir.string());
  }
  const std::string text = io::read_file(index_path);
  const auto lines = io::split_lines(text);
  if (lines.empty() || io::trim(lines[0]) != "subject,trial,recording,schedule") {
    throw Error(ErrorKind::MissingColumn, "dataset.csv header must be subject,trial,recording,schedule");
  }
  std::vector<EpochedTrial> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (io::trim(lines[i]).empty()) continue;
    const auto f = io::split_csv(lines[i]);
    const auto subject = f.size() == 4 ? io::parse_int(f[0]) : std::nullopt;
    const auto trial = f.size() == 4 ? io::parse_int(f[1]) : std::nullopt;
    if (!subject || !trial) throw Error(ErrorKind::MalformedRow, "bad dataset.csv line " + std::to_string(i + 1));
    const auto rec = parse_recording(io::read_file(dir / std::string(io::trim(f[2]))));
    const auto schedule = parse_schedule(io::read_file(dir / std::string(io::trim(f[3]))));
    auto epochs = epoch_trials(rec, schedule, detect_start_marker(rec), protocol, static_cast<int>(*subject),
                               static_cast<int>(*trial));
    std::move(epochs.begin(), epochs.end(), std::back_inserter(out));
  }
  return out;
}

Dataset load_feature_dataset(const std::filesystem::path& dir, const std::vector<int>& windows_ms) {
  Dataset out;
  for (int w : windows_ms) {
    const auto path = dir / features_file_name(w);
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::Io, "missing feature file " + path.string());
    out[w] = features::parse_feature_matrix(io::read_file(path));
  }
  return out;
}

}  // namespace chromaeeg::experiment
