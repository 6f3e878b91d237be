#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chromaeeg {

inline constexpr std::size_t kChannelCount = 4;
inline constexpr double kMuseSampleRate = 256.0;

/// Electrode order used everywhere: AF7 and TP9 sit on the left hemisphere,
/// AF8 and TP10 on the right.
enum class Channel : int { TP9 = 0, AF7 = 1, AF8 = 2, TP10 = 3 };
inline constexpr std::array<std::string_view, kChannelCount> kChannelNames{"TP9", "AF7", "AF8", "TP10"};

std::string_view channel_name(Channel c);
Channel parse_channel(std::string_view name);

/// Class order is fixed: Red=0, Green=1, Blue=2.
enum class Color : int { Red = 0, Green = 1, Blue = 2 };
inline constexpr std::size_t kColorCount = 3;
inline constexpr std::array<std::string_view, kColorCount> kColorNames{"Red", "Green", "Blue"};

std::string_view color_name(Color c);
Color parse_color(std::string_view name);

enum class MarkerKind { JawClench, EyeBlink };

struct Marker {
  double timestamp = 0.0;
  MarkerKind kind = MarkerKind::JawClench;
  bool operator==(const Marker&) const = default;
};

struct RawRecording {
  double sample_rate = kMuseSampleRate;
  std::vector<double> timestamps;
  std::array<std::vector<double>, kChannelCount> channels;
  std::vector<Marker> markers;

  std::size_t size() const noexcept { return timestamps.size(); }
  const std::vector<double>& channel(Channel c) const { return channels[static_cast<int>(c)]; }
  /// Throws if the channel lengths, timestamp ordering or sample rate are invalid.
  void validate() const;

  bool operator==(const RawRecording&) const = default;
};

struct StimulusProtocol {
  std::array<Color, kColorCount> colors{Color::Red, Color::Green, Color::Blue};
  double stimulus_duration = 2.0;
  double baseline_duration = 2.0;
  int repetitions_per_color = 20;
  double trial_duration = 240.0;

  std::size_t stimulus_samples(double sample_rate) const;
  /// Checks repetitions * colors * (stimulus + baseline) == trial_duration.
  void validate() const;
};

struct ScheduleEntry {
  double onset = 0.0;  // seconds after the start marker
  Color label = Color::Red;
  bool operator==(const ScheduleEntry&) const = default;
};

struct StimulusSchedule {
  std::vector<ScheduleEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool operator==(const StimulusSchedule&) const = default;
};

struct EpochedTrial {
  Color label = Color::Red;
  std::array<std::vector<double>, kChannelCount> channels;
  int subject_id = 0;
  int trial_id = 0;
  int epoch_index = 0;
};

// ---- recording CSV ---------------------------------------------------------
//
// Header: TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker
// Column order is free and extra columns are ignored. The marker column is
// optional (`Elements` is accepted as an alias); a marker value matches when it
// ends with `jaw_clench` or `eye_blink`. A row whose four channel fields are all
// empty but which carries a marker is a marker-only row.

RawRecording parse_recording(std::string_view csv_text);
/// Canonical text form; parse_recording(serialize_recording(r)) == r.
std::string serialize_recording(const RawRecording& rec);

// ---- schedule sidecar: `onset_seconds,label` -------------------------------

StimulusSchedule parse_schedule(std::string_view csv_text);
std::string serialize_schedule(const StimulusSchedule& schedule);

/// Every colour `repetitions_per_color` times in a seeded random order, one
/// stimulus every stimulus+baseline seconds starting at onset 0.
StimulusSchedule make_random_schedule(const StimulusProtocol& protocol, std::uint64_t seed);

/// Timestamp of the first jaw clench.
double detect_start_marker(const RawRecording& rec);

/// One epoch per schedule entry: the stimulus_samples() samples beginning at
/// start + onset. Samples are assumed uniformly spaced; timestamps only anchor
/// the start marker. Baseline intervals never enter an epoch.
std::vector<EpochedTrial> epoch_trials(const RawRecording& rec, const StimulusSchedule& schedule, double start,
                                       const StimulusProtocol& protocol = {}, int subject_id = 0,
                                       int trial_id = 0);

/// Epochs file: subject,trial,epoch,label,channel,sample_index,value
std::string serialize_epochs(const std::vector<EpochedTrial>& epochs);
std::vector<EpochedTrial> parse_epochs(std::string_view csv_text);

// ---- synthetic recordings --------------------------------------------------

struct BandGains {
  double alpha = 0.0;
  double beta = 0.0;
};

struct SyntheticOptions {
  double sample_rate = kMuseSampleRate;
  double amplitude = 10.0;       // µV of a unit-gain band component
  double lead_seconds = 1.0;     // recording time before the start marker
  double tail_seconds = 0.0;     // recording time after the last scheduled interval
  double stimulus_duration = 2.0;
  double trial_duration = 240.0;
  int components_per_band = 2;   // sinusoids per band per stimulus interval
};

struct SyntheticRecording {
  RawRecording recording;
  StimulusSchedule schedule;
};

/// Deterministic for a fixed seed. Inside each stimulus interval every channel
/// gets sinusoids drawn from 8-12 Hz and 13-30 Hz scaled by that colour's
/// gains, on top of white noise everywhere. A jaw clench marks the schedule
/// origin.
SyntheticRecording generate_synthetic_recording(std::uint64_t seed, const StimulusSchedule& schedule,
                                                const std::map<Color, BandGains>& class_band_gains,
                                                double noise_sigma, const SyntheticOptions& options = {});

}  // namespace chromaeeg
