#include "chromaeeg/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <tuple>

#include "chromaeeg/error.hpp"
#include "chromaeeg/rng.hpp"
#include "chromaeeg/text_io.hpp"

namespace chromaeeg {

namespace {

constexpr std::string_view kTimestampColumn = "TimeStamp";
constexpr std::array<std::string_view, kChannelCount> kRawColumns{"RAW_TP9", "RAW_AF7", "RAW_AF8", "RAW_TP10"};

std::string_view marker_text(MarkerKind kind) {
  return kind == MarkerKind::JawClench ? "jaw_clench" : "eye_blink";
}

std::optional<MarkerKind> parse_marker(std::string_view text) {
  text = io::trim(text);
  if (text.ends_with("jaw_clench")) return MarkerKind::JawClench;
  if (text.ends_with("eye_blink")) return MarkerKind::EyeBlink;
  return std::nullopt;
}

std::size_t round_to_samples(double seconds, double sample_rate) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate));
}

}  // namespace

std::string_view channel_name(Channel c) { return kChannelNames[static_cast<int>(c)]; }

Channel parse_channel(std::string_view name) {
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (kChannelNames[i] == name) return static_cast<Channel>(i);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown channel '" + std::string(name) + "'");
}

std::string_view color_name(Color c) { return kColorNames[static_cast<int>(c)]; }

Color parse_color(std::string_view name) {
  name = io::trim(name);
  for (std::size_t i = 0; i < kColorCount; ++i) {
    if (kColorNames[i] == name) return static_cast<Color>(i);
  }
  // Single-letter and numeric forms are common in hand-written sidecars.
  if (name == "R" || name == "0") return Color::Red;
  if (name == "G" || name == "1") return Color::Green;
  if (name == "B" || name == "2") return Color::Blue;
  throw Error(ErrorKind::InvalidArgument, "unknown colour label '" + std::string(name) + "'");
}

void RawRecording::validate() const {
  if (!(sample_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "sample rate must be positive");
  if (timestamps.empty()) throw Error(ErrorKind::EmptyRecording, "recording has no samples");
  for (const auto& ch : channels) {
    if (ch.size() != timestamps.size()) {
      throw Error(ErrorKind::DimensionMismatch, "channel length differs from timestamp count");
    }
  }
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw Error(ErrorKind::NonMonotoneTimestamps,
                  "timestamp at sample " + std::to_string(i) + " does not increase");
    }
  }
}

std::size_t StimulusProtocol::stimulus_samples(double sample_rate) const {
  return round_to_samples(stimulus_duration, sample_rate);
}

void StimulusProtocol::validate() const {
  const double expected =
      repetitions_per_color * static_cast<double>(colors.size()) * (stimulus_duration + baseline_duration);
  if (std::abs(expected - trial_duration) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "protocol durations do not add up to the trial duration");
  }
}

RawRecording parse_recording(std::string_view csv_text) {
  const auto lines = io::split_lines(csv_text);
  if (lines.empty()) throw Error(ErrorKind::EmptyRecording, "no header row");

  const auto header = io::split_csv(lines.front());
  auto find_column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (io::trim(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  auto require_column = [&](std::string_view name) {
    auto idx = find_column(name);
    if (!idx) throw Error(ErrorKind::MissingColumn, "column '" + std::string(name) + "' is absent");
    return *idx;
  };

  const std::size_t ts_col = require_column(kTimestampColumn);
  std::array<std::size_t, kChannelCount> ch_cols{};
  for (std::size_t c = 0; c < kChannelCount; ++c) ch_cols[c] = require_column(kRawColumns[c]);
  std::optional<std::size_t> marker_col = find_column("Marker");
  if (!marker_col) marker_col = find_column("Elements");

  RawRecording rec;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (io::trim(lines[li]).empty()) continue;
    const auto fields = io::split_csv(lines[li]);
    auto field = [&](std::size_t col) -> std::string_view {
      return col < fields.size() ? io::trim(fields[col]) : std::string_view{};
    };
    const std::string where = "line " + std::to_string(li + 1);

    const auto ts = io::parse_double(field(ts_col));
    if (!ts || !std::isfinite(*ts)) throw Error(ErrorKind::MalformedRow, where + ": bad timestamp");

    std::optional<MarkerKind> marker;
    if (marker_col && !field(*marker_col).empty()) {
      marker = parse_marker(field(*marker_col));
      if (!marker) throw Error(ErrorKind::MalformedRow, where + ": unknown marker value");
    }

    const bool all_empty = std::all_of(ch_cols.begin(), ch_cols.end(),
                                       [&](std::size_t col) { return field(col).empty(); });
    if (all_empty && marker) {
      rec.markers.push_back({*ts, *marker});
      continue;
    }

    std::array<double, kChannelCount> values{};
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const auto v = io::parse_double(field(ch_cols[c]));
      if (!v || !std::isfinite(*v)) {
        throw Error(ErrorKind::MalformedRow, where + ": non-numeric value in " + std::string(kRawColumns[c]));
      }
      values[c] = *v;
    }
    if (!rec.timestamps.empty() && !(*ts > rec.timestamps.back())) {
      throw Error(ErrorKind::NonMonotoneTimestamps, where + ": timestamp does not increase");
    }
    rec.timestamps.push_back(*ts);
    for (std::size_t c = 0; c < kChannelCount; ++c) rec.channels[c].push_back(values[c]);
    if (marker) rec.markers.push_back({*ts, *marker});
  }
  if (rec.timestamps.empty()) throw Error(ErrorKind::EmptyRecording, "no sample rows");
  std::stable_sort(rec.markers.begin(), rec.markers.end(),
                   [](const Marker& a, const Marker& b) { return a.timestamp < b.timestamp; });
  return rec;
}

std::string serialize_recording(const RawRecording& rec) {
  std::string out = "TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n";
  std::vector<Marker> markers = rec.markers;
  std::stable_sort(markers.begin(), markers.end(),
                   [](const Marker& a, const Marker& b) { return a.timestamp < b.timestamp; });
  std::size_t m = 0;
  auto marker_only_row = [&](const Marker& mk) {
    out += io::format_double(mk.timestamp);
    out += ",,,,,";
    out += marker_text(mk.kind);
    out += '\n';
  };
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double ts = rec.timestamps[i];
    while (m < markers.size() && markers[m].timestamp < ts) marker_only_row(markers[m++]);
    out += io::format_double(ts);
    for (const auto& ch : rec.channels) {
      out += ',';
      out += io::format_double(ch[i]);
    }
    out += ',';
    if (m < markers.size() && markers[m].timestamp == ts) out += marker_text(markers[m++].kind);
    out += '\n';
    // Further markers sharing this timestamp become marker-only rows.
    while (m < markers.size() && markers[m].timestamp == ts) marker_only_row(markers[m++]);
  }
  while (m < markers.size()) marker_only_row(markers[m++]);
  return out;
}

StimulusSchedule parse_schedule(std::string_view csv_text) {
  const auto lines = io::split_lines(csv_text);
  StimulusSchedule schedule;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto line = io::trim(lines[li]);
    if (line.empty()) continue;
    const auto fields = io::split_csv(line);
    if (li == 0 && fields.size() >= 1 && io::trim(fields[0]) == "onset_seconds") continue;
    if (fields.size() < 2) throw Error(ErrorKind::MalformedRow, "schedule line " + std::to_string(li + 1));
    const auto onset = io::parse_double(fields[0]);
    if (!onset) throw Error(ErrorKind::MalformedRow, "schedule line " + std::to_string(li + 1) + ": bad onset");
    schedule.entries.push_back({*onset, parse_color(fields[1])});
  }
  for (std::size_t i = 1; i < schedule.entries.size(); ++i) {
    if (!(schedule.entries[i].onset > schedule.entries[i - 1].onset)) {
      throw Error(ErrorKind::InvalidArgument, "schedule onsets must increase");
    }
  }
  return schedule;
}

std::string serialize_schedule(const StimulusSchedule& schedule) {
  std::string out = "onset_seconds,label\n";
  for (const auto& e : schedule.entries) {
    out += io::format_double(e.onset);
    out += ',';
    out += color_name(e.label);
    out += '\n';
  }
  return out;
}

StimulusSchedule make_random_schedule(const StimulusProtocol& protocol, std::uint64_t seed) {
  protocol.validate();
  std::vector<Color> order;
  for (Color c : protocol.colors) {
    for (int r = 0; r < protocol.repetitions_per_color; ++r) order.push_back(c);
  }
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  StimulusSchedule schedule;
  const double period = protocol.stimulus_duration + protocol.baseline_duration;
  for (std::size_t i = 0; i < order.size(); ++i) {
    schedule.entries.push_back({static_cast<double>(i) * period, order[i]});
  }
  return schedule;
}

double detect_start_marker(const RawRecording& rec) {
  const auto it = std::find_if(rec.markers.begin(), rec.markers.end(),
                               [](const Marker& m) { return m.kind == MarkerKind::JawClench; });
  if (it == rec.markers.end()) throw Error(ErrorKind::NoStartMarker, "no jaw_clench marker in recording");
  return it->timestamp;
}

std::vector<EpochedTrial> epoch_trials(const RawRecording& rec, const StimulusSchedule& schedule, double start,
                                       const StimulusProtocol& protocol, int subject_id, int trial_id) {
  rec.validate();
  const std::size_t seg = protocol.stimulus_samples(rec.sample_rate);
  const auto first = std::lower_bound(rec.timestamps.begin(), rec.timestamps.end(), start);
  if (first == rec.timestamps.end()) {
    throw Error(ErrorKind::RecordingTooShort, "start marker lies after the last sample; 0 epochs fit");
  }
  const std::size_t start_index = static_cast<std::size_t>(first - rec.timestamps.begin());

  std::vector<EpochedTrial> epochs;
  epochs.reserve(schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& entry = schedule.entries[i];
    const std::size_t begin = start_index + round_to_samples(entry.onset, rec.sample_rate);
    if (begin + seg > rec.size()) {
      std::size_t fit = 0;
      for (const auto& e : schedule.entries) {
        if (start_index + round_to_samples(e.onset, rec.sample_rate) + seg <= rec.size()) ++fit;
      }
      throw Error(ErrorKind::RecordingTooShort, "only " + std::to_string(fit) + " of " +
                                                    std::to_string(schedule.size()) + " epochs fit");
    }
    EpochedTrial ep;
    ep.label = entry.label;
    ep.subject_id = subject_id;
    ep.trial_id = trial_id;
    ep.epoch_index = static_cast<int>(i);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const auto& src = rec.channels[c];
      ep.channels[c].assign(src.begin() + static_cast<std::ptrdiff_t>(begin),
                            src.begin() + static_cast<std::ptrdiff_t>(begin + seg));
    }
    epochs.push_back(std::move(ep));
  }
  return epochs;
}

std::string serialize_epochs(const std::vector<EpochedTrial>& epochs) {
  std::string out = "subject,trial,epoch,label,channel,sample_index,value\n";
  for (const auto& ep : epochs) {
    const std::string prefix = std::to_string(ep.subject_id) + ',' + std::to_string(ep.trial_id) + ',' +
                               std::to_string(ep.epoch_index) + ',' + std::string(color_name(ep.label)) + ',';
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      const std::string ch_prefix = prefix + std::string(kChannelNames[c]) + ',';
      for (std::size_t s = 0; s < ep.channels[c].size(); ++s) {
        out += ch_prefix;
        out += std::to_string(s);
        out += ',';
        out += io::format_double(ep.channels[c][s]);
        out += '\n';
      }
    }
  }
  return out;
}

std::vector<EpochedTrial> parse_epochs(std::string_view csv_text) {
  const auto lines = io::split_lines(csv_text);
  std::vector<EpochedTrial> epochs;
  std::map<std::tuple<int, int, int>, std::size_t> where;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (io::trim(lines[li]).empty()) continue;
    const auto f = io::split_csv(lines[li]);
    if (f.size() != 7) throw Error(ErrorKind::MalformedRow, "epochs line " + std::to_string(li + 1));
    const auto subject = io::parse_int(f[0]);
    const auto trial = io::parse_int(f[1]);
    const auto epoch = io::parse_int(f[2]);
    const auto sample = io::parse_int(f[5]);
    const auto value = io::parse_double(f[6]);
    if (!subject || !trial || !epoch || !sample || !value) {
      throw Error(ErrorKind::MalformedRow, "epochs line " + std::to_string(li + 1));
    }
    const auto key = std::make_tuple(static_cast<int>(*subject), static_cast<int>(*trial), static_cast<int>(*epoch));
    auto it = where.find(key);
    if (it == where.end()) {
      EpochedTrial ep;
      ep.subject_id = std::get<0>(key);
      ep.trial_id = std::get<1>(key);
      ep.epoch_index = std::get<2>(key);
      ep.label = parse_color(f[3]);
      it = where.emplace(key, epochs.size()).first;
      epochs.push_back(std::move(ep));
    }
    auto& samples = epochs[it->second].channels[static_cast<int>(parse_channel(io::trim(f[4])))];
    if (static_cast<std::size_t>(*sample) != samples.size()) {
      throw Error(ErrorKind::MalformedRow, "epochs line " + std::to_string(li + 1) + ": samples out of order");
    }
    samples.push_back(*value);
  }
  return epochs;
}

SyntheticRecording generate_synthetic_recording(std::uint64_t seed, const StimulusSchedule& schedule,
                                                const std::map<Color, BandGains>& class_band_gains,
                                                double noise_sigma, const SyntheticOptions& options) {
  if (noise_sigma < 0.0) throw Error(ErrorKind::InvalidArgument, "noise_sigma must be non-negative");
  for (const auto& [color, g] : class_band_gains) {
    if (g.alpha < 0.0 || g.beta < 0.0) throw Error(ErrorKind::InvalidArgument, "band gains must be non-negative");
  }
  const double fs = options.sample_rate;
  double span = options.trial_duration;
  if (!schedule.entries.empty()) {
    span = std::max(span, schedule.entries.back().onset + options.stimulus_duration);
  }
  const std::size_t lead = round_to_samples(options.lead_seconds, fs);
  const std::size_t n = lead + round_to_samples(span + options.tail_seconds, fs);

  SyntheticRecording out;
  out.schedule = schedule;
  RawRecording& rec = out.recording;
  rec.sample_rate = fs;
  rec.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) rec.timestamps[i] = static_cast<double>(i) / fs;

  // Independent streams so that changing the noise level does not move the
  // oscillatory components and vice versa.
  Rng noise_rng(derive_seed(seed, {1}));
  Rng tone_rng(derive_seed(seed, {2}));

  for (std::size_t c = 0; c < kChannelCount; ++c) {
    auto& ch = rec.channels[c];
    ch.resize(n);
    for (std::size_t i = 0; i < n; ++i) ch[i] = noise_sigma * noise_rng.normal();
  }

  const std::size_t seg = round_to_samples(options.stimulus_duration, fs);
  for (const auto& entry : schedule.entries) {
    const auto git = class_band_gains.find(entry.label);
    const BandGains gains = git == class_band_gains.end() ? BandGains{} : git->second;
    const std::size_t begin = lead + round_to_samples(entry.onset, fs);
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      auto& ch = rec.channels[c];
      for (int band = 0; band < 2; ++band) {
        const double gain = band == 0 ? gains.alpha : gains.beta;
        const double lo = band == 0 ? 8.0 : 13.0;
        const double hi = band == 0 ? 12.0 : 30.0;
        for (int k = 0; k < options.components_per_band; ++k) {
          const double freq = tone_rng.uniform(lo, hi);
          const double phase = tone_rng.uniform(0.0, 2.0 * std::numbers::pi);
          const double amp = options.amplitude * gain / std::sqrt(static_cast<double>(options.components_per_band));
          if (amp == 0.0) continue;
          for (std::size_t s = 0; s < seg && begin + s < n; ++s) {
            const double t = static_cast<double>(s) / fs;
            ch[begin + s] += amp * std::sin(2.0 * std::numbers::pi * freq * t + phase);
          }
        }
      }
    }
  }
  rec.markers.push_back({rec.timestamps[lead < n ? lead : n - 1], MarkerKind::JawClench});
  return out;
}

}  // namespace chromaeeg
