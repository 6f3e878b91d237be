#include <doctest.h>

#include <cmath>
#include <sstream>

#include "chromaeeg/dsp.hpp"
#include "chromaeeg/error.hpp"
#include "chromaeeg/ingest.hpp"
#include "chromaeeg/rng.hpp"
#include "oracles.hpp"

using namespace chromaeeg;

namespace {

RawRecording ramp_recording(std::size_t n, double fs = 256.0) {
  RawRecording r;
  r.sample_rate = fs;
  for (std::size_t i = 0; i < n; ++i) {
    r.timestamps.push_back(1000.0 + static_cast<double>(i) / fs);
    for (std::size_t c = 0; c < kChannelCount; ++c) r.channels[c].push_back(static_cast<double>(i) + 0.25 * c);
  }
  return r;
}

bool throws_kind(ErrorKind kind, auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace

TEST_CASE("parse_recording reads a three-row file") {
  const std::string csv =
      "TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n"
      "0.000,1,2,3,4,\n"
      "0.004,5,6,7,8,/muse/elements/jaw_clench\n"
      "0.008,9,10,11,12,\n";
  const auto rec = parse_recording(csv);
  CHECK(rec.size() == 3);
  CHECK(rec.channel(Channel::AF8)[2] == 11.0);
  REQUIRE(rec.markers.size() == 1);
  CHECK(rec.markers[0].kind == MarkerKind::JawClench);
  CHECK(rec.markers[0].timestamp == doctest::Approx(0.004));
}

TEST_CASE("parse_recording accepts CRLF, reordered and extra columns") {
  const std::string csv =
      "RAW_AF7,TimeStamp,Extra,RAW_TP10,RAW_TP9,RAW_AF8\r\n"
      "2,0.0,x,4,1,3\r\n"
      "6,0.1,y,8,5,7\r\n";
  const auto rec = parse_recording(csv);
  CHECK(rec.size() == 2);
  CHECK(rec.channel(Channel::TP9)[1] == 5.0);
  CHECK(rec.channel(Channel::TP10)[0] == 4.0);
  CHECK(rec.markers.empty());
}

TEST_CASE("parse_recording errors") {
  CHECK(throws_kind(ErrorKind::MissingColumn,
                    [] { parse_recording("TimeStamp,RAW_AF7,RAW_AF8,RAW_TP10\n0,1,2,3\n"); }));
  try {
    parse_recording("TimeStamp,RAW_AF7,RAW_AF8,RAW_TP10\n0,1,2,3\n");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("RAW_TP9") != std::string::npos);
  }
  CHECK(throws_kind(ErrorKind::NonMonotoneTimestamps, [] {
    parse_recording("TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10\n1,1,2,3,4\n0.5,1,2,3,4\n");
  }));
  CHECK(throws_kind(ErrorKind::EmptyRecording, [] { parse_recording("TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10\n"); }));
  CHECK(throws_kind(ErrorKind::MalformedRow, [] {
    parse_recording("TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10\n0,1,abc,3,4\n");
  }));
}

TEST_CASE("recording text round trip on a 1000-row synthetic file") {
  // Build an irregular file by hand: jittered timestamps, long decimals, a
  // marker-only row and a marker sharing a sample timestamp.
  Rng rng(11);
  std::ostringstream csv;
  csv << "TimeStamp,RAW_TP9,RAW_AF7,RAW_AF8,RAW_TP10,Marker\n";
  double t = 5.0;
  for (int i = 0; i < 1000; ++i) {
    t += 1.0 / 256.0 + rng.uniform(0.0, 1e-4);
    csv.precision(17);
    csv << t;
    for (int c = 0; c < 4; ++c) csv << ',' << rng.normal() * 50.0;
    csv << ',' << (i == 10 ? "/muse/elements/jaw_clench" : "") << '\n';
    if (i == 500) csv << t + 1e-6 << ",,,,,/muse/elements/eye_blink\n";
  }
  const auto first = parse_recording(csv.str());
  CHECK(first.size() == 1000);
  CHECK(first.markers.size() == 2);
  const std::string normalized = serialize_recording(first);
  const auto second = parse_recording(normalized);
  CHECK(second == first);
  CHECK(serialize_recording(second) == normalized);
}

TEST_CASE("detect_start_marker picks the first jaw clench") {
  RawRecording r = ramp_recording(10);
  r.markers = {{1.5, MarkerKind::JawClench}};
  CHECK(detect_start_marker(r) == 1.5);
  r.markers = {{1.0, MarkerKind::EyeBlink}, {2.0, MarkerKind::JawClench}, {5.0, MarkerKind::JawClench}};
  CHECK(detect_start_marker(r) == 2.0);
  r.markers.clear();
  CHECK(throws_kind(ErrorKind::NoStartMarker, [&] { detect_start_marker(r); }));
}

TEST_CASE("epoching the full protocol yields 60 epochs, 20 per colour") {
  StimulusProtocol protocol;
  const auto schedule = make_random_schedule(protocol, 3);
  REQUIRE(schedule.size() == 60);
  const auto rec = ramp_recording(static_cast<std::size_t>(240 * 256));
  const auto epochs = epoch_trials(rec, schedule, rec.timestamps.front(), protocol);
  REQUIRE(epochs.size() == 60);
  int counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    ++counts[static_cast<int>(epochs[i].label)];
    CHECK(epochs[i].label == schedule.entries[i].label);
    for (const auto& ch : epochs[i].channels) CHECK(ch.size() == 512);
    // Ramp values expose the exact start sample: onset i * 4 s.
    CHECK(epochs[i].channels[0][0] == static_cast<double>(i * 4 * 256));
  }
  CHECK(counts[0] == 20);
  CHECK(counts[1] == 20);
  CHECK(counts[2] == 20);
}

TEST_CASE("single entry at onset zero gives the first 512 samples") {
  const auto rec = ramp_recording(600);
  StimulusSchedule s{{{0.0, Color::Green}}};
  const auto epochs = epoch_trials(rec, s, rec.timestamps.front());
  REQUIRE(epochs.size() == 1);
  CHECK(epochs[0].label == Color::Green);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    CHECK(epochs[0].channels[c] ==
          std::vector<double>(rec.channels[c].begin(), rec.channels[c].begin() + 512));
  }
}

TEST_CASE("truncated recording reports how many epochs fit") {
  StimulusProtocol protocol;
  const auto schedule = make_random_schedule(protocol, 1);
  const auto rec = ramp_recording(100 * 256);
  try {
    epoch_trials(rec, schedule, rec.timestamps.front(), protocol);
    FAIL("expected RecordingTooShort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RecordingTooShort);
    // Onsets 0, 4, ..., 96 s fit (25 of them); 100 s does not.
    CHECK(std::string(e.what()).find("only 25 of 60") != std::string::npos);
  }
}

TEST_CASE("schedule and epochs files round trip") {
  StimulusProtocol protocol;
  const auto schedule = make_random_schedule(protocol, 9);
  CHECK(parse_schedule(serialize_schedule(schedule)) == schedule);

  const auto rec = ramp_recording(static_cast<std::size_t>(20 * 256));
  StimulusSchedule s{{{0.0, Color::Red}, {4.0, Color::Blue}}};
  auto epochs = epoch_trials(rec, s, rec.timestamps.front(), protocol, 3, 2);
  const auto back = parse_epochs(serialize_epochs(epochs));
  REQUIRE(back.size() == 2);
  CHECK(back[1].label == Color::Blue);
  CHECK(back[1].subject_id == 3);
  CHECK(back[1].trial_id == 2);
  CHECK(back[1].epoch_index == 1);
  CHECK(back[1].channels == epochs[1].channels);
}

TEST_CASE("synthetic recordings are reproducible") {
  StimulusProtocol protocol;
  const auto schedule = make_random_schedule(protocol, 5);
  std::map<Color, BandGains> gains{{Color::Red, {1, 0}}, {Color::Green, {0, 1}}, {Color::Blue, {1, 1}}};
  const auto a = generate_synthetic_recording(42, schedule, gains, 2.0);
  const auto b = generate_synthetic_recording(42, schedule, gains, 2.0);
  CHECK(a.recording == b.recording);
  CHECK(a.schedule == schedule);
  const auto c = generate_synthetic_recording(43, schedule, gains, 2.0);
  CHECK_FALSE(a.recording == c.recording);
  CHECK(detect_start_marker(a.recording) > a.recording.timestamps.front());
}

TEST_CASE("noise-free alpha-only stimuli carry far more alpha than beta power") {
  StimulusProtocol protocol;
  protocol.repetitions_per_color = 2;
  protocol.trial_duration = 24.0;
  const auto schedule = make_random_schedule(protocol, 2);
  std::map<Color, BandGains> gains{{Color::Red, {1, 0}}, {Color::Green, {1, 0}}, {Color::Blue, {1, 0}}};
  SyntheticOptions opts;
  opts.trial_duration = protocol.trial_duration;
  const auto syn = generate_synthetic_recording(8, schedule, gains, 0.0, opts);
  const auto epochs = epoch_trials(syn.recording, syn.schedule, detect_start_marker(syn.recording), protocol);
  REQUIRE(epochs.size() == 6);
  for (const auto& ep : epochs) {
    for (const auto& ch : ep.channels) {
      const auto bp = dsp::band_power(dsp::cwt_power(ch, dsp::default_frequencies(), 256.0));
      CHECK(oracle::mean(bp.alpha) > 5.0 * oracle::mean(bp.beta));
    }
  }
}

TEST_CASE("zero gains leave colours indistinguishable (Welch t-test)") {
  StimulusProtocol protocol;
  const auto schedule = make_random_schedule(protocol, 4);
  std::map<Color, BandGains> gains{{Color::Red, {0, 0}}, {Color::Green, {0, 0}}, {Color::Blue, {0, 0}}};
  const auto syn = generate_synthetic_recording(77, schedule, gains, 1.0);
  const auto epochs = epoch_trials(syn.recording, syn.schedule, detect_start_marker(syn.recording), protocol);
  std::map<Color, std::vector<double>> per_class;
  for (const auto& ep : epochs) {
    const auto bp = dsp::band_power(dsp::cwt_power(ep.channels[0], dsp::default_frequencies(), 256.0));
    per_class[ep.label].push_back(oracle::mean(bp.alpha));
  }
  auto welch_t = [](const std::vector<double>& a, const std::vector<double>& b) {
    const double va = oracle::variance(a) * a.size() / (a.size() - 1.0);
    const double vb = oracle::variance(b) * b.size() / (b.size() - 1.0);
    return (oracle::mean(a) - oracle::mean(b)) / std::sqrt(va / a.size() + vb / b.size());
  };
  // |t| < 2.9 is roughly p > 0.01 at ~38 degrees of freedom.
  CHECK(std::abs(welch_t(per_class[Color::Red], per_class[Color::Green])) < 2.9);
  CHECK(std::abs(welch_t(per_class[Color::Red], per_class[Color::Blue])) < 2.9);
  CHECK(std::abs(welch_t(per_class[Color::Green], per_class[Color::Blue])) < 2.9);
}
