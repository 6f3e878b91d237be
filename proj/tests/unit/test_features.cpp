#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "chromaeeg/error.hpp"
#include "chromaeeg/experiment.hpp"
#include "chromaeeg/features.hpp"
#include "chromaeeg/rng.hpp"
#include "oracles.hpp"

using namespace chromaeeg;
using namespace chromaeeg::features;

namespace {

// Eight owned series plus a Window viewing them.
struct OwnedWindow {
  std::array<std::vector<double>, kSeriesCount> data;
  Window view() const {
    Window w;
    for (std::size_t s = 0; s < kSeriesCount; ++s) w.series[s] = data[s];
    return w;
  }
};

OwnedWindow random_window(Rng& rng, std::size_t n) {
  OwnedWindow w;
  for (auto& s : w.data) {
    s.resize(n);
    // Positive, skewed values like band power.
    for (double& v : s) v = std::exp(rng.normal()) * rng.uniform(0.5, 20.0);
  }
  return w;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("feature schema: 86 columns split 18 / 28 / 40") {
  const auto& names = feature_names();
  CHECK(names.size() == 86);
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == 86);
  std::size_t spectral = 0, corr = 0, stat = 0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& n = names[i];
    const bool is_spec = n.rfind("mean_", 0) == 0 || n.rfind("var_", 0) == 0 || n.rfind("hemdiff_", 0) == 0;
    const bool is_corr = n.rfind("corr_", 0) == 0;
    if (is_spec) {
      CHECK(i < 18);
      ++spectral;
    } else if (is_corr) {
      CHECK(i >= 18);
      CHECK(i < 46);
      ++corr;
    } else {
      CHECK(i >= 46);
      ++stat;
    }
  }
  CHECK(spectral == 18);
  CHECK(corr == 28);
  CHECK(stat == 40);
  const auto manifest = feature_manifest();
  CHECK(manifest.rfind(std::string(kFeatureManifestVersion) + "\n", 0) == 0);
}

TEST_CASE("shipped feature-name manifest matches the code") {
  std::ifstream in(std::string(CHROMAEEG_SOURCE_DIR) + "/data/feature_names_v1.txt");
  REQUIRE(in.good());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(text == feature_manifest());
}

TEST_CASE("window sizes and sliding") {
  WindowConfig c;
  c.length_ms = 200;
  CHECK(c.length_samples() == 51);
  CHECK(c.step_samples() == 25);
  CHECK(window_count(512, c) == (512 - 51) / 25 + 1);
  for (int ms : {100, 200, 500, 1000}) {
    WindowConfig w{ms, 256.0};
    const std::size_t len = w.length_samples(), step = w.step_samples();
    CHECK(len == static_cast<std::size_t>(std::floor(ms * 256.0 / 1000.0)));
    CHECK(window_count(512, w) == (512 - len) / step + 1);
  }
  WindowConfig bad{300, 256.0};
  CHECK_THROWS_AS(bad.validate(), Error);

  std::array<dsp::BandPower, kChannelCount> bands;
  for (auto& b : bands) {
    b.alpha.assign(512, 1.0);
    b.beta.assign(512, 2.0);
  }
  const auto wins = slide_windows(bands, c);
  REQUIRE(wins.size() == window_count(512, c));
  for (std::size_t i = 0; i < wins.size(); ++i) {
    CHECK(wins[i].start == 25 * i);
    CHECK(wins[i].length() == 51);
  }
  CHECK(wins.back().start <= 461);

  WindowConfig full{1000, 256.0};
  for (auto& b : bands) {
    b.alpha.assign(256, 1.0);
    b.beta.assign(256, 1.0);
  }
  CHECK(slide_windows(bands, full).size() == 1);
  for (auto& b : bands) {
    b.alpha.assign(100, 1.0);
    b.beta.assign(100, 1.0);
  }
  WindowConfig big{1000, 512.0};
  try {
    slide_windows(bands, big);
    FAIL("expected SeriesTooShort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SeriesTooShort);
  }
}

TEST_CASE("spectral features: trivial cases") {
  OwnedWindow w;
  for (auto& s : w.data) s.assign(20, 4.0);
  auto f = spectral_features(w.view());
  for (std::size_t i = 0; i < 8; ++i) CHECK(f[i] == 4.0);
  for (std::size_t i = 8; i < 18; ++i) CHECK(f[i] == 0.0);

  // Left = TP9, AF7 (channels 0, 1), right = AF8, TP10 (2, 3).
  for (std::size_t band = 0; band < 2; ++band) {
    w.data[band * 4 + 0].assign(20, 2.0);
    w.data[band * 4 + 1].assign(20, 2.0);
    w.data[band * 4 + 2].assign(20, 1.0);
    w.data[band * 4 + 3].assign(20, 1.0);
  }
  f = spectral_features(w.view());
  CHECK(f[16] == 1.0);
  CHECK(f[17] == 1.0);
}

TEST_CASE("correlation features: identical and negated series") {
  Rng rng(5);
  OwnedWindow w;
  std::vector<double> base(30);
  for (double& v : base) v = rng.normal();
  for (auto& s : w.data) s = base;
  for (double v : correlation_features(w.view())) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
  for (double& v : w.data[1]) v = -v;
  const auto c = correlation_features(w.view());
  CHECK(c[0] == doctest::Approx(-1.0).epsilon(1e-14));  // pair (0, 1)
  w.data[2].assign(30, 7.0);
  const auto z = correlation_features(w.view());
  CHECK(z[1] == 0.0);  // pair (0, 2) has a constant member
}

TEST_CASE("86 features match independent oracles on 1000 random windows") {
  Rng rng(99);
  const double fs = 256.0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 16 + rng.below(241);
    const auto w = random_window(rng, n);
    const auto f = window_features(w.view(), fs);
    std::vector<double> expect;
    for (const auto& s : w.data) expect.push_back(oracle::mean(s));
    for (const auto& s : w.data) expect.push_back(oracle::variance(s));
    for (std::size_t band = 0; band < 2; ++band) {
      const auto& d = w.data;
      const std::size_t b = band * 4;
      const double left = (oracle::mean(d[b + 0]) + oracle::mean(d[b + 1])) / 2.0;
      const double right = (oracle::mean(d[b + 2]) + oracle::mean(d[b + 3])) / 2.0;
      expect.push_back(std::abs(left - right));
    }
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = i + 1; j < 8; ++j) expect.push_back(oracle::pearson(w.data[i], w.data[j]));
    }
    for (const auto& s : w.data) expect.push_back(oracle::kurtosis(s));
    for (const auto& s : w.data) expect.push_back(oracle::skewness(s));
    for (const auto& s : w.data) expect.push_back(oracle::entropy_bits(s, 16));
    for (const auto& s : w.data) expect.push_back(oracle::mobility(s, fs));
    for (const auto& s : w.data) expect.push_back(oracle::complexity(s, fs));
    REQUIRE(expect.size() == 86);
    for (std::size_t k = 0; k < 86; ++k) {
      const double err = std::abs(f[k] - expect[k]) / std::max(1.0, std::abs(expect[k]));
      worst = std::max(worst, err);
      if (err > 1e-10) FAIL_CHECK("feature " << feature_names()[k] << " got " << f[k] << " want " << expect[k]);
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("statistical features: count, symmetry, degenerate windows") {
  Rng rng(3);
  auto w = random_window(rng, 40);
  CHECK(statistical_features(w.view(), 256.0).size() == 40);

  std::vector<double> sym{1, 2, 3, 4, 5, 5, 4, 3, 2, 1, -3, 9};
  std::vector<double> mirrored;
  for (double v : sym) mirrored.push_back(v);
  for (double v : sym) mirrored.push_back(6.0 - v);  // reflection about 3
  CHECK(std::abs(skewness(mirrored)) < 1e-12);

  w.data[5].assign(40, 2.0);
  try {
    statistical_features(w.view(), 256.0);
    FAIL("expected DegenerateWindow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateWindow);
  }
}

TEST_CASE("Hjorth parameters of sines and noise") {
  std::vector<double> y(256);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(2.0 * std::numbers::pi * 5.0 * i / 256.0);
  const auto h = hjorth(y, 256.0);
  CHECK(std::abs(h.mobility - 2.0 * std::numbers::pi * 5.0) / (2.0 * std::numbers::pi * 5.0) < 0.02);
  CHECK(std::abs(h.complexity - 1.0) < 0.02);
  CHECK(h.mobility == doctest::Approx(oracle::mobility(y, 256.0)).epsilon(1e-12));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<double> noise(256);
    for (double& v : noise) v = rng.normal();
    CHECK(hjorth(noise, 256.0).complexity > 1.0);
  }
  CHECK_THROWS_AS(hjorth(std::vector<double>(10, 1.0), 256.0), Error);
}

TEST_CASE("Shannon entropy") {
  CHECK(shannon_entropy(std::vector<double>(32, 1.0)) == 0.0);
  std::vector<double> uniform;
  for (int b = 0; b < 16; ++b) {
    for (int r = 0; r < 4; ++r) uniform.push_back(b + 0.5);
  }
  CHECK(shannon_entropy(uniform) == doctest::Approx(4.0).epsilon(1e-15));
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> y(64);
    for (double& v : y) v = rng.normal();
    CHECK(std::abs(shannon_entropy(y) - oracle::entropy_bits(y, 16)) < 1e-12);
  }
}

TEST_CASE("scale equivariance of features") {
  Rng rng(6);
  const auto w = random_window(rng, 60);
  OwnedWindow scaled = w;
  const double a = 3.7;
  for (auto& s : scaled.data) {
    for (double& v : s) v *= a;
  }
  const auto f = window_features(w.view(), 256.0);
  const auto g = window_features(scaled.view(), 256.0);
  for (std::size_t k = 0; k < 8; ++k) CHECK(close(g[k], a * f[k], 1e-12));
  for (std::size_t k = 8; k < 16; ++k) CHECK(close(g[k], a * a * f[k], 1e-12));
  for (std::size_t k = 18; k < 46; ++k) CHECK(std::abs(g[k] - f[k]) < 1e-9);
  // kurtosis, skewness, (entropy), mobility, complexity
  for (std::size_t k = 46; k < 62; ++k) CHECK(std::abs(g[k] - f[k]) < 1e-9);
  for (std::size_t k = 70; k < 86; ++k) CHECK(std::abs(g[k] - f[k]) < 1e-9);
}

TEST_CASE("z-score fitted on one set is applied unchanged to another") {
  Rng rng(10);
  Matrix train(50, 3), test(10, 3);
  for (double& v : train.data()) v = rng.normal() * 4.0 + 2.0;
  for (double& v : test.data()) v = rng.normal();
  for (std::size_t r = 0; r < 50; ++r) train(r, 2) = 5.0;  // constant column
  const auto z = ZScore::fit(train);
  const auto t = z.apply(train);
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> col;
    for (std::size_t r = 0; r < 50; ++r) col.push_back(t(r, c));
    CHECK(std::abs(oracle::mean(col)) < 1e-10);
    if (c < 2) CHECK(std::abs(std::sqrt(oracle::variance(col)) - 1.0) < 1e-10);
  }
  const auto u = z.apply(test);
  for (std::size_t r = 0; r < 10; ++r) {
    for (std::size_t c = 0; c < 2; ++c) CHECK(u(r, c) == doctest::Approx((test(r, c) - z.mean[c]) / z.std[c]));
  }
}

TEST_CASE("assemble: synthetic epochs to a deterministic 86-column matrix") {
  experiment::SyntheticDatasetConfig cfg;
  cfg.subjects = 1;
  cfg.protocol.repetitions_per_color = 2;
  cfg.protocol.trial_duration = 24.0;
  const auto trials = experiment::generate_synthetic_dataset(cfg);
  auto epochs = experiment::epoch_synthetic(trials, cfg.protocol);
  REQUIRE(epochs.size() == 6);
  ExtractConfig ec;
  ec.window.length_ms = 500;
  ExtractStats stats;
  const auto fm = assemble(epochs, ec, &stats);
  CHECK(fm.cols() == 86);
  CHECK(fm.names == feature_names());
  CHECK(stats.epochs == 6);
  CHECK(fm.rows() == stats.windows);
  CHECK(fm.rows() <= 6 * window_count(512, ec.window));

  epochs.push_back(epochs.front());
  const auto again = assemble(epochs, ec);
  const std::size_t per = fm.rows() / 6;
  for (std::size_t r = 0; r < per; ++r) {
    for (std::size_t c = 0; c < 86; ++c) CHECK(again.values(fm.rows() + r, c) == again.values(r, c));
  }

  const auto text = serialize_feature_matrix(fm);
  const auto back = parse_feature_matrix(text);
  CHECK(back.values == fm.values);
  CHECK(back.labels == fm.labels);
  CHECK(back.windows == fm.windows);
}

TEST_CASE("artifact removal happens after the transform") {
  // A huge spike in one channel removes that span from every channel's power
  // series, but the transform itself sees the raw epoch.
  experiment::SyntheticDatasetConfig cfg;
  cfg.subjects = 1;
  cfg.protocol.repetitions_per_color = 1;
  cfg.protocol.trial_duration = 12.0;
  auto epochs = experiment::epoch_synthetic(experiment::generate_synthetic_dataset(cfg), cfg.protocol);
  auto& ep = epochs.front();
  for (std::size_t i = 240; i < 252; ++i) ep.channels[2][i] += (i % 2 ? 5000.0 : -5000.0);
  ExtractConfig ec;
  const auto bp = epoch_band_power(ep, ec);
  CHECK(bp.mask.flags[20]);
  CHECK(bp.retained.size() == 512 - 12 * bp.mask.flagged_count());
  for (const auto& b : bp.bands) CHECK(b.alpha.size() == bp.retained.size());
  // Retained values equal the transform of the raw epoch at those indices.
  const auto full = dsp::band_power(dsp::cwt_power(ep.channels[0], ec.freqs, 256.0));
  for (std::size_t i = 0; i < bp.retained.size(); ++i) CHECK(bp.bands[0].alpha[i] == full.alpha[bp.retained[i]]);
}
