#include <doctest.h>

#include "chromaeeg/error.hpp"
#include "chromaeeg/preprocess.hpp"
#include "chromaeeg/rng.hpp"
#include "oracles.hpp"

using namespace chromaeeg;

TEST_CASE("constant signal flags nothing") {
  const std::vector<double> y(120, 3.5);
  const auto m = flag_artifacts(y, 12, 1e-9);
  CHECK(m.flags.size() == 10);
  CHECK(m.flagged_count() == 0);
}

TEST_CASE("a single spike window is flagged and nothing else") {
  Rng rng(1);
  std::vector<double> y(240);
  for (double& v : y) v = rng.normal();  // variance ~1, far below 100
  for (std::size_t i = 36; i < 48; ++i) y[i] = (i % 2 ? 1000.0 : -1000.0);
  const auto m = flag_artifacts(y, 12, 100.0);
  // Independent check of the window variances.
  for (std::size_t w = 0; w < m.flags.size(); ++w) {
    const std::vector<double> win(y.begin() + static_cast<long>(w * 12), y.begin() + static_cast<long>(w * 12 + 12));
    CHECK(m.flags[w] == (oracle::variance(win) > 100.0));
  }
  CHECK(m.flagged_count() == 1);
  CHECK(m.flags[3]);
}

TEST_CASE("tiny threshold flags every noisy window, partial tail included") {
  Rng rng(2);
  std::vector<double> y(125);
  for (double& v : y) v = rng.normal();
  const auto m = flag_artifacts(y, 12, 1e-300);
  CHECK(m.flags.size() == 11);  // ceil(125 / 12)
  CHECK(m.flagged_count() == 11);
  const auto v = window_variances(y, 12);
  REQUIRE(v.size() == 11);
  CHECK(v.back() == doctest::Approx(oracle::variance({y.begin() + 120, y.end()})).epsilon(1e-12));
}

TEST_CASE("flagging ignores a constant offset") {
  Rng rng(3);
  std::vector<double> y(96), z(96);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.normal() * (i > 40 && i < 60 ? 10.0 : 1.0);
    z[i] = y[i] + 1234.5;
  }
  CHECK(flag_artifacts(y, 12, 5.0).flags == flag_artifacts(z, 12, 5.0).flags);
}

TEST_CASE("flag_artifacts contract") {
  const std::vector<double> y(10, 0.0);
  CHECK_THROWS_AS(flag_artifacts(y, 12, 1.0), Error);
  CHECK_THROWS_AS(flag_artifacts(std::vector<double>(24, 0.0), 1, 1.0), Error);
  CHECK_THROWS_AS(flag_artifacts(std::vector<double>(24, 0.0), 12, 0.0), Error);
}

TEST_CASE("apply_flags identity, empty and index arithmetic") {
  std::vector<double> p(60);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i) * 0.5;
  FlagMask m;
  m.window_length = 12;
  m.signal_length = 60;
  m.threshold = 1.0;
  m.flags.assign(5, false);
  auto out = apply_flags(p, m);
  CHECK(out.values == p);

  m.flags.assign(5, true);
  CHECK(apply_flags(p, m).values.empty());

  m.flags.assign(5, false);
  m.flags[0] = true;
  out = apply_flags(p, m);
  CHECK(out.values.size() == 48);
  CHECK(out.retained.front() == 12);
  for (std::size_t i = 1; i < out.retained.size(); ++i) CHECK(out.retained[i] > out.retained[i - 1]);

  m.signal_length = 61;
  CHECK_THROWS_AS(apply_flags(p, m), Error);
}

TEST_CASE("auto threshold is five times the median window variance; masks merge by OR") {
  std::vector<double> y;
  for (int w = 0; w < 5; ++w) {
    for (int i = 0; i < 12; ++i) y.push_back((i % 2 ? 1.0 : -1.0) * (w + 1));
  }
  // Window variances 1, 4, 9, 16, 25 -> median 9.
  CHECK(auto_threshold(y, 12) == doctest::Approx(45.0));
  auto a = flag_artifacts(y, 12, 10.0);
  auto b = flag_artifacts(y, 12, 20.0);
  b.flags[0] = true;
  const std::vector<FlagMask> both{a, b};
  const auto merged = merge_masks(both);
  CHECK(merged.flags == std::vector<bool>{true, false, false, true, true});
}
