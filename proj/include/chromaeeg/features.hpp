#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chromaeeg/dsp.hpp"
#include "chromaeeg/ingest.hpp"
#include "chromaeeg/matrix.hpp"
#include "chromaeeg/preprocess.hpp"

namespace chromaeeg::features {

inline constexpr std::size_t kSeriesCount = 8;  // {alpha, beta} x {TP9, AF7, AF8, TP10}
inline constexpr std::size_t kSpectralCount = 18;
inline constexpr std::size_t kCorrelationCount = 28;
inline constexpr std::size_t kStatisticalCount = 40;
inline constexpr std::size_t kFeatureCount = kSpectralCount + kCorrelationCount + kStatisticalCount;
static_assert(kFeatureCount == 86);
static_assert(kCorrelationCount == kSeriesCount * (kSeriesCount - 1) / 2);

inline constexpr std::size_t kDefaultEntropyBins = 16;
inline constexpr std::array<int, 4> kSupportedWindowsMs{100, 200, 500, 1000};
inline constexpr std::string_view kFeatureManifestVersion = "chromaeeg-features-v1";

/// Series index s = band * 4 + channel, band 0 = alpha, 1 = beta.
std::string series_name(std::size_t s);
/// Channels on each hemisphere (indices into the channel order).
inline constexpr std::array<std::size_t, 2> kLeftChannels{0, 1};   // TP9, AF7
inline constexpr std::array<std::size_t, 2> kRightChannels{3, 2};  // TP10, AF8

/// The 86 column names, ordered [spectral 18 | correlation 28 | statistical 40].
const std::vector<std::string>& feature_names();
/// Text manifest: version line followed by one name per line.
std::string feature_manifest();

struct WindowConfig {
  int length_ms = 200;
  double sample_rate = kMuseSampleRate;

  static bool is_supported(int length_ms);
  /// Rounded down to whole samples (200 ms at 256 Hz -> 51).
  std::size_t length_samples() const;
  /// 50 % overlap: floor(length / 2).
  std::size_t step_samples() const;
  void validate() const;
};

/// Number of full windows: floor((n - L) / step) + 1, or 0 when n < L.
std::size_t window_count(std::size_t series_length, const WindowConfig& cfg);

/// Eight aligned views into band-power series sharing one index range.
struct Window {
  std::array<std::span<const double>, kSeriesCount> series;
  std::size_t start = 0;
  std::size_t length() const { return series[0].size(); }
};

/// `bands` holds one BandPower per channel in TP9, AF7, AF8, TP10 order; the
/// returned windows view into it. The last partial window is discarded.
std::vector<Window> slide_windows(std::span<const dsp::BandPower> bands, const WindowConfig& cfg);

double mean(std::span<const double> y);
/// Population variance.
double variance(std::span<const double> y);
/// Pearson correlation; 0 when either series has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);
/// Standardised third central moment; throws ZeroVariance for constant input.
double skewness(std::span<const double> y);
/// Fisher excess kurtosis (Gaussian -> 0); throws ZeroVariance for constant input.
double kurtosis(std::span<const double> y);
/// Equal-width histogram over [min, max], entropy in bits. Constant input -> 0.
double shannon_entropy(std::span<const double> y, std::size_t bins = kDefaultEntropyBins);

struct Hjorth {
  double mobility = 0.0;
  double complexity = 0.0;
};
/// Derivative = forward difference * sample_rate.
/// mobility = sqrt(var(dy) / var(y)), complexity = mobility(dy) / mobility(y).
Hjorth hjorth(std::span<const double> y, double sample_rate);

std::array<double, kSpectralCount> spectral_features(const Window& w);
std::array<double, kCorrelationCount> correlation_features(const Window& w);
/// Throws DegenerateWindow when a sub-series is constant.
std::array<double, kStatisticalCount> statistical_features(const Window& w, double sample_rate,
                                                           std::size_t entropy_bins = kDefaultEntropyBins);
/// All 86 in canonical order.
std::array<double, kFeatureCount> window_features(const Window& w, double sample_rate,
                                                  std::size_t entropy_bins = kDefaultEntropyBins);

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  int label = 0;
  int subject_id = 0;
  int trial_id = 0;
  int window_index = 0;  // running index within the trial
};

/// Per-column standardisation fitted on one set of rows and applied to others.
struct ZScore {
  std::vector<double> mean;
  std::vector<double> std;  // population std; zero-variance columns use 1

  static ZScore fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

struct FeatureMatrix {
  std::vector<std::string> names;
  Matrix values;
  std::vector<int> labels;
  std::vector<int> subjects;
  std::vector<int> trials;
  std::vector<int> windows;
  std::optional<ZScore> normalization;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  void append(const FeatureVector& v);
  FeatureVector row(std::size_t i) const;
  FeatureMatrix select_rows(std::span<const std::size_t> idx) const;
  /// Copy with z-score fitted on (and applied to) these rows.
  FeatureMatrix normalized() const;
};

/// CSV: 86 names then label,subject,trial,window.
std::string serialize_feature_matrix(const FeatureMatrix& fm);
FeatureMatrix parse_feature_matrix(std::string_view csv_text);

struct ExtractConfig {
  WindowConfig window{};
  std::vector<double> freqs = dsp::default_frequencies();
  dsp::CwtOptions cwt{};
  /// nullopt -> k * median window variance, per channel and epoch.
  std::optional<double> artifact_threshold;
  double artifact_median_multiple = kDefaultArtifactMedianMultiple;
  std::size_t artifact_window = kDefaultArtifactWindow;
  std::size_t entropy_bins = kDefaultEntropyBins;
};

/// Band power of one epoch after artifact removal. The transform always runs
/// on the full raw epoch; flagged spans (union over channels) are removed from
/// the power series afterwards.
struct EpochBandPower {
  std::array<dsp::BandPower, kChannelCount> bands;
  FlagMask mask;
  std::vector<std::size_t> retained;
};
EpochBandPower epoch_band_power(const EpochedTrial& epoch, const ExtractConfig& cfg);

struct ExtractStats {
  std::size_t epochs = 0;
  std::size_t windows = 0;
  std::size_t degenerate_windows = 0;
  std::size_t short_epochs = 0;  // fewer retained samples than one window
  std::size_t flagged_artifact_windows = 0;
};

/// Feature rows for every window of every epoch, in epoch then window order.
FeatureMatrix assemble(std::span<const EpochedTrial> epochs, const ExtractConfig& cfg,
                       ExtractStats* stats = nullptr);

}  // namespace chromaeeg::features
