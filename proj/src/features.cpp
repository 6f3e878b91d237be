#include "chromaeeg/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "chromaeeg/error.hpp"
#include "chromaeeg/text_io.hpp"

namespace chromaeeg::features {

namespace {

constexpr std::array<std::string_view, 2> kBandNames{"alpha", "beta"};
constexpr std::array<std::string_view, 4> kMetaColumns{"label", "subject", "trial", "window"};

std::vector<std::string> build_feature_names() {
  std::vector<std::string> names;
  names.reserve(kFeatureCount);
  for (std::size_t s = 0; s < kSeriesCount; ++s) names.push_back("mean_" + series_name(s));
  for (std::size_t s = 0; s < kSeriesCount; ++s) names.push_back("var_" + series_name(s));
  for (auto band : kBandNames) names.push_back("hemdiff_" + std::string(band));
  for (std::size_t i = 0; i < kSeriesCount; ++i) {
    for (std::size_t j = i + 1; j < kSeriesCount; ++j) {
      names.push_back("corr_" + series_name(i) + "__" + series_name(j));
    }
  }
  for (std::string_view stat : {"kurtosis", "skewness", "entropy", "mobility", "complexity"}) {
    for (std::size_t s = 0; s < kSeriesCount; ++s) names.push_back(std::string(stat) + "_" + series_name(s));
  }
  return names;
}

// Central moments m2, m3, m4 (population) in one place so skewness and
// kurtosis agree on the mean they subtract.
struct Moments {
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

Moments central_moments(std::span<const double> y) {
  const double mu = mean(y);
  Moments m;
  for (double v : y) {
    const double d = v - mu;
    const double d2 = d * d;
    m.m2 += d2;
    m.m3 += d2 * d;
    m.m4 += d2 * d2;
  }
  const double n = static_cast<double>(y.size());
  m.m2 /= n;
  m.m3 /= n;
  m.m4 /= n;
  return m;
}

std::vector<double> scaled_difference(std::span<const double> y, double sample_rate) {
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = (y[i + 1] - y[i]) * sample_rate;
  return d;
}

}  // namespace

std::string series_name(std::size_t s) {
  return std::string(kBandNames[s / kChannelCount]) + "_" + std::string(kChannelNames[s % kChannelCount]);
}

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = build_feature_names();
  return names;
}

std::string feature_manifest() {
  std::string out(kFeatureManifestVersion);
  out += '\n';
  for (const auto& n : feature_names()) {
    out += n;
    out += '\n';
  }
  return out;
}

bool WindowConfig::is_supported(int length_ms) {
  return std::find(kSupportedWindowsMs.begin(), kSupportedWindowsMs.end(), length_ms) != kSupportedWindowsMs.end();
}

std::size_t WindowConfig::length_samples() const {
  return static_cast<std::size_t>(std::floor(length_ms * sample_rate / 1000.0 + 1e-9));
}

std::size_t WindowConfig::step_samples() const { return length_samples() / 2; }

void WindowConfig::validate() const {
  if (!is_supported(length_ms)) {
    throw Error(ErrorKind::InvalidArgument, "window length " + std::to_string(length_ms) +
                                                " ms is not one of 100, 200, 500, 1000");
  }
  if (length_samples() < 4) throw Error(ErrorKind::InvalidArgument, "window shorter than 4 samples");
}

std::size_t window_count(std::size_t series_length, const WindowConfig& cfg) {
  const std::size_t len = cfg.length_samples();
  if (series_length < len) return 0;
  return (series_length - len) / cfg.step_samples() + 1;
}

std::vector<Window> slide_windows(std::span<const dsp::BandPower> bands, const WindowConfig& cfg) {
  if (bands.size() != kChannelCount) {
    throw Error(ErrorKind::DimensionMismatch, "expected band power for 4 channels");
  }
  const std::size_t n = bands[0].alpha.size();
  for (const auto& bp : bands) {
    if (bp.alpha.size() != n || bp.beta.size() != n) {
      throw Error(ErrorKind::DimensionMismatch, "band-power series lengths differ");
    }
  }
  const std::size_t len = cfg.length_samples();
  if (len < 4) throw Error(ErrorKind::InvalidArgument, "window shorter than 4 samples");
  if (n < len) {
    throw Error(ErrorKind::SeriesTooShort, "series of " + std::to_string(n) + " samples is shorter than the " +
                                               std::to_string(len) + "-sample window");
  }
  const std::size_t count = window_count(n, cfg);
  const std::size_t step = cfg.step_samples();
  std::vector<Window> out(count);
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t start = w * step;
    out[w].start = start;
    for (std::size_t c = 0; c < kChannelCount; ++c) {
      out[w].series[c] = std::span<const double>(bands[c].alpha).subspan(start, len);
      out[w].series[kChannelCount + c] = std::span<const double>(bands[c].beta).subspan(start, len);
    }
  }
  return out;
}

double mean(std::span<const double> y) {
  double s = 0.0;
  for (double v : y) s += v;
  return s / static_cast<double>(y.size());
}

double variance(std::span<const double> y) {
  const double mu = mean(y);
  double ss = 0.0;
  for (double v : y) ss += (v - mu) * (v - mu);
  return ss / static_cast<double>(y.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::LengthMismatch, "correlation inputs differ in length");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double skewness(std::span<const double> y) {
  const auto m = central_moments(y);
  if (m.m2 == 0.0) throw Error(ErrorKind::ZeroVariance, "skewness of a constant series");
  return m.m3 / std::pow(m.m2, 1.5);
}

double kurtosis(std::span<const double> y) {
  const auto m = central_moments(y);
  if (m.m2 == 0.0) throw Error(ErrorKind::ZeroVariance, "kurtosis of a constant series");
  return m.m4 / (m.m2 * m.m2) - 3.0;
}

double shannon_entropy(std::span<const double> y, std::size_t bins) {
  if (bins == 0) throw Error(ErrorKind::InvalidArgument, "entropy needs at least one bin");
  if (y.size() < bins) throw Error(ErrorKind::SeriesTooShort, "fewer samples than histogram bins");
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double lo = *lo_it;
  const double width = *hi_it - lo;
  if (width == 0.0) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double v : y) {
    auto b = static_cast<std::size_t>((v - lo) / width * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    ++counts[b];
  }
  const double n = static_cast<double>(y.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

Hjorth hjorth(std::span<const double> y, double sample_rate) {
  if (y.size() < 3) throw Error(ErrorKind::SeriesTooShort, "Hjorth parameters need at least 3 samples");
  const auto dy = scaled_difference(y, sample_rate);
  const auto ddy = scaled_difference(dy, sample_rate);
  const double v0 = variance(y);
  const double v1 = variance(dy);
  const double v2 = variance(ddy);
  if (v0 == 0.0 || v1 == 0.0) throw Error(ErrorKind::ZeroVariance, "Hjorth parameters of a degenerate series");
  Hjorth h;
  h.mobility = std::sqrt(v1 / v0);
  h.complexity = std::sqrt(v2 / v1) / h.mobility;
  return h;
}

std::array<double, kSpectralCount> spectral_features(const Window& w) {
  std::array<double, kSpectralCount> out{};
  std::array<double, kSeriesCount> means{};
  for (std::size_t s = 0; s < kSeriesCount; ++s) {
    means[s] = mean(w.series[s]);
    out[s] = means[s];
    out[kSeriesCount + s] = variance(w.series[s]);
  }
  for (std::size_t band = 0; band < 2; ++band) {
    const std::size_t base = band * kChannelCount;
    const double left = 0.5 * (means[base + kLeftChannels[0]] + means[base + kLeftChannels[1]]);
    const double right = 0.5 * (means[base + kRightChannels[0]] + means[base + kRightChannels[1]]);
    out[2 * kSeriesCount + band] = std::abs(left - right);
  }
  return out;
}

std::array<double, kCorrelationCount> correlation_features(const Window& w) {
  std::array<double, kCorrelationCount> out{};
  std::size_t k = 0;
  for (std::size_t i = 0; i < kSeriesCount; ++i) {
    for (std::size_t j = i + 1; j < kSeriesCount; ++j) out[k++] = pearson(w.series[i], w.series[j]);
  }
  return out;
}

std::array<double, kStatisticalCount> statistical_features(const Window& w, double sample_rate,
                                                           std::size_t entropy_bins) {
  if (w.length() < 4) throw Error(ErrorKind::SeriesTooShort, "statistical features need 4 samples");
  std::array<double, kStatisticalCount> out{};
  for (std::size_t s = 0; s < kSeriesCount; ++s) {
    const auto y = w.series[s];
    const auto m = central_moments(y);
    if (m.m2 == 0.0) {
      throw Error(ErrorKind::DegenerateWindow, "series " + series_name(s) + " is constant in this window");
    }
    Hjorth h;
    try {
      h = hjorth(y, sample_rate);
    } catch (const Error& e) {
      throw Error(ErrorKind::DegenerateWindow, "series " + series_name(s) + ": " + e.what());
    }
    out[s] = m.m4 / (m.m2 * m.m2) - 3.0;
    out[kSeriesCount + s] = m.m3 / std::pow(m.m2, 1.5);
    out[2 * kSeriesCount + s] = shannon_entropy(y, std::min(entropy_bins, y.size()));
    out[3 * kSeriesCount + s] = h.mobility;
    out[4 * kSeriesCount + s] = h.complexity;
  }
  return out;
}

std::array<double, kFeatureCount> window_features(const Window& w, double sample_rate, std::size_t entropy_bins) {
  std::array<double, kFeatureCount> out{};
  const auto spectral = spectral_features(w);
  const auto corr = correlation_features(w);
  const auto stats = statistical_features(w, sample_rate, entropy_bins);
  auto it = std::copy(spectral.begin(), spectral.end(), out.begin());
  it = std::copy(corr.begin(), corr.end(), it);
  std::copy(stats.begin(), stats.end(), it);
  return out;
}

ZScore ZScore::fit(const Matrix& x) {
  ZScore z;
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0) throw Error(ErrorKind::Empty, "cannot fit z-score on zero rows");
  z.mean.assign(d, 0.0);
  z.std.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) z.mean[c] += x(r, c);
  }
  for (auto& m : z.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double dv = x(r, c) - z.mean[c];
      z.std[c] += dv * dv;
    }
  }
  for (auto& s : z.std) {
    s = std::sqrt(s / static_cast<double>(n));
    if (!(s > 0.0)) s = 1.0;
  }
  return z;
}

Matrix ZScore::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) throw Error(ErrorKind::DimensionMismatch, "z-score width differs from matrix");
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / std[c];
  }
  return out;
}

void FeatureMatrix::append(const FeatureVector& v) {
  if (names.empty()) names = feature_names();
  values.append_row(v.values);
  labels.push_back(v.label);
  subjects.push_back(v.subject_id);
  trials.push_back(v.trial_id);
  windows.push_back(v.window_index);
}

FeatureVector FeatureMatrix::row(std::size_t i) const {
  if (cols() != kFeatureCount) throw Error(ErrorKind::DimensionMismatch, "feature vectors have 86 columns");
  FeatureVector v;
  const auto r = values.row(i);
  std::copy(r.begin(), r.end(), v.values.begin());
  v.label = labels[i];
  v.subject_id = subjects[i];
  v.trial_id = trials[i];
  v.window_index = windows[i];
  return v;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> idx) const {
  FeatureMatrix out;
  out.names = names;
  out.values = values.select_rows(idx);
  out.normalization = normalization;
  for (std::size_t i : idx) {
    out.labels.push_back(labels[i]);
    out.subjects.push_back(subjects[i]);
    out.trials.push_back(trials[i]);
    out.windows.push_back(windows[i]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::normalized() const {
  FeatureMatrix out = *this;
  out.normalization = ZScore::fit(values);
  out.values = out.normalization->apply(values);
  return out;
}

std::string serialize_feature_matrix(const FeatureMatrix& fm) {
  std::string out;
  const auto& names = fm.names.empty() ? feature_names() : fm.names;
  for (const auto& n : names) {
    out += n;
    out += ',';
  }
  out += "label,subject,trial,window\n";
  for (std::size_t r = 0; r < fm.rows(); ++r) {
    for (double v : fm.values.row(r)) {
      out += io::format_double(v);
      out += ',';
    }
    out += color_name(static_cast<Color>(fm.labels[r]));
    out += ',' + std::to_string(fm.subjects[r]) + ',' + std::to_string(fm.trials[r]) + ',' +
           std::to_string(fm.windows[r]) + '\n';
  }
  return out;
}

FeatureMatrix parse_feature_matrix(std::string_view csv_text) {
  const auto lines = io::split_lines(csv_text);
  if (lines.empty()) throw Error(ErrorKind::Empty, "feature file is empty");
  const auto header = io::split_csv(lines.front());
  if (header.size() < kMetaColumns.size() + 1) throw Error(ErrorKind::MissingColumn, "feature header too short");
  const std::size_t n_feat = header.size() - kMetaColumns.size();
  for (std::size_t i = 0; i < kMetaColumns.size(); ++i) {
    if (io::trim(header[n_feat + i]) != kMetaColumns[i]) {
      throw Error(ErrorKind::MissingColumn, "column '" + std::string(kMetaColumns[i]) + "' is absent");
    }
  }
  FeatureMatrix fm;
  for (std::size_t i = 0; i < n_feat; ++i) fm.names.emplace_back(io::trim(header[i]));
  fm.values = Matrix(0, n_feat);
  std::vector<double> row(n_feat);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (io::trim(lines[li]).empty()) continue;
    const auto f = io::split_csv(lines[li]);
    const std::string where = "feature line " + std::to_string(li + 1);
    if (f.size() != header.size()) throw Error(ErrorKind::MalformedRow, where + " has wrong width");
    for (std::size_t i = 0; i < n_feat; ++i) {
      const auto v = io::parse_double(f[i]);
      if (!v || !std::isfinite(*v)) throw Error(ErrorKind::MalformedRow, where + ": bad value");
      row[i] = *v;
    }
    fm.values.append_row(row);
    fm.labels.push_back(static_cast<int>(parse_color(f[n_feat])));
    const auto subject = io::parse_int(f[n_feat + 1]);
    const auto trial = io::parse_int(f[n_feat + 2]);
    const auto window = io::parse_int(f[n_feat + 3]);
    if (!subject || !trial || !window) throw Error(ErrorKind::MalformedRow, where + ": bad provenance");
    fm.subjects.push_back(static_cast<int>(*subject));
    fm.trials.push_back(static_cast<int>(*trial));
    fm.windows.push_back(static_cast<int>(*window));
  }
  return fm;
}

EpochBandPower epoch_band_power(const EpochedTrial& epoch, const ExtractConfig& cfg) {
  const double fs = cfg.window.sample_rate;
  std::array<FlagMask, kChannelCount> masks;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto& seg = epoch.channels[c];
    const double threshold = cfg.artifact_threshold
                                 ? *cfg.artifact_threshold
                                 : auto_threshold(seg, cfg.artifact_window, cfg.artifact_median_multiple);
    masks[c] = flag_artifacts(seg, cfg.artifact_window, threshold);
  }
  EpochBandPower out;
  out.mask = merge_masks(masks);

  for (std::size_t c = 0; c < kChannelCount; ++c) {
    auto spec = dsp::cwt_power(epoch.channels[c], cfg.freqs, fs, cfg.cwt);
    spec.channel = std::string(kChannelNames[c]);
    auto bp = dsp::band_power(spec);
    auto alpha = apply_flags(bp.alpha, out.mask);
    auto beta = apply_flags(bp.beta, out.mask);
    bp.alpha = std::move(alpha.values);
    bp.beta = std::move(beta.values);
    if (c == 0) out.retained = std::move(alpha.retained);
    out.bands[c] = std::move(bp);
  }
  return out;
}

FeatureMatrix assemble(std::span<const EpochedTrial> epochs, const ExtractConfig& cfg, ExtractStats* stats) {
  if (epochs.empty()) throw Error(ErrorKind::Empty, "no epochs to extract features from");
  cfg.window.validate();
  ExtractStats local;
  FeatureMatrix fm;
  fm.names = feature_names();
  fm.values = Matrix(0, kFeatureCount);
  std::map<std::pair<int, int>, int> next_window;

  for (const auto& epoch : epochs) {
    ++local.epochs;
    const auto ebp = epoch_band_power(epoch, cfg);
    local.flagged_artifact_windows += ebp.mask.flagged_count();
    if (ebp.bands[0].alpha.size() < cfg.window.length_samples()) {
      ++local.short_epochs;
      continue;
    }
    const auto windows = slide_windows(ebp.bands, cfg.window);
    int& counter = next_window[{epoch.subject_id, epoch.trial_id}];
    for (const auto& w : windows) {
      FeatureVector v;
      try {
        v.values = window_features(w, cfg.window.sample_rate, cfg.entropy_bins);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateWindow) throw;
        ++local.degenerate_windows;
        ++counter;
        continue;
      }
      v.label = static_cast<int>(epoch.label);
      v.subject_id = epoch.subject_id;
      v.trial_id = epoch.trial_id;
      v.window_index = counter++;
      fm.append(v);
      ++local.windows;
    }
  }
  if (stats) *stats = local;
  return fm;
}

}  // namespace chromaeeg::features
