#include "chromaeeg/preprocess.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "chromaeeg/error.hpp"

namespace chromaeeg {

std::size_t FlagMask::flagged_count() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
}

std::vector<double> window_variances(std::span<const double> segment, std::size_t window_length) {
  if (window_length < 2) throw Error(ErrorKind::InvalidArgument, "artifact window must hold at least 2 samples");
  if (segment.size() < window_length) {
    throw Error(ErrorKind::SegmentTooShort, "segment of " + std::to_string(segment.size()) +
                                                " samples is shorter than one window");
  }
  const std::size_t n_windows = (segment.size() + window_length - 1) / window_length;
  std::vector<double> out(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    const std::size_t begin = w * window_length;
    const std::size_t end = std::min(begin + window_length, segment.size());
    const double n = static_cast<double>(end - begin);
    double mean = 0.0;
    for (std::size_t i = begin; i < end; ++i) mean += segment[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) ss += (segment[i] - mean) * (segment[i] - mean);
    out[w] = ss / n;
  }
  return out;
}

FlagMask flag_artifacts(std::span<const double> segment, std::size_t window_length, double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorKind::InvalidArgument, "artifact threshold must be positive");
  const auto variances = window_variances(segment, window_length);
  FlagMask mask;
  mask.window_length = window_length;
  mask.signal_length = segment.size();
  mask.threshold = threshold;
  mask.flags.resize(variances.size());
  for (std::size_t w = 0; w < variances.size(); ++w) mask.flags[w] = variances[w] > threshold;
  return mask;
}

double auto_threshold(std::span<const double> segment, std::size_t window_length, double median_multiple) {
  auto variances = window_variances(segment, window_length);
  const std::size_t mid = variances.size() / 2;
  std::nth_element(variances.begin(), variances.begin() + static_cast<std::ptrdiff_t>(mid), variances.end());
  double median = variances[mid];
  if (variances.size() % 2 == 0) {
    const double lower = *std::max_element(variances.begin(), variances.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  const double threshold = median_multiple * median;
  return threshold > 0.0 ? threshold : std::numeric_limits<double>::min();
}

FlagMask merge_masks(std::span<const FlagMask> masks) {
  if (masks.empty()) throw Error(ErrorKind::InvalidArgument, "no masks to merge");
  FlagMask out = masks.front();
  for (const auto& m : masks.subspan(1)) {
    if (m.window_length != out.window_length || m.signal_length != out.signal_length) {
      throw Error(ErrorKind::MaskLengthMismatch, "masks cover different time bases");
    }
    for (std::size_t w = 0; w < out.flags.size(); ++w) out.flags[w] = out.flags[w] || m.flags[w];
    out.threshold = std::max(out.threshold, m.threshold);
  }
  return out;
}

CompactedSeries apply_flags(std::span<const double> power, const FlagMask& mask) {
  if (mask.window_length == 0 || mask.flags.size() * mask.window_length < power.size() ||
      (mask.signal_length != 0 && mask.signal_length != power.size())) {
    throw Error(ErrorKind::MaskLengthMismatch, "mask covers " + std::to_string(mask.signal_length) +
                                                   " samples, series has " + std::to_string(power.size()));
  }
  CompactedSeries out;
  out.values.reserve(power.size());
  out.retained.reserve(power.size());
  for (std::size_t i = 0; i < power.size(); ++i) {
    if (mask.covers(i)) continue;
    out.values.push_back(power[i]);
    out.retained.push_back(i);
  }
  return out;
}

}  // namespace chromaeeg
