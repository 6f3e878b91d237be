#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace chromaeeg {

/// 50 ms at 256 Hz.
inline constexpr std::size_t kDefaultArtifactWindow = 12;
/// Multiple of the median window variance used when no threshold is given.
inline constexpr double kDefaultArtifactMedianMultiple = 5.0;

struct FlagMask {
  std::size_t window_length = kDefaultArtifactWindow;
  std::size_t signal_length = 0;
  double threshold = 0.0;
  std::vector<bool> flags;  // one per window, the last one possibly partial

  std::size_t flagged_count() const;
  /// True when sample index i falls inside a flagged window.
  bool covers(std::size_t sample) const { return flags[sample / window_length]; }
};

/// Population variance of each consecutive window (trailing partial window included).
std::vector<double> window_variances(std::span<const double> segment, std::size_t window_length);

/// Window i is flagged iff its population variance exceeds `threshold`.
FlagMask flag_artifacts(std::span<const double> segment, std::size_t window_length, double threshold);

/// k times the median window variance. Returns the smallest positive double when
/// the median is zero so the mask still has a valid (positive) threshold.
double auto_threshold(std::span<const double> segment, std::size_t window_length,
                      double median_multiple = kDefaultArtifactMedianMultiple);

/// Logical OR of masks built over the same time base (one per channel).
FlagMask merge_masks(std::span<const FlagMask> masks);

struct CompactedSeries {
  std::vector<double> values;
  std::vector<std::size_t> retained;  // original index of each surviving point
};

/// Drops every point covered by a flagged window, keeping order.
CompactedSeries apply_flags(std::span<const double> power, const FlagMask& mask);

}  // namespace chromaeeg
