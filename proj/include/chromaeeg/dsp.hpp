#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chromaeeg/ingest.hpp"
#include "chromaeeg/matrix.hpp"

namespace chromaeeg::dsp {

using Complex = std::complex<double>;
using ComplexSeries = std::vector<Complex>;

inline constexpr double kDefaultCycles = 7.0;
inline constexpr double kDefaultSupportSigmas = 4.0;

bool is_power_of_two(std::size_t n);
std::size_t next_power_of_two(std::size_t n);

/// Unnormalised forward DFT via iterative radix-2. Length must be a power of two.
ComplexSeries fft(std::span<const Complex> x);
/// Inverse DFT scaled by 1/N.
ComplexSeries ifft(std::span<const Complex> x);
/// In-place variants used by the convolution loop.
void fft_inplace(std::span<Complex> x, bool inverse);

struct MorletParams {
  double frequency = 10.0;       // Hz
  double sigma_t = 0.0;          // seconds
  double sample_rate = kMuseSampleRate;
  double support_half_width = 0.0;  // seconds

  /// sigma_t = n_cycles / (2 pi f); support = support_sigmas * sigma_t.
  static MorletParams from_cycles(double frequency, double n_cycles, double sample_rate,
                                  double support_sigmas = kDefaultSupportSigmas);
  /// Energy normalisation (sigma_t sqrt(pi))^(-1/2).
  double amplitude() const;
  /// Samples on each side of t = 0.
  std::size_t half_samples() const;
};

/// w(t) = A exp(-t^2 / 2 sigma_t^2) exp(i 2 pi f t) on the grid t = k / fs,
/// k = -half..half. The centre sample is index half_samples().
ComplexSeries morlet_wavelet(const MorletParams& p);

struct PowerSpectrogram {
  std::string channel;
  std::vector<double> freqs;        // Hz, one per row
  std::vector<std::size_t> times;   // sample index, one per column
  Matrix power;                     // freqs.size() x times.size()
};

struct CwtOptions {
  double n_cycles = kDefaultCycles;
  double support_sigmas = kDefaultSupportSigmas;
  /// 0 picks the smallest power of two >= n_signal + n_wavelet - 1. Larger
  /// values must be powers of two and only change rounding.
  std::size_t fft_size = 0;
};

/// 8..30 Hz in 1 Hz steps.
std::vector<double> default_frequencies();

/// "Same"-aligned complex Morlet convolution per frequency via zero-padded
/// FFTs; power = |z|^2.
PowerSpectrogram cwt_power(std::span<const double> segment, std::span<const double> freqs, double sample_rate,
                           const CwtOptions& options = {});

/// Complex coefficients for one frequency (same alignment as cwt_power).
ComplexSeries cwt_row(std::span<const double> segment, const ComplexSeries& wavelet, std::size_t fft_size = 0);

struct BandPower {
  std::string channel;
  std::vector<double> alpha;  // mean over 8-12 Hz rows
  std::vector<double> beta;   // mean over 13-30 Hz rows
};

inline constexpr double kAlphaLow = 8.0, kAlphaHigh = 12.0;
inline constexpr double kBetaLow = 13.0, kBetaHigh = 30.0;

BandPower band_power(const PowerSpectrogram& spec);

/// CSV: first row `freq_hz,<time index>...`, then one row per frequency.
std::string serialize_spectrogram(const PowerSpectrogram& spec);
PowerSpectrogram parse_spectrogram(std::string_view csv_text);
void emit_spectrogram(const PowerSpectrogram& spec, const std::filesystem::path& path);

}  // namespace chromaeeg::dsp
