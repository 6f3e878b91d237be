#include "chromaeeg/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chromaeeg/error.hpp"
#include "chromaeeg/text_io.hpp"

namespace chromaeeg::dsp {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::span<Complex> x, bool inverse) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) {
    throw Error(ErrorKind::NonPowerOfTwoLength, "FFT length " + std::to_string(n) + " is not a power of two");
  }
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  // Twiddles evaluated directly rather than by recurrence: keeps the error at
  // a few ulps even for the longest transforms.
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddle[k] = {std::cos(angle), std::sin(angle)};
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex t = twiddle[k * stride] * x[start + k + half];
        const Complex u = x[start + k];
        x[start + k] = u + t;
        x[start + k + half] = u - t;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= scale;
  }
}

ComplexSeries fft(std::span<const Complex> x) {
  ComplexSeries out(x.begin(), x.end());
  fft_inplace(out, false);
  return out;
}

ComplexSeries ifft(std::span<const Complex> x) {
  ComplexSeries out(x.begin(), x.end());
  fft_inplace(out, true);
  return out;
}

MorletParams MorletParams::from_cycles(double frequency, double n_cycles, double sample_rate,
                                       double support_sigmas) {
  MorletParams p;
  p.frequency = frequency;
  p.sample_rate = sample_rate;
  p.sigma_t = n_cycles / (2.0 * std::numbers::pi * frequency);
  p.support_half_width = support_sigmas * p.sigma_t;
  return p;
}

double MorletParams::amplitude() const { return 1.0 / std::sqrt(sigma_t * std::sqrt(std::numbers::pi)); }

std::size_t MorletParams::half_samples() const {
  // Tiny slack so 4 sigma that lands exactly on a sample is not rounded up.
  return static_cast<std::size_t>(std::ceil(support_half_width * sample_rate - 1e-9));
}

ComplexSeries morlet_wavelet(const MorletParams& p) {
  if (!(p.frequency > 0.0) || !(p.sigma_t > 0.0) || !(p.sample_rate > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "Morlet frequency, duration and sample rate must be positive");
  }
  if (p.support_half_width < 4.0 * p.sigma_t * (1.0 - 1e-12)) {
    throw Error(ErrorKind::InsufficientSupport, "wavelet support must cover at least 4 sigma_t");
  }
  const std::size_t half = p.half_samples();
  const double a = p.amplitude();
  const double two_sigma_sq = 2.0 * p.sigma_t * p.sigma_t;
  ComplexSeries w(2 * half + 1);
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double t = (static_cast<double>(k) - static_cast<double>(half)) / p.sample_rate;
    const double envelope = a * std::exp(-t * t / two_sigma_sq);
    const double phase = 2.0 * std::numbers::pi * p.frequency * t;
    w[k] = {envelope * std::cos(phase), envelope * std::sin(phase)};
  }
  // Exact zero imaginary part at the centre regardless of rounding in sin(0).
  w[half] = {a, 0.0};
  return w;
}

std::vector<double> default_frequencies() {
  std::vector<double> f;
  for (int hz = 8; hz <= 30; ++hz) f.push_back(hz);
  return f;
}

ComplexSeries cwt_row(std::span<const double> segment, const ComplexSeries& wavelet, std::size_t fft_size) {
  const std::size_t n_sig = segment.size();
  const std::size_t n_wav = wavelet.size();
  const std::size_t n_full = n_sig + n_wav - 1;
  std::size_t n_fft = next_power_of_two(n_full);
  if (fft_size != 0) {
    if (!is_power_of_two(fft_size)) {
      throw Error(ErrorKind::NonPowerOfTwoLength, "requested FFT size is not a power of two");
    }
    if (fft_size < n_full) throw Error(ErrorKind::InvalidArgument, "requested FFT size is too small");
    n_fft = fft_size;
  }

  ComplexSeries sig(n_fft), wav(n_fft);
  for (std::size_t i = 0; i < n_sig; ++i) sig[i] = segment[i];
  std::copy(wavelet.begin(), wavelet.end(), wav.begin());
  fft_inplace(sig, false);
  fft_inplace(wav, false);
  for (std::size_t i = 0; i < n_fft; ++i) sig[i] *= wav[i];
  fft_inplace(sig, true);

  const std::size_t offset = (n_wav - 1) / 2;
  return ComplexSeries(sig.begin() + static_cast<std::ptrdiff_t>(offset),
                       sig.begin() + static_cast<std::ptrdiff_t>(offset + n_sig));
}

PowerSpectrogram cwt_power(std::span<const double> segment, std::span<const double> freqs, double sample_rate,
                           const CwtOptions& options) {
  if (freqs.empty()) throw Error(ErrorKind::InvalidArgument, "no frequencies requested");
  PowerSpectrogram spec;
  spec.freqs.assign(freqs.begin(), freqs.end());
  spec.times.resize(segment.size());
  for (std::size_t i = 0; i < segment.size(); ++i) spec.times[i] = i;
  spec.power = Matrix(freqs.size(), segment.size());

  for (std::size_t r = 0; r < freqs.size(); ++r) {
    const auto params = MorletParams::from_cycles(freqs[r], options.n_cycles, sample_rate, options.support_sigmas);
    const auto wavelet = morlet_wavelet(params);
    if (segment.size() < wavelet.size()) {
      throw Error(ErrorKind::SegmentTooShort, "segment of " + std::to_string(segment.size()) +
                                                  " samples is shorter than the " + std::to_string(wavelet.size()) +
                                                  "-sample wavelet at " + io::format_double(freqs[r]) + " Hz");
    }
    const auto coeffs = cwt_row(segment, wavelet, options.fft_size);
    auto row = spec.power.row(r);
    for (std::size_t t = 0; t < coeffs.size(); ++t) row[t] = std::norm(coeffs[t]);
  }
  return spec;
}

BandPower band_power(const PowerSpectrogram& spec) {
  std::vector<std::size_t> alpha_rows, beta_rows;
  bool has[4] = {false, false, false, false};
  constexpr double eps = 1e-9;
  for (std::size_t r = 0; r < spec.freqs.size(); ++r) {
    const double f = spec.freqs[r];
    if (f >= kAlphaLow - eps && f <= kAlphaHigh + eps) alpha_rows.push_back(r);
    if (f >= kBetaLow - eps && f <= kBetaHigh + eps) beta_rows.push_back(r);
    has[0] |= std::abs(f - kAlphaLow) < eps;
    has[1] |= std::abs(f - kAlphaHigh) < eps;
    has[2] |= std::abs(f - kBetaLow) < eps;
    has[3] |= std::abs(f - kBetaHigh) < eps;
  }
  if (!(has[0] && has[1] && has[2] && has[3])) {
    throw Error(ErrorKind::BandNotCovered, "spectrogram rows must span 8-12 Hz and 13-30 Hz");
  }
  const std::size_t n = spec.power.cols();
  BandPower bp;
  bp.channel = spec.channel;
  bp.alpha.assign(n, 0.0);
  bp.beta.assign(n, 0.0);
  for (std::size_t r : alpha_rows) {
    for (std::size_t t = 0; t < n; ++t) bp.alpha[t] += spec.power(r, t);
  }
  for (std::size_t r : beta_rows) {
    for (std::size_t t = 0; t < n; ++t) bp.beta[t] += spec.power(r, t);
  }
  for (std::size_t t = 0; t < n; ++t) {
    bp.alpha[t] /= static_cast<double>(alpha_rows.size());
    bp.beta[t] /= static_cast<double>(beta_rows.size());
  }
  return bp;
}

std::string serialize_spectrogram(const PowerSpectrogram& spec) {
  std::string out = "freq_hz";
  for (std::size_t t : spec.times) {
    out += ',';
    out += std::to_string(t);
  }
  out += '\n';
  for (std::size_t r = 0; r < spec.freqs.size(); ++r) {
    out += io::format_double(spec.freqs[r]);
    for (std::size_t c = 0; c < spec.power.cols(); ++c) {
      out += ',';
      out += io::format_double(spec.power(r, c));
    }
    out += '\n';
  }
  return out;
}

PowerSpectrogram parse_spectrogram(std::string_view csv_text) {
  const auto lines = io::split_lines(csv_text);
  if (lines.empty()) throw Error(ErrorKind::Empty, "spectrogram file is empty");
  PowerSpectrogram spec;
  const auto header = io::split_csv(lines.front());
  for (std::size_t i = 1; i < header.size(); ++i) {
    const auto t = io::parse_int(header[i]);
    if (!t || *t < 0) throw Error(ErrorKind::MalformedRow, "bad time index in spectrogram header");
    spec.times.push_back(static_cast<std::size_t>(*t));
  }
  spec.power = Matrix(0, spec.times.size());
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (io::trim(lines[li]).empty()) continue;
    const auto fields = io::split_csv(lines[li]);
    if (fields.size() != spec.times.size() + 1) {
      throw Error(ErrorKind::MalformedRow, "spectrogram line " + std::to_string(li + 1) + " has wrong width");
    }
    const auto f = io::parse_double(fields[0]);
    if (!f) throw Error(ErrorKind::MalformedRow, "bad frequency on spectrogram line " + std::to_string(li + 1));
    spec.freqs.push_back(*f);
    std::vector<double> row;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto v = io::parse_double(fields[i]);
      if (!v) throw Error(ErrorKind::MalformedRow, "bad value on spectrogram line " + std::to_string(li + 1));
      row.push_back(*v);
    }
    spec.power.append_row(row);
  }
  return spec;
}

void emit_spectrogram(const PowerSpectrogram& spec, const std::filesystem::path& path) {
  io::write_file(path, serialize_spectrogram(spec));
}

}  // namespace chromaeeg::dsp
