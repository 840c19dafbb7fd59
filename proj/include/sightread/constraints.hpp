#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <iostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace sightread {

// One STFT frame: magnitudes a_k for k = 0..N/2 with their bin frequencies.
struct SpectralFrame {
  std::vector<double> magnitudes;
  std::vector<double> bin_frequencies;  // Hz, k * sample_rate / N
  int block_count = 0;                  // N
};

struct Impulse {
  double time = 0.0;       // seconds
  double amplitude = 1.0;
};

struct ConstraintValues {
  double c1 = 0.0;                  // rhythm feature
  double c2 = 0.0;                  // normalized pitch deviation
  double produced_frequency = 0.0;  // g(t,s), Hz
};

struct ErrorPair {
  double d_c1 = 0.0;
  double d_c2 = 0.0;
};

struct UncertaintyParams {
  double delta = 0.0;  // |prediction error|
  double m = 1.0;      // coupling constant, > 0
};

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT. Sizes stay small here (<= a few thousand
// samples per frame), so no twiddle caching.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const double pi = 3.141592653589793238462643383279502884;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace detail

// Rasterize an onset impulse train to a sample grid and return per-frame
// rectangular-window magnitude spectra. Frames start every `hop` samples and
// the signal is zero-padded so the last frame is full length.
inline std::vector<SpectralFrame> stft_magnitudes(
    std::span<const Impulse> impulse_train, std::size_t window_len,
    std::size_t hop, double sample_rate) {
  if (impulse_train.empty())
    throw std::invalid_argument("stft_magnitudes: empty impulse train");
  if (!detail::is_power_of_two(window_len) || window_len < 2)
    throw std::invalid_argument(
        "stft_magnitudes: window_len must be a power of two >= 2");
  if (hop == 0) throw std::invalid_argument("stft_magnitudes: hop must be >= 1");
  if (!(sample_rate > 0.0))
    throw std::invalid_argument("stft_magnitudes: sample_rate must be > 0");
  for (std::size_t i = 0; i + 1 < impulse_train.size(); ++i)
    if (impulse_train[i].time > impulse_train[i + 1].time)
      throw std::invalid_argument(
          "stft_magnitudes: impulse train must be sorted by time");
  if (hop > window_len)
    std::cerr << "stft_magnitudes: hop " << hop << " exceeds window "
              << window_len << "; frames leave gaps\n";

  std::size_t signal_len = window_len;
  for (const Impulse& imp : impulse_train) {
    if (imp.time < 0.0)
      throw std::invalid_argument("stft_magnitudes: negative onset time");
    const auto idx = static_cast<std::size_t>(std::llround(imp.time * sample_rate));
    signal_len = std::max(signal_len, idx + 1);
  }

  const std::size_t frames =
      (signal_len - window_len + hop - 1) / hop + 1;  // ceil + 1 covers tail
  std::vector<double> signal((frames - 1) * hop + window_len, 0.0);
  for (const Impulse& imp : impulse_train) {
    const auto idx = static_cast<std::size_t>(std::llround(imp.time * sample_rate));
    signal[idx] += imp.amplitude;
  }

  std::vector<double> bins(window_len / 2 + 1);
  for (std::size_t k = 0; k < bins.size(); ++k)
    bins[k] = static_cast<double>(k) * sample_rate / static_cast<double>(window_len);

  std::vector<SpectralFrame> out;
  out.reserve(frames);
  std::vector<std::complex<double>> buf(window_len);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * hop;
    for (std::size_t n = 0; n < window_len; ++n)
      buf[n] = std::complex<double>(signal[start + n], 0.0);
    detail::fft_radix2(buf);
    SpectralFrame frame;
    frame.block_count = static_cast<int>(window_len);
    frame.bin_frequencies = bins;
    frame.magnitudes.resize(bins.size());
    for (std::size_t k = 0; k < bins.size(); ++k)
      frame.magnitudes[k] = std::abs(buf[k]);
    out.push_back(std::move(frame));
  }
  return out;
}

// Rhythm feature between consecutive frames:
//   c1 = sum_k W_k * f(k) * (cbrt(a_k^t) - cbrt(a_k^{t-1}))
inline double rhythm_c1(const SpectralFrame& frame_t,
                        const SpectralFrame& frame_prev,
                        std::span<const double> weights) {
  const std::size_t bins = frame_t.magnitudes.size();
  if (frame_prev.magnitudes.size() != bins ||
      frame_t.block_count != frame_prev.block_count ||
      frame_t.bin_frequencies.size() != bins || weights.size() != bins)
    throw std::invalid_argument("rhythm_c1: frame/weight shape mismatch");

  double sum = 0.0;
  for (std::size_t k = 0; k < bins; ++k) {
    sum += weights[k] * frame_t.bin_frequencies[k] *
           (std::cbrt(frame_t.magnitudes[k]) -
            std::cbrt(frame_prev.magnitudes[k]));
  }
  return sum;
}

// c1 value per frame transition; frame -1 is taken as silence so the result
// has one entry per frame.
inline std::vector<double> rhythm_trajectory(
    std::span<const SpectralFrame> frames, std::span<const double> weights) {
  std::vector<double> out;
  out.reserve(frames.size());
  if (frames.empty()) return out;
  SpectralFrame silence;
  silence.block_count = frames[0].block_count;
  silence.bin_frequencies = frames[0].bin_frequencies;
  silence.magnitudes.assign(frames[0].magnitudes.size(), 0.0);
  const SpectralFrame* prev = &silence;
  for (const SpectralFrame& f : frames) {
    out.push_back(rhythm_c1(f, *prev, weights));
    prev = &f;
  }
  return out;
}

// Pitch deviation normalized against the 440 Hz tonic anchor.
inline double pitch_c2(double produced, double target) {
  if (!(produced > 0.0) || !(target > 0.0))
    throw std::invalid_argument("pitch_c2: frequencies must be positive");
  return std::abs(produced - target) / 440.0;
}

inline bool pitch_within_threshold(double produced, double target,
                                   double epsilon) {
  return pitch_c2(produced, target) <= epsilon;
}

// Enforce d_c1 * d_c2 >= delta * M by inflating the smaller error (ties
// inflate d_c2). Errors never shrink.
inline ErrorPair enforce_uncertainty(ErrorPair raw,
                                     const UncertaintyParams& params) {
  if (raw.d_c1 < 0.0 || raw.d_c2 < 0.0)
    throw std::invalid_argument("enforce_uncertainty: negative error");
  if (!(params.m > 0.0))
    throw std::invalid_argument("enforce_uncertainty: M must be > 0");
  const double bound = std::abs(params.delta) * params.m;
  if (bound <= 0.0 || raw.d_c1 * raw.d_c2 >= bound) return raw;
  if (raw.d_c1 == 0.0 && raw.d_c2 == 0.0) {
    const double fill = std::sqrt(bound);
    return {fill, fill};
  }
  if (raw.d_c1 < raw.d_c2)
    return {bound / raw.d_c2, raw.d_c2};
  return {raw.d_c1, bound / raw.d_c1};
}

// Attention sweep: lambda = 1 puts all attention on rhythm (d_c1 at its
// floor, d_c2 maximal), lambda = 0 the reverse.
inline ErrorPair tradeoff_errors(double lambda, const UncertaintyParams& params,
                                 double k1, double k2, double floor = 1e-3) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("tradeoff_errors: lambda outside [0, 1]");
  if (!(k1 > 0.0) || !(k2 > 0.0))
    throw std::invalid_argument("tradeoff_errors: scales must be > 0");
  ErrorPair raw{k1 * (1.0 - lambda) + floor, k2 * lambda + floor};
  return enforce_uncertainty(raw, params);
}

}  // namespace sightread
