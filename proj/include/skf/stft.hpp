// Time-domain framing, periodic-Hamming windowing, STFT analysis and
// overlap-add synthesis. All DSP runs in double precision; analysis followed
// by synthesis reconstructs the input exactly up to rounding because the
// overlap-add divides by the accumulated squared synthesis window.
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "skf/tensor.hpp"

namespace skf {

struct AudioBuffer {
  std::vector<double> samples;  // dimensionless amplitudes, nominally in [-1, 1]
  std::uint32_t sample_rate = 44100;
};

struct ComplexSpectrogram {
  std::size_t n_fft = 0;
  std::size_t hop = 0;
  std::size_t orig_len = 0;
  std::uint32_t sample_rate = 0;
  std::size_t frames = 0;  // M
  std::size_t bins = 0;    // N = n_fft/2 + 1
  std::vector<std::complex<double>> values;  // row-major M x N

  std::complex<double>& at(std::size_t m, std::size_t n) { return values[m * bins + n]; }
  const std::complex<double>& at(std::size_t m, std::size_t n) const {
    return values[m * bins + n];
  }
};

struct MagnitudeSpectrogram {
  std::size_t n_fft = 0;
  std::size_t hop = 0;
  std::size_t orig_len = 0;
  std::uint32_t sample_rate = 0;
  Tensor values;  // M x N, non-negative
};

namespace detail {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT; falls back to a direct O(n^2) DFT for
// non-power-of-two sizes. inverse=true includes the 1/n normalization.
inline void fourier(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  const double pi = 3.14159265358979323846;
  if (!is_pow2(n)) {
    std::vector<std::complex<double>> out(n);
    const double sgn = inverse ? 1.0 : -1.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> s(0.0, 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        const double ang = sgn * 2.0 * pi * static_cast<double>(k * t % n) / static_cast<double>(n);
        s += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
      out[k] = s;
    }
    a = std::move(out);
  } else {
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const double ang = (inverse ? 2.0 : -2.0) * pi / static_cast<double>(len);
      const std::complex<double> wl(std::cos(ang), std::sin(ang));
      for (std::size_t i = 0; i < n; i += len) {
        std::complex<double> w(1.0, 0.0);
        for (std::size_t k = 0; k < len / 2; ++k) {
          const std::complex<double> u = a[i + k];
          const std::complex<double> v = a[i + k + len / 2] * w;
          a[i + k] = u + v;
          a[i + k + len / 2] = u - v;
          w *= wl;
        }
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

}  // namespace detail

// Periodic Hamming window of the given length.
inline std::vector<double> hamming_window(std::size_t n_fft) {
  std::vector<double> w(n_fft);
  const double pi = 3.14159265358979323846;
  for (std::size_t n = 0; n < n_fft; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * pi * static_cast<double>(n) / static_cast<double>(n_fft));
  return w;
}

/// Slices x into M = ceil(len/hop) overlapping frames of length n_fft (tail
/// zero-padded) and multiplies each frame by the periodic Hamming window.
/// Frame m covers samples [m*hop, m*hop + n_fft).
inline Tensor frame_signal(const AudioBuffer& x, std::size_t n_fft, std::size_t hop) {
  if (x.samples.empty()) throw std::runtime_error("empty signal");
  if (n_fft < 1 || hop < 1 || hop > n_fft)
    throw std::invalid_argument("invalid framing parameters");
  const std::size_t len = x.samples.size();
  const std::size_t m_frames = (len + hop - 1) / hop;
  const std::vector<double> w = hamming_window(n_fft);
  Tensor frames(m_frames, n_fft);
  for (std::size_t m = 0; m < m_frames; ++m) {
    const std::size_t start = m * hop;
    for (std::size_t n = 0; n < n_fft; ++n) {
      const std::size_t idx = start + n;
      const double v = idx < len ? x.samples[idx] : 0.0;
      frames(m, n) = v * w[n];
    }
  }
  return frames;
}

/// DFT of each (already windowed) frame, keeping bins 0..n_fft/2; the
/// Hermitian-redundant half is discarded. hop/orig_len/sample_rate are carried
/// as metadata for later synthesis.
inline ComplexSpectrogram stft_analysis(const Tensor& frames, std::size_t hop,
                                        std::size_t orig_len, std::uint32_t sample_rate = 0) {
  const std::size_t n_fft = frames.cols;
  if (n_fft < 1 || frames.rows < 1) throw std::invalid_argument("invalid frame matrix");
  ComplexSpectrogram s;
  s.n_fft = n_fft;
  s.hop = hop;
  s.orig_len = orig_len;
  s.sample_rate = sample_rate;
  s.frames = frames.rows;
  s.bins = n_fft / 2 + 1;
  s.values.resize(s.frames * s.bins);
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t m = 0; m < s.frames; ++m) {
    for (std::size_t n = 0; n < n_fft; ++n) buf[n] = std::complex<double>(frames(m, n), 0.0);
    detail::fourier(buf, false);
    for (std::size_t n = 0; n < s.bins; ++n) s.at(m, n) = buf[n];
  }
  return s;
}

/// Windowed overlap-add synthesis: per-frame inverse DFT (full spectrum
/// rebuilt from Hermitian symmetry), synthesis Hamming window, overlap-add,
/// then pointwise division by the accumulated squared-window sum (floored at
/// 1e-12) and truncation to orig_len.
inline AudioBuffer stft_synthesis(const ComplexSpectrogram& s) {
  if (s.n_fft < 1 || s.hop < 1 || s.hop > s.n_fft || s.frames < 1)
    throw std::invalid_argument("invalid spectrogram metadata");
  if (s.bins != s.n_fft / 2 + 1) throw std::invalid_argument("invalid spectrogram metadata");
  const std::size_t total = (s.frames - 1) * s.hop + s.n_fft;
  const std::vector<double> w = hamming_window(s.n_fft);
  std::vector<double> acc(total, 0.0);
  std::vector<double> wsum(total, 0.0);
  std::vector<std::complex<double>> buf(s.n_fft);
  for (std::size_t m = 0; m < s.frames; ++m) {
    for (std::size_t n = 0; n < s.bins; ++n) buf[n] = s.at(m, n);
    for (std::size_t n = s.bins; n < s.n_fft; ++n) buf[n] = std::conj(s.at(m, s.n_fft - n));
    detail::fourier(buf, true);
    const std::size_t start = m * s.hop;
    for (std::size_t n = 0; n < s.n_fft; ++n) {
      acc[start + n] += buf[n].real() * w[n];
      wsum[start + n] += w[n] * w[n];
    }
  }
  const std::size_t out_len = s.orig_len ? s.orig_len : total;
  for (std::size_t i = 0; i < out_len; ++i)
    if (i >= total || wsum[i] < 1e-12) throw std::runtime_error("non-invertible configuration");
  AudioBuffer out;
  out.sample_rate = s.sample_rate ? s.sample_rate : 1;
  out.samples.resize(out_len);
  for (std::size_t i = 0; i < out_len; ++i)
    out.samples[i] = acc[i] / std::max(wsum[i], 1e-12);
  return out;
}

/// Elementwise complex modulus; metadata copied.
inline MagnitudeSpectrogram magnitude(const ComplexSpectrogram& s) {
  MagnitudeSpectrogram m;
  m.n_fft = s.n_fft;
  m.hop = s.hop;
  m.orig_len = s.orig_len;
  m.sample_rate = s.sample_rate;
  m.values = Tensor(s.frames, s.bins);
  for (std::size_t i = 0; i < s.values.size(); ++i) m.values.data[i] = std::abs(s.values[i]);
  return m;
}

// frame + analyze in one call.
inline ComplexSpectrogram analyze(const AudioBuffer& x, std::size_t n_fft, std::size_t hop) {
  return stft_analysis(frame_signal(x, n_fft, hop), hop, x.samples.size(), x.sample_rate);
}

}  // namespace skf
