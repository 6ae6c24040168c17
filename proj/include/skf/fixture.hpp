// Deterministic synthetic voice/accompaniment fixtures: a harmonic tone with
// vibrato against band-filtered noise with periodic impulses. Serves as a
// desk-scale stand-in for real multi-track material.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "skf/stft.hpp"

namespace skf {

struct FixtureSpec {
  double fundamental_hz = 220.0;
  std::size_t partials = 6;
  double vibrato_depth = 0.004;  // relative frequency deviation
  double vibrato_rate_hz = 5.0;
  double noise_center_hz = 1100.0;
  double noise_q = 1.0;
  double impulse_rate_hz = 2.0;
  double duration_s = 4.0;
  std::uint32_t sample_rate = 8000;
  std::uint64_t seed = 42;
};

struct FixtureSet {
  AudioBuffer mixture;
  AudioBuffer voice;
  AudioBuffer accompaniment;
};

namespace detail {

inline double rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace detail

inline FixtureSet synth_fixture(const FixtureSpec& spec) {
  if (spec.duration_s <= 0.0) throw std::invalid_argument("synth_fixture: duration must be > 0");
  const double pi = 3.14159265358979323846;
  const double sr = static_cast<double>(spec.sample_rate);
  const std::size_t len = static_cast<std::size_t>(spec.duration_s * sr);

  // Voice: harmonic stack with a shared vibrato phase, partial p at amplitude
  // 1/p. Partials above 0.45 * sr are dropped.
  std::vector<double> voice(len, 0.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double t = static_cast<double>(i) / sr;
    const double f_inst =
        spec.fundamental_hz * (1.0 + spec.vibrato_depth * std::sin(2.0 * pi * spec.vibrato_rate_hz * t));
    phase += 2.0 * pi * f_inst / sr;
    double v = 0.0;
    for (std::size_t p = 1; p <= spec.partials; ++p) {
      if (spec.fundamental_hz * static_cast<double>(p) >= 0.45 * sr) break;
      v += std::sin(static_cast<double>(p) * phase) / static_cast<double>(p);
    }
    voice[i] = v;
  }
  const double voice_rms = detail::rms(voice);
  const double voice_gain = voice_rms > 0.0 ? 0.15 / voice_rms : 1.0;
  for (double& v : voice) v *= voice_gain;

  // Accompaniment: white noise through an RBJ bandpass plus a train of
  // exponentially decaying clicks, scaled to the voice RMS.
  std::mt19937_64 rng(spec.seed);
  std::vector<double> acc(len, 0.0);
  const double w0 = 2.0 * pi * spec.noise_center_hz / sr;
  const double alpha = std::sin(w0) / (2.0 * spec.noise_q);
  const double a0 = 1.0 + alpha;
  const double b0 = alpha / a0, b2 = -alpha / a0;
  const double a1 = -2.0 * std::cos(w0) / a0, a2 = (1.0 - alpha) / a0;
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    const double x0 = 2.0 * u - 1.0;
    const double y0 = b0 * x0 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x0;
    y2 = y1;
    y1 = y0;
    acc[i] = y0;
  }
  const std::size_t impulse_period =
      static_cast<std::size_t>(sr / std::max(spec.impulse_rate_hz, 1e-6));
  for (std::size_t start = impulse_period / 2; start < len; start += impulse_period)
    for (std::size_t n = 0; n < 48 && start + n < len; ++n)
      acc[start + n] += 2.0 * std::exp(-static_cast<double>(n) / 8.0) * (n % 2 == 0 ? 1.0 : -1.0);
  const double acc_rms = detail::rms(acc);
  const double target_rms = detail::rms(voice);
  const double acc_gain = acc_rms > 0.0 ? target_rms / acc_rms : 1.0;
  for (double& v : acc) v *= acc_gain;

  FixtureSet out;
  out.voice.sample_rate = spec.sample_rate;
  out.voice.samples = std::move(voice);
  out.accompaniment.sample_rate = spec.sample_rate;
  out.accompaniment.samples = std::move(acc);
  out.mixture.sample_rate = spec.sample_rate;
  out.mixture.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i)
    out.mixture.samples[i] = out.voice.samples[i] + out.accompaniment.samples[i];
  return out;
}

}  // namespace skf
