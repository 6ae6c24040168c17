#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "skf/stft.hpp"

using skf::AudioBuffer;
using skf::Tensor;

namespace {

AudioBuffer random_signal(std::size_t len, std::uint64_t seed, std::uint32_t sr = 44100) {
  std::mt19937_64 rng(seed);
  AudioBuffer x;
  x.sample_rate = sr;
  x.samples.resize(len);
  for (auto& v : x.samples)
    v = 2.0 * (static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
  return x;
}

// Test-side oracle: direct O(n^2) DFT, independent of the library FFT.
std::vector<std::complex<double>> naive_dft(const std::vector<double>& frame) {
  const std::size_t n = frame.size();
  std::vector<std::complex<double>> out(n);
  const double pi = 3.14159265358979323846;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> s(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang =
          -2.0 * pi * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(n);
      s += frame[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = s;
  }
  return out;
}

double rel_l2_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

}  // namespace

TEST_CASE("framing a zero signal gives all-zero frames with M = ceil(len/hop)") {
  AudioBuffer x;
  x.samples.assign(4096, 0.0);
  const Tensor frames = skf::frame_signal(x, 2048, 256);
  REQUIRE(frames.rows == 16);
  REQUIRE(frames.cols == 2048);
  for (double v : frames.data) REQUIRE(v == 0.0);
}

TEST_CASE("framing a constant signal reproduces the Hamming window") {
  AudioBuffer x;
  x.samples.assign(4096, 1.0);
  const Tensor frames = skf::frame_signal(x, 2048, 256);
  const std::vector<double> w = skf::hamming_window(2048);
  for (std::size_t n = 0; n < 2048; ++n) REQUIRE(frames(0, n) == w[n]);
  // periodic variant: peak at n_fft/2, endpoint stays at 0.08
  REQUIRE(w[0] == Catch::Approx(0.08));
  REQUIRE(w[1024] == Catch::Approx(1.0));
}

TEST_CASE("frame index arithmetic: len 10000, hop 256") {
  AudioBuffer x;
  x.samples.resize(10000);
  for (std::size_t i = 0; i < x.samples.size(); ++i) x.samples[i] = static_cast<double>(i);
  const Tensor frames = skf::frame_signal(x, 2048, 256);
  REQUIRE(frames.rows == 40);  // ceil(10000/256)
  const std::vector<double> w = skf::hamming_window(2048);
  // second frame starts at sample 256
  for (std::size_t n : {std::size_t{0}, std::size_t{100}, std::size_t{2047}}) {
    const double expect = (256 + n) < 10000 ? static_cast<double>(256 + n) * w[n] : 0.0;
    REQUIRE(frames(1, n) == Catch::Approx(expect));
  }
  // tail zero padding: the last frame starts at 39*256 = 9984
  REQUIRE(frames(39, 16) == 0.0);
}

TEST_CASE("framing an empty signal throws") {
  AudioBuffer x;
  REQUIRE_THROWS_WITH(skf::frame_signal(x, 2048, 256), "empty signal");
  x.samples.assign(16, 0.0);
  REQUIRE_THROWS_AS(skf::frame_signal(x, 8, 9), std::invalid_argument);   // hop > n_fft
  REQUIRE_THROWS_AS(skf::frame_signal(x, 8, 0), std::invalid_argument);   // hop < 1
}

TEST_CASE("analysis of zero frames is a zero spectrogram with N = n_fft/2 + 1") {
  const Tensor frames(4, 2048);
  const skf::ComplexSpectrogram s = skf::stft_analysis(frames, 256, 1024);
  REQUIRE(s.bins == 1025);
  REQUIRE(s.frames == 4);
  for (const auto& v : s.values) REQUIRE(std::abs(v) == 0.0);
}

TEST_CASE("windowed cosine at bin 8 of a 64-point DFT peaks at bin 8") {
  const std::size_t n_fft = 64;
  const std::vector<double> w = skf::hamming_window(n_fft);
  Tensor frame(1, n_fft);
  const double pi = 3.14159265358979323846;
  for (std::size_t n = 0; n < n_fft; ++n)
    frame(0, n) = std::cos(2.0 * pi * 8.0 * static_cast<double>(n) / 64.0) * w[n];
  const skf::ComplexSpectrogram s = skf::stft_analysis(frame, 16, 64);
  std::size_t best = 0;
  for (std::size_t n = 0; n < s.bins; ++n)
    if (std::abs(s.at(0, n)) > std::abs(s.at(0, best))) best = n;
  REQUIRE(best == 8);
}

TEST_CASE("analysis matches the naive DFT oracle") {
  const AudioBuffer x = random_signal(100, 31, 8000);
  const Tensor frames = skf::frame_signal(x, 16, 4);
  const skf::ComplexSpectrogram s = skf::stft_analysis(frames, 4, 100);
  for (std::size_t m = 0; m < s.frames; ++m) {
    std::vector<double> row(16);
    for (std::size_t n = 0; n < 16; ++n) row[n] = frames(m, n);
    const auto oracle = naive_dft(row);
    for (std::size_t n = 0; n < s.bins; ++n) {
      REQUIRE(s.at(m, n).real() == Catch::Approx(oracle[n].real()).margin(1e-10));
      REQUIRE(s.at(m, n).imag() == Catch::Approx(oracle[n].imag()).margin(1e-10));
    }
  }
}

TEST_CASE("analysis-synthesis round trip is near-exact") {
  const AudioBuffer x = random_signal(10000, 5);
  const AudioBuffer y = skf::stft_synthesis(skf::analyze(x, 2048, 256));
  REQUIRE(y.samples.size() == x.samples.size());
  REQUIRE(y.sample_rate == x.sample_rate);
  REQUIRE(rel_l2_error(x.samples, y.samples) < 1e-6);
}

TEST_CASE("round trip holds across hop choices, including non-power-of-two hops") {
  for (std::size_t hop : {std::size_t{37}, std::size_t{64}, std::size_t{256}, std::size_t{512}}) {
    const AudioBuffer x = random_signal(3000, hop);
    const AudioBuffer y = skf::stft_synthesis(skf::analyze(x, 512, hop));
    REQUIRE(rel_l2_error(x.samples, y.samples) < 1e-6);
  }
}

TEST_CASE("zero spectrogram synthesizes to a zero signal") {
  AudioBuffer x;
  x.samples.assign(4096, 0.0);
  const AudioBuffer y = skf::stft_synthesis(skf::analyze(x, 1024, 128));
  for (double v : y.samples) REQUIRE(v == 0.0);
}

TEST_CASE("unit impulse survives the round trip at its sample index") {
  AudioBuffer x;
  x.samples.assign(6000, 0.0);
  x.samples[777] = 1.0;
  const AudioBuffer y = skf::stft_synthesis(skf::analyze(x, 2048, 256));
  REQUIRE(std::fabs(y.samples[777] - 1.0) < 1e-6);
  for (std::size_t i = 0; i < y.samples.size(); ++i)
    if (i != 777) REQUIRE(std::fabs(y.samples[i]) < 1e-6);
}

TEST_CASE("synthesis rejects configurations that leave interior samples uncovered") {
  const AudioBuffer x = random_signal(2000, 9);
  skf::ComplexSpectrogram s = skf::analyze(x, 512, 128);
  s.orig_len = 100000;  // far beyond the frames' reach
  REQUIRE_THROWS_WITH(skf::stft_synthesis(s), "non-invertible configuration");
}

TEST_CASE("magnitude: modulus, conjugation invariance, scalar oracle") {
  skf::ComplexSpectrogram s;
  s.n_fft = 4;
  s.hop = 2;
  s.orig_len = 4;
  s.frames = 1;
  s.bins = 3;
  s.values = {{3.0, 4.0}, {0.0, 0.0}, {-1.5, 2.5}};
  const skf::MagnitudeSpectrogram m = skf::magnitude(s);
  REQUIRE(m.values(0, 0) == Catch::Approx(5.0));
  REQUIRE(m.values(0, 1) == 0.0);
  skf::ComplexSpectrogram conj = s;
  for (auto& v : conj.values) v = std::conj(v);
  const skf::MagnitudeSpectrogram mc = skf::magnitude(conj);
  for (std::size_t i = 0; i < m.values.data.size(); ++i) {
    REQUIRE(m.values.data[i] == mc.values.data[i]);
    REQUIRE(m.values.data[i] >= 0.0);
    const double re = s.values[i].real(), im = s.values[i].imag();
    REQUIRE(m.values.data[i] == Catch::Approx(std::sqrt(re * re + im * im)));
  }
}
