// RIFF/WAVE reading and writing (PCM 16-bit and IEEE float 32-bit) and
// channel-average downmixing.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "skf/stft.hpp"

namespace skf {

struct MultiChannelBuffer {
  std::vector<std::vector<double>> channels;
  std::uint32_t sample_rate = 0;
};

enum class WavFormat { float32, pcm16 };

namespace detail {

inline std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated WAV file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw std::runtime_error("truncated WAV file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

inline void write_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF)};
  out.write(b, 2);
}

}  // namespace detail

/// Reads a PCM 16-bit or IEEE float 32-bit WAV file. 16-bit samples are
/// dequantized by /32768.
inline MultiChannelBuffer wav_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open WAV file: " + path);
  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw std::runtime_error("malformed WAV header");
  detail::read_u32(in);  // RIFF payload size; data chunk length is authoritative
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw std::runtime_error("malformed WAV header");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<char> payload;

  while (in.peek() != EOF) {
    in.read(tag, 4);
    if (!in) break;
    const std::uint32_t size = detail::read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (size < 16) throw std::runtime_error("malformed WAV header");
      format = detail::read_u16(in);
      channels = detail::read_u16(in);
      sample_rate = detail::read_u32(in);
      detail::read_u32(in);  // byte rate
      detail::read_u16(in);  // block align
      bits = detail::read_u16(in);
      in.ignore(size - 16 + (size & 1));
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      payload.resize(size);
      in.read(payload.data(), size);
      if (!in) throw std::runtime_error("truncated WAV file");
      break;
    } else {
      in.ignore(size + (size & 1));
    }
    if (!in) throw std::runtime_error("truncated WAV file");
  }
  if (!have_fmt || payload.empty()) throw std::runtime_error("malformed WAV header");
  if (channels == 0 || sample_rate == 0) throw std::runtime_error("malformed WAV header");

  const bool is_pcm16 = format == 1 && bits == 16;
  const bool is_float32 = format == 3 && bits == 32;
  if (!is_pcm16 && !is_float32)
    throw std::runtime_error("unsupported WAV codec (need PCM16 or float32)");

  const std::size_t bytes_per_sample = is_pcm16 ? 2 : 4;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t n_frames = payload.size() / frame_bytes;

  MultiChannelBuffer out;
  out.sample_rate = sample_rate;
  out.channels.assign(channels, std::vector<double>(n_frames));
  const char* p = payload.data();
  for (std::size_t i = 0; i < n_frames; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      if (is_pcm16) {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        out.channels[c][i] = static_cast<double>(v) / 32768.0;
        p += 2;
      } else {
        float v;
        std::memcpy(&v, p, 4);
        out.channels[c][i] = static_cast<double>(v);
        p += 4;
      }
    }
  }
  return out;
}

/// Writes a mono WAV file. Float output is lossless for float-representable
/// samples; PCM16 rounds to x*32768 with clamping.
inline void wav_write(const std::string& path, const AudioBuffer& audio,
                      WavFormat format = WavFormat::float32) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open WAV file for writing: " + path);
  const std::uint16_t bits = format == WavFormat::float32 ? 32 : 16;
  const std::uint16_t fmt_code = format == WavFormat::float32 ? 3 : 1;
  const std::uint32_t bytes_per_sample = bits / 8;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(audio.samples.size() * bytes_per_sample);
  out.write("RIFF", 4);
  detail::write_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::write_u32(out, 16);
  detail::write_u16(out, fmt_code);
  detail::write_u16(out, 1);  // mono
  detail::write_u32(out, audio.sample_rate);
  detail::write_u32(out, audio.sample_rate * bytes_per_sample);
  detail::write_u16(out, static_cast<std::uint16_t>(bytes_per_sample));
  detail::write_u16(out, bits);
  out.write("data", 4);
  detail::write_u32(out, data_size);
  for (double x : audio.samples) {
    if (format == WavFormat::float32) {
      const float f = static_cast<float>(x);
      char b[4];
      std::memcpy(b, &f, 4);
      out.write(b, 4);
    } else {
      double scaled = x * 32768.0;
      scaled = std::max(-32768.0, std::min(32767.0, std::nearbyint(scaled)));
      detail::write_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
    }
  }
  if (!out) throw std::runtime_error("WAV write failed: " + path);
}

/// Per-sample mean over channels.
inline AudioBuffer downmix(const MultiChannelBuffer& multi) {
  if (multi.channels.empty()) throw std::invalid_argument("downmix: no channels");
  const std::size_t len = multi.channels.front().size();
  for (const auto& c : multi.channels)
    if (c.size() != len) throw std::invalid_argument("downmix: channel length mismatch");
  AudioBuffer out;
  out.sample_rate = multi.sample_rate;
  out.samples.resize(len, 0.0);
  for (const auto& c : multi.channels)
    for (std::size_t i = 0; i < len; ++i) out.samples[i] += c[i];
  const double inv = 1.0 / static_cast<double>(multi.channels.size());
  for (double& x : out.samples) x *= inv;
  return out;
}

inline AudioBuffer wav_read_mono(const std::string& path) { return downmix(wav_read(path)); }

}  // namespace skf
