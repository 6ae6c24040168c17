// Builds the overlapping context-frame tensor consumed by the encoder, trims
// context frames, and inverts the reshape back to a flat spectrogram.
//
// Segments advance by T - 2L frames. The spectrogram is conceptually prepended
// with L zero frames so that after context trimming the concatenated segments
// cover every original frame exactly once; indices past the end read as zero
// rows.
#pragma once

#include <stdexcept>
#include <vector>

#include "skf/stft.hpp"
#include "skf/tensor.hpp"

namespace skf {

struct SegmentTensor {
  std::vector<Tensor> segments;  // B entries, each T x N
  std::size_t T = 0;             // frames per segment
  std::size_t L = 0;             // context frames per side
  std::size_t M = 0;             // original frame count
  std::size_t N = 0;             // bins

  std::size_t B() const { return segments.size(); }
  std::size_t trimmed() const { return T - 2 * L; }  // frames kept per segment
};

inline SegmentTensor tensorize(const Tensor& grid, std::size_t T, std::size_t L) {
  if (T <= 2 * L) throw std::runtime_error("context exceeds segment");
  if (grid.rows < 1) throw std::invalid_argument("empty spectrogram");
  const std::size_t hop = T - 2 * L;
  const std::size_t M = grid.rows;
  const std::size_t N = grid.cols;
  const std::size_t B = (M + hop - 1) / hop;
  SegmentTensor out;
  out.T = T;
  out.L = L;
  out.M = M;
  out.N = N;
  out.segments.reserve(B);
  for (std::size_t b = 0; b < B; ++b) {
    Tensor seg(T, N);
    for (std::size_t t = 0; t < T; ++t) {
      // Padded frame index b*hop + t maps to original frame b*hop + t - L.
      const std::ptrdiff_t o =
          static_cast<std::ptrdiff_t>(b * hop + t) - static_cast<std::ptrdiff_t>(L);
      if (o < 0 || o >= static_cast<std::ptrdiff_t>(M)) continue;  // zero row
      for (std::size_t n = 0; n < N; ++n) seg(t, n) = grid(static_cast<std::size_t>(o), n);
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

inline SegmentTensor tensorize(const MagnitudeSpectrogram& mag, std::size_t T, std::size_t L) {
  return tensorize(mag.values, T, L);
}

/// Keeps rows L..T-L (exclusive), discarding L context frames on each side.
inline Tensor context_trim(const Tensor& segment, std::size_t L) {
  if (segment.rows <= 2 * L) throw std::runtime_error("context exceeds segment");
  return slice_rows(segment, L, segment.rows - L);
}

/// Concatenates B trimmed segments in order and truncates to the original M
/// frames, undoing tensorize + context_trim.
inline Tensor flatten(const std::vector<Tensor>& estimates, std::size_t M) {
  if (estimates.empty()) throw std::runtime_error("insufficient coverage");
  const std::size_t tp = estimates.front().rows;
  const std::size_t N = estimates.front().cols;
  std::size_t total = 0;
  for (const auto& e : estimates) {
    if (e.rows != tp || e.cols != N) throw std::invalid_argument("shape mismatch");
    total += e.rows;
  }
  if (total < M) throw std::runtime_error("insufficient coverage");
  Tensor out(M, N);
  std::size_t r = 0;
  for (const auto& e : estimates) {
    for (std::size_t t = 0; t < e.rows && r < M; ++t, ++r)
      for (std::size_t n = 0; n < N; ++n) out(r, n) = e(t, n);
    if (r >= M) break;
  }
  return out;
}

}  // namespace skf
