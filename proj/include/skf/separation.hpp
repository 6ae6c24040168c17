// End-to-end inference: per-segment magnitude estimation over a whole
// spectrogram, alpha-generalized Wiener masking (one- and two-model variants),
// the ideal binary mask oracle, and the time-domain separate() pipeline.
#pragma once

#include <stdexcept>
#include <vector>

#include "skf/layers.hpp"
#include "skf/segmentation.hpp"
#include "skf/stft.hpp"
#include "skf/training.hpp"

namespace skf {

enum class StrategyKind {
  gru_s,    // single model, alpha mask against the mixture
  gru_d,    // two models, shared-denominator mask, alpha = 1.7
  gru_dwf,  // two models, alpha = 2 (classical Wiener)
};

inline double default_alpha(StrategyKind kind) {
  return kind == StrategyKind::gru_dwf ? 2.0 : 1.7;
}

struct Strategy {
  StrategyKind kind = StrategyKind::gru_s;
  double alpha = 1.7;
  const Checkpoint* model1 = nullptr;  // target source model
  const Checkpoint* model2 = nullptr;  // complement model (gru_d / gru_dwf)
};

// Masks are not clamped above 1 (the highway stage may exceed the mixture);
// separate() reports their statistics instead.
struct MaskStats {
  double max = 0.0;
  double mean = 0.0;
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw std::invalid_argument("alpha out of (0,2]");
}

/// Runs the model over every segment of the mixture magnitude and flattens
/// the per-segment highway outputs back to an M x N magnitude estimate.
inline MagnitudeSpectrogram estimate_magnitude(const ModelParams& model,
                                               const MagnitudeSpectrogram& mix_mag) {
  if (mix_mag.values.cols != model.N) throw std::invalid_argument("shape mismatch");
  SegmentTensor segs = tensorize(mix_mag.values, model.T, model.L);
  std::vector<Tensor> estimates;
  estimates.reserve(segs.B());
  for (const Tensor& seg : segs.segments) estimates.push_back(model_forward(model, seg).y_hat);
  MagnitudeSpectrogram out = mix_mag;
  out.values = flatten(estimates, segs.M);
  return out;
}

/// Single-model soft mask est^alpha / (mix^alpha + eps).
inline Tensor alpha_mask(const Tensor& est_mag, const Tensor& mix_mag, double alpha) {
  check_alpha(alpha);
  check_same_shape(est_mag, mix_mag);
  Tensor num = pow_scalar(est_mag, alpha);
  Tensor den = pow_scalar(mix_mag, alpha);
  Tensor mask(est_mag.rows, est_mag.cols);
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    mask.data[i] = num.data[i] / (den.data[i] + kLogEps);
  return mask;
}

/// Two-model mask for source 1: est1^alpha / (est1^alpha + est2^alpha + eps).
/// Masks for the two sources share the denominator and sum to one.
inline Tensor two_model_mask(const Tensor& est1, const Tensor& est2, double alpha) {
  check_alpha(alpha);
  check_same_shape(est1, est2);
  Tensor p1 = pow_scalar(est1, alpha);
  Tensor p2 = pow_scalar(est2, alpha);
  Tensor mask(est1.rows, est1.cols);
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    mask.data[i] = p1.data[i] / (p1.data[i] + p2.data[i] + kLogEps);
  return mask;
}

/// Elementwise complex scaling by a non-negative real mask; phase preserved.
inline ComplexSpectrogram apply_mask(const Tensor& mask, const ComplexSpectrogram& y) {
  if (mask.rows != y.frames || mask.cols != y.bins) throw std::invalid_argument("shape mismatch");
  ComplexSpectrogram out = y;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (mask.data[i] < 0.0) throw std::invalid_argument("apply_mask: negative mask");
    out.values[i] *= mask.data[i];
  }
  return out;
}

/// Oracle binary mask: 1 where source j dominates the sum of all competing
/// sources, 0 elsewhere.
inline Tensor ideal_binary_mask(const std::vector<Tensor>& source_mags, std::size_t j) {
  if (source_mags.size() < 2)
    throw std::invalid_argument("ideal_binary_mask requires at least two sources");
  if (j >= source_mags.size()) throw std::invalid_argument("ideal_binary_mask: bad source index");
  for (const auto& s : source_mags) check_same_shape(s, source_mags[0]);
  Tensor mask(source_mags[0].rows, source_mags[0].cols);
  for (std::size_t i = 0; i < mask.data.size(); ++i) {
    double rest = 0.0;
    for (std::size_t k = 0; k < source_mags.size(); ++k)
      if (k != j) rest += source_mags[k].data[i];
    mask.data[i] = source_mags[j].data[i] > rest ? 1.0 : 0.0;
  }
  return mask;
}

/// Full separation: STFT, magnitude estimation with one or two models, mask,
/// complex masking with the mixture phase, overlap-add synthesis. The output
/// has exactly the input's length.
inline AudioBuffer separate(const Strategy& strategy, const AudioBuffer& x,
                            MaskStats* stats = nullptr) {
  check_alpha(strategy.alpha);
  if (strategy.model1 == nullptr) throw std::runtime_error("strategy requires a checkpoint");
  if (strategy.kind != StrategyKind::gru_s && strategy.model2 == nullptr)
    throw std::runtime_error("strategy requires two checkpoints");
  const TrainConfig& cfg = strategy.model1->config;
  ComplexSpectrogram y = analyze(x, cfg.n_fft, cfg.hop);
  MagnitudeSpectrogram mix_mag = magnitude(y);
  MagnitudeSpectrogram est1 = estimate_magnitude(strategy.model1->params, mix_mag);
  Tensor mask;
  if (strategy.kind == StrategyKind::gru_s) {
    mask = alpha_mask(est1.values, mix_mag.values, strategy.alpha);
  } else {
    const TrainConfig& cfg2 = strategy.model2->config;
    if (cfg2.n_fft != cfg.n_fft || cfg2.hop != cfg.hop || cfg2.bins() != cfg.bins())
      throw std::runtime_error("checkpoint DSP configurations disagree");
    MagnitudeSpectrogram est2 = estimate_magnitude(strategy.model2->params, mix_mag);
    mask = two_model_mask(est1.values, est2.values, strategy.alpha);
  }
  if (stats != nullptr) {
    stats->max = 0.0;
    stats->mean = 0.0;
    for (double v : mask.data) {
      stats->max = std::max(stats->max, v);
      stats->mean += v;
    }
    if (!mask.data.empty()) stats->mean /= static_cast<double>(mask.data.size());
  }
  return stft_synthesis(apply_mask(mask, y));
}

}  // namespace skf
