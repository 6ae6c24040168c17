// Losses, ground-truth preparation, adam with global-norm gradient clipping,
// the early-stopped training loop, and checkpoint persistence.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "skf/autodiff.hpp"
#include "skf/config.hpp"
#include "skf/layers.hpp"
#include "skf/segmentation.hpp"
#include "skf/tensor.hpp"

namespace skf {

/// Generalized Kullback-Leibler divergence
/// sum a*log((a+eps)/(b+eps)) - a + b over all elements, eps = 1e-12.
inline double gkl(const Tensor& target, const Tensor& estimate) {
  check_same_shape(target, estimate);
  double s = 0.0;
  for (std::size_t i = 0; i < target.data.size(); ++i) {
    const double a = target.data[i];
    const double b = estimate.data[i];
    if (a < 0.0 || b < 0.0) throw std::invalid_argument("gkl: negative entries");
    s += a * std::log((a + kLogEps) / (b + kLogEps)) - a + b;
  }
  return s;
}

/// Frobenius norm squared.
inline double sum_squares(const Tensor& t) {
  double s = 0.0;
  for (double x : t.data) s += x * x;
  return s;
}

/// Joint objective: KL to the skip-filter output, KL to the highway output,
/// plus an L2 penalty on the highway output scaled by lambda.
inline double joint_loss(const Tensor& target, const Tensor& y_filt, const Tensor& y_hat,
                         double lambda) {
  return gkl(target, y_filt) + gkl(target, y_hat) + lambda * sum_squares(y_hat);
}

/// Taped version of gkl with a constant target. The target-only terms are
/// folded into one additive constant so the tape only differentiates through
/// the estimate.
inline Var gkl_tape(Graph& g, const Tensor& target, Var estimate) {
  double const_part = 0.0;
  for (double a : target.data) {
    if (a < 0.0) throw std::invalid_argument("gkl: negative entries");
    const_part += a * std::log(a + kLogEps) - a;
  }
  Var cross = g.sum_all(g.hadamard(g.constant(target), g.log_eps(estimate)));
  return g.add(g.subtract(g.sum_all(estimate), cross), g.constant(Tensor::scalar(const_part)));
}

inline Var joint_loss_tape(Graph& g, const Tensor& target, const ForwardVars& f, double lambda) {
  Var l2 = g.scale(g.sum_all(g.hadamard(f.y_hat, f.y_hat)), lambda);
  return g.add(g.add(gkl_tape(g, target, f.y_filt), gkl_tape(g, target, f.y_hat)), l2);
}

/// Generalized Wiener ground truth for source j:
/// (|S_j|^alpha / (sum_k |S_k|^alpha + eps)) .* mix, eps = 1e-12.
inline Tensor wiener_target(const std::vector<Tensor>& source_mags, const Tensor& mix_mag,
                            std::size_t j, double alpha = 1.0) {
  if (source_mags.empty()) throw std::invalid_argument("wiener_target: no sources");
  if (j >= source_mags.size()) throw std::invalid_argument("wiener_target: bad source index");
  for (const auto& s : source_mags) check_same_shape(s, mix_mag);
  Tensor out(mix_mag.rows, mix_mag.cols);
  for (std::size_t i = 0; i < mix_mag.data.size(); ++i) {
    double denom = kLogEps;
    for (const auto& s : source_mags) {
      const double v = s.data[i];
      if (v < 0.0) throw std::invalid_argument("wiener_target: negative entries");
      denom += v == 0.0 ? 0.0 : std::pow(v, alpha);
    }
    const double sj = source_mags[j].data[i];
    const double num = sj == 0.0 ? 0.0 : std::pow(sj, alpha);
    out.data[i] = num / denom * mix_mag.data[i];
  }
  return out;
}

/// Scales all gradients by c/norm when the global L2 norm exceeds c.
/// Returns the factor applied (1 when unchanged).
inline double clip_global_norm(std::vector<Tensor>& grads, double c = 0.35) {
  if (c <= 0.0) throw std::invalid_argument("clip_global_norm: c must be positive");
  double sq = 0.0;
  for (const auto& g : grads) sq += sum_squares(g);
  const double norm = std::sqrt(sq);
  if (norm <= c) return 1.0;
  const double factor = c / norm;
  for (auto& g : grads)
    for (double& x : g.data) x *= factor;
  return factor;
}

struct AdamState {
  std::vector<Tensor> m;  // first moments
  std::vector<Tensor> v;  // second moments
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void init(const std::vector<Tensor*>& params) {
    m.clear();
    v.clear();
    for (const Tensor* p : params) {
      m.push_back(Tensor::zeros(p->rows, p->cols));
      v.push_back(Tensor::zeros(p->rows, p->cols));
    }
    step = 0;
  }
};

/// Standard bias-corrected adam update; increments the step counter.
inline void adam_step(AdamState& state, const std::vector<Tensor*>& params,
                      const std::vector<Tensor>& grads, double lr) {
  if (state.m.size() != params.size() || grads.size() != params.size())
    throw std::invalid_argument("adam_step: state/parameter mismatch");
  state.step += 1;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = *params[p];
    for (std::size_t i = 0; i < theta.data.size(); ++i) {
      const double g = grads[p].data[i];
      double& mm = state.m[p].data[i];
      double& vv = state.v[p].data[i];
      mm = state.beta1 * mm + (1.0 - state.beta1) * g;
      vv = state.beta2 * vv + (1.0 - state.beta2) * g * g;
      const double mhat = mm / c1;
      const double vhat = vv / c2;
      theta.data[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

// One training item: an input segment (with its precomputed row reversal for
// the backward encoder) and the context-trimmed target segment.
struct SegmentSample {
  Tensor input;      // T x N
  Tensor input_rev;  // T x N
  Tensor target;     // T' x N
};

/// Pairs up tensorized mixture segments with trimmed target segments.
inline std::vector<SegmentSample> build_dataset(const Tensor& mix_mag, const Tensor& target_mag,
                                                std::size_t T, std::size_t L) {
  check_same_shape(mix_mag, target_mag);
  SegmentTensor mix_seg = tensorize(mix_mag, T, L);
  SegmentTensor tgt_seg = tensorize(target_mag, T, L);
  std::vector<SegmentSample> out;
  out.reserve(mix_seg.B());
  for (std::size_t b = 0; b < mix_seg.B(); ++b) {
    SegmentSample s;
    s.input = mix_seg.segments[b];
    s.input_rev = reverse_rows(s.input);
    s.target = context_trim(tgt_seg.segments[b], L);
    out.push_back(std::move(s));
  }
  return out;
}

struct TrainResult {
  ModelParams params;  // best-loss parameters
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;  // 1-based
  std::size_t epochs_run = 0;
  std::vector<double> epoch_losses;  // mean per-segment loss per epoch
};

namespace detail {

// Deterministic Fisher-Yates driven by the raw mt19937_64 stream.
inline void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace detail

/// Trains on batches of segments: taped forward, joint loss averaged over the
/// batch, backward, global-norm clipping, adam. Stops once the epoch mean
/// loss has failed to improve for `patience` consecutive epochs and returns
/// the parameters of the best epoch.
inline TrainResult train(const TrainConfig& cfg, const std::vector<SegmentSample>& data,
                         const ModelParams* initial = nullptr) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const std::size_t N = cfg.bins();
  const std::size_t T = cfg.t_frames;
  const std::size_t L = cfg.l_context;
  for (const auto& s : data)
    if (s.input.rows != T || s.input.cols != N || s.target.rows != T - 2 * L ||
        s.target.cols != N)
      throw std::invalid_argument("train: segment dimensions do not match config");

  TrainResult result;
  ModelParams model = initial ? *initial : make_model(N, T, L, cfg.seed);
  std::vector<Tensor*> params = param_list(model);
  AdamState adam;
  adam.init(params);
  std::mt19937_64 order_rng(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t stall = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    detail::shuffle_indices(order, order_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      Graph g;
      ModelVars mv = insert_params(g, model);
      Var total{};
      for (std::size_t k = 0; k < count; ++k) {
        const SegmentSample& s = data[order[start + k]];
        Var seg = g.constant(s.input);
        Var seg_rev = g.constant(s.input_rev);
        ForwardVars f = model_forward(g, mv, seg, seg_rev, T, L, N);
        Var li = joint_loss_tape(g, s.target, f, cfg.lambda_l2);
        total = k == 0 ? li : g.add(total, li);
      }
      Var batch_loss = g.scale(total, 1.0 / static_cast<double>(count));
      const double value = g.value(batch_loss).data[0];
      if (!std::isfinite(value))
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch));
      g.backward(batch_loss);
      std::vector<Var> vars = var_list(mv);
      std::vector<Tensor> grads;
      grads.reserve(vars.size());
      for (Var v : vars) grads.push_back(g.grad(v));
      clip_global_norm(grads, cfg.clip_norm);
      adam_step(adam, params, grads, cfg.learning_rate);
      loss_sum += value * static_cast<double>(count);
    }
    const double epoch_loss = loss_sum / static_cast<double>(data.size());
    result.epoch_losses.push_back(epoch_loss);
    result.epochs_run = epoch;
    if (epoch_loss < result.best_loss) {
      result.best_loss = epoch_loss;
      result.best_epoch = epoch;
      result.params = model;
      stall = 0;
    } else {
      stall += 1;
      if (stall >= cfg.patience) break;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints. Binary layout (little-endian):
//   "SKF1" | u32 version | u64 config_len | config text | u32 epoch |
//   f64 best_loss | u32 tensor_count | tensors
// each tensor: u32 name_len | name | u32 ndim=2 | u64 rows | u64 cols |
//   f64 values (row-major)
// ---------------------------------------------------------------------------

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
  std::uint32_t epoch = 0;
  double best_loss = 0.0;
};

inline constexpr char kCheckpointMagic[4] = {'S', 'K', 'F', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format requires a little-endian host");

namespace detail {

template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, 4);
  detail::write_raw(out, kCheckpointVersion);
  const std::string cfg = config_to_text(ck.config);
  detail::write_raw(out, static_cast<std::uint64_t>(cfg.size()));
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  detail::write_raw(out, ck.epoch);
  detail::write_raw(out, ck.best_loss);
  std::vector<const Tensor*> tensors = param_list(ck.params);
  const std::vector<std::string> names = param_names();
  detail::write_raw(out, static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    detail::write_raw(out, static_cast<std::uint32_t>(names[i].size()));
    out.write(names[i].data(), static_cast<std::streamsize>(names[i].size()));
    detail::write_raw(out, static_cast<std::uint32_t>(2));
    detail::write_raw(out, static_cast<std::uint64_t>(tensors[i]->rows));
    detail::write_raw(out, static_cast<std::uint64_t>(tensors[i]->cols));
    out.write(reinterpret_cast<const char*>(tensors[i]->data.data()),
              static_cast<std::streamsize>(tensors[i]->data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

// Shape-only model used as the target of a checkpoint load.
inline ModelParams make_model_shell(std::size_t N, std::size_t T, std::size_t L) {
  ModelParams m;
  m.N = N;
  m.T = T;
  m.L = L;
  auto shell_gru = [](std::size_t in, std::size_t hid) {
    GruParams p;
    p.input_dim = in;
    p.hidden_dim = hid;
    p.Wz = Tensor::zeros(in, hid);
    p.Uz = Tensor::zeros(hid, hid);
    p.bz = Tensor::zeros(1, hid);
    p.Wr = Tensor::zeros(in, hid);
    p.Ur = Tensor::zeros(hid, hid);
    p.br = Tensor::zeros(1, hid);
    p.Wh = Tensor::zeros(in, hid);
    p.Uh = Tensor::zeros(hid, hid);
    p.bh = Tensor::zeros(1, hid);
    return p;
  };
  m.enc_fwd = shell_gru(N, N);
  m.enc_bwd = shell_gru(N, N);
  m.dec = shell_gru(2 * N, N);
  m.highway.Wh = Tensor::zeros(N, N);
  m.highway.bh = Tensor::zeros(1, N);
  m.highway.Wtr = Tensor::zeros(N, N);
  m.highway.btr = Tensor::zeros(1, N);
  return m;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kCheckpointMagic, 4))
    throw std::runtime_error("not a checkpoint file: " + path);
  const auto version = detail::read_raw<std::uint32_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  const auto cfg_len = detail::read_raw<std::uint64_t>(in);
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), static_cast<std::streamsize>(cfg_len));
  if (!in) throw std::runtime_error("truncated checkpoint");
  Checkpoint ck;
  ck.config = parse_config_text(cfg_text);
  ck.epoch = detail::read_raw<std::uint32_t>(in);
  ck.best_loss = detail::read_raw<double>(in);
  const auto count = detail::read_raw<std::uint32_t>(in);
  ck.params = make_model_shell(ck.config.bins(), ck.config.t_frames, ck.config.l_context);
  std::vector<Tensor*> tensors = param_list(ck.params);
  const std::vector<std::string> names = param_names();
  if (count != tensors.size()) throw std::runtime_error("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto name_len = detail::read_raw<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in || name != names[i]) throw std::runtime_error("checkpoint tensor order mismatch");
    const auto ndim = detail::read_raw<std::uint32_t>(in);
    if (ndim != 2) throw std::runtime_error("checkpoint tensor rank mismatch");
    const auto rows = detail::read_raw<std::uint64_t>(in);
    const auto cols = detail::read_raw<std::uint64_t>(in);
    if (rows != tensors[i]->rows || cols != tensors[i]->cols)
      throw std::runtime_error("checkpoint tensor shape mismatch: " + name);
    in.read(reinterpret_cast<char*>(tensors[i]->data.data()),
            static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint");
  }
  return ck;
}

}  // namespace skf
