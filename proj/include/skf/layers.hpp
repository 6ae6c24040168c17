// The separation network: a bidirectional GRU encoder with residual
// connections, a dimensionality-reducing GRU decoder, time-step sub-sampling,
// a skip-filtering connection that multiplies the input magnitudes by the
// absolute decoder output (forcing the decoder to act as a time-frequency
// mask), and a highway enhancement layer with weights shared across time.
//
// Every forward exists twice: on plain tensors (inference) and on a Graph
// (training). Both paths bottom out in the same kernels and sequence them
// identically, so their outputs are bit-identical; tests lock this.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "skf/autodiff.hpp"
#include "skf/segmentation.hpp"
#include "skf/tensor.hpp"

namespace skf {

struct GruParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Tensor Wz, Uz, bz;  // update gate
  Tensor Wr, Ur, br;  // reset gate
  Tensor Wh, Uh, bh;  // candidate
};

struct HighwayParams {
  Tensor Wh, bh;    // gating path
  Tensor Wtr, btr;  // transform path (also drives the carry gate)
};

struct ModelParams {
  std::size_t N = 0;  // bins
  std::size_t T = 0;  // frames per segment
  std::size_t L = 0;  // context frames per side
  GruParams enc_fwd, enc_bwd;  // N -> N
  GruParams dec;               // 2N -> N
  HighwayParams highway;       // N x N
};

inline double glorot_bound(std::size_t rows, std::size_t cols) {
  return std::sqrt(6.0 / static_cast<double>(rows + cols));
}

/// Uniform draw from [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))]. The
/// uniform is derived from the raw mt19937_64 stream so initialization is
/// reproducible independent of the standard library's distribution code.
inline Tensor glorot_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = glorot_bound(rows, cols);
  Tensor t(rows, cols);
  for (auto& v : t.data) {
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
    v = bound * (2.0 * u - 1.0);
  }
  return t;
}

inline Tensor glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return glorot_init(rows, cols, rng);
}

// Weights are drawn in declaration order (Wz, Uz, Wr, Ur, Wh, Uh); biases are
// zero-initialized.
inline GruParams make_gru(std::size_t input_dim, std::size_t hidden_dim, std::mt19937_64& rng) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.Wz = glorot_init(input_dim, hidden_dim, rng);
  p.Uz = glorot_init(hidden_dim, hidden_dim, rng);
  p.bz = Tensor::zeros(1, hidden_dim);
  p.Wr = glorot_init(input_dim, hidden_dim, rng);
  p.Ur = glorot_init(hidden_dim, hidden_dim, rng);
  p.br = Tensor::zeros(1, hidden_dim);
  p.Wh = glorot_init(input_dim, hidden_dim, rng);
  p.Uh = glorot_init(hidden_dim, hidden_dim, rng);
  p.bh = Tensor::zeros(1, hidden_dim);
  return p;
}

inline HighwayParams make_highway(std::size_t n, std::mt19937_64& rng) {
  HighwayParams hw;
  hw.Wh = glorot_init(n, n, rng);
  hw.bh = Tensor::zeros(1, n);
  hw.Wtr = glorot_init(n, n, rng);
  hw.btr = Tensor::zeros(1, n);
  return hw;
}

inline ModelParams make_model(std::size_t N, std::size_t T, std::size_t L, std::uint64_t seed) {
  if (T <= 2 * L) throw std::runtime_error("context exceeds segment");
  std::mt19937_64 rng(seed);
  ModelParams m;
  m.N = N;
  m.T = T;
  m.L = L;
  m.enc_fwd = make_gru(N, N, rng);
  m.enc_bwd = make_gru(N, N, rng);
  m.dec = make_gru(2 * N, N, rng);
  m.highway = make_highway(N, rng);
  return m;
}

/// One GRU step: z and r gates, tanh candidate, convex blend with the
/// previous hidden state. Every component of the result stays in (-1, 1)
/// whenever h_prev does.
inline Tensor gru_step(const GruParams& p, const Tensor& x_t, const Tensor& h_prev) {
  Tensor z = sigmoid(add(add(matmul(x_t, p.Wz), matmul(h_prev, p.Uz)), p.bz));
  Tensor r = sigmoid(add(add(matmul(x_t, p.Wr), matmul(h_prev, p.Ur)), p.br));
  Tensor cand = tanh(add(add(matmul(x_t, p.Wh), matmul(hadamard(r, h_prev), p.Uh)), p.bh));
  Tensor one = Tensor::full(1, p.hidden_dim, 1.0);
  return add(hadamard(subtract(one, z), h_prev), hadamard(z, cand));
}

/// Runs the GRU over all rows of x_seq (zero initial state) and stacks the
/// hidden states into a T x hidden matrix.
inline Tensor gru_sequence(const GruParams& p, const Tensor& x_seq) {
  Tensor h = Tensor::zeros(1, p.hidden_dim);
  std::vector<Tensor> rows;
  rows.reserve(x_seq.rows);
  for (std::size_t t = 0; t < x_seq.rows; ++t) {
    h = gru_step(p, slice_rows(x_seq, t, t + 1), h);
    rows.push_back(h);
  }
  return concat_rows(rows);
}

/// Bidirectional encoding with residual connections: row t of the result is
/// [h_t + y_t, hb_t + y_rev_t], where hb runs over the row-reversed input and
/// y_rev_t is the t-th row of that reversed input. Output is T x 2N.
inline Tensor bigru_encode(const GruParams& enc_fwd, const GruParams& enc_bwd,
                           const Tensor& x_seq) {
  Tensor hf = gru_sequence(enc_fwd, x_seq);
  Tensor x_rev = reverse_rows(x_seq);
  Tensor hb = gru_sequence(enc_bwd, x_rev);
  return concat_cols(add(hf, x_seq), add(hb, x_rev));
}

/// Decoder GRU with input width 2N and hidden width N.
inline Tensor decode(const GruParams& dec, const Tensor& h_enc) {
  if (h_enc.cols != dec.input_dim) throw std::invalid_argument("shape mismatch");
  return gru_sequence(dec, h_enc);
}

/// Drops L time steps from each end; identical contract to context_trim.
inline Tensor subsample(const Tensor& h_dec, std::size_t L) { return context_trim(h_dec, L); }

/// Skip-filtering connection: the trimmed input magnitudes are multiplied
/// elementwise by |h| so the decoder output acts as a mask in [0, 1).
inline Tensor skip_filter(const Tensor& y_trim, const Tensor& h_sub) {
  return hadamard(y_trim, abs_val(h_sub));
}

/// Highway enhancement, weights shared across time steps:
/// sigma(Y Wh + bh) .* relu(Y Wtr + btr) + Y .* (1 - sigma(Y Wtr + btr)).
/// Non-negative for non-negative input.
inline Tensor highway(const HighwayParams& hw, const Tensor& y) {
  Tensor ph = add_rowvec(matmul(y, hw.Wh), hw.bh);
  Tensor pt = add_rowvec(matmul(y, hw.Wtr), hw.btr);
  Tensor one = Tensor::full(pt.rows, pt.cols, 1.0);
  return add(hadamard(sigmoid(ph), relu(pt)), hadamard(y, subtract(one, sigmoid(pt))));
}

struct ForwardResult {
  Tensor y_filt;  // T' x N, skip-filter output
  Tensor y_hat;   // T' x N, highway-enhanced output
};

/// Full per-segment forward pass: encode, decode, subsample, skip-filter,
/// highway.
inline ForwardResult model_forward(const ModelParams& m, const Tensor& segment) {
  Tensor h_enc = bigru_encode(m.enc_fwd, m.enc_bwd, segment);
  Tensor h_dec = decode(m.dec, h_enc);
  Tensor h_sub = subsample(h_dec, m.L);
  Tensor y_trim = context_trim(segment, m.L);
  ForwardResult out;
  out.y_filt = skip_filter(y_trim, h_sub);
  out.y_hat = highway(m.highway, out.y_filt);
  return out;
}

inline std::size_t count_params(const ModelParams& m) {
  std::size_t total = 0;
  for (const GruParams* g : {&m.enc_fwd, &m.enc_bwd, &m.dec})
    total += g->Wz.numel() + g->Uz.numel() + g->bz.numel() + g->Wr.numel() + g->Ur.numel() +
             g->br.numel() + g->Wh.numel() + g->Uh.numel() + g->bh.numel();
  total += m.highway.Wh.numel() + m.highway.bh.numel() + m.highway.Wtr.numel() +
           m.highway.btr.numel();
  return total;
}

// Closed form of the same count for bin width N.
inline std::size_t count_params(std::size_t N) {
  return 2 * (3 * (N * N + N * N + N)) + 3 * ((2 * N) * N + N * N + N) + 2 * (N * N + N);
}

// Parameter tensors in canonical (checkpoint) order.
inline std::vector<Tensor*> param_list(ModelParams& m) {
  std::vector<Tensor*> out;
  for (GruParams* g : {&m.enc_fwd, &m.enc_bwd, &m.dec})
    for (Tensor* t : {&g->Wz, &g->Uz, &g->bz, &g->Wr, &g->Ur, &g->br, &g->Wh, &g->Uh, &g->bh})
      out.push_back(t);
  for (Tensor* t : {&m.highway.Wh, &m.highway.bh, &m.highway.Wtr, &m.highway.btr})
    out.push_back(t);
  return out;
}

inline std::vector<const Tensor*> param_list(const ModelParams& m) {
  std::vector<const Tensor*> out;
  for (const GruParams* g : {&m.enc_fwd, &m.enc_bwd, &m.dec})
    for (const Tensor* t :
         {&g->Wz, &g->Uz, &g->bz, &g->Wr, &g->Ur, &g->br, &g->Wh, &g->Uh, &g->bh})
      out.push_back(t);
  for (const Tensor* t : {&m.highway.Wh, &m.highway.bh, &m.highway.Wtr, &m.highway.btr})
    out.push_back(t);
  return out;
}

inline std::vector<std::string> param_names() {
  std::vector<std::string> out;
  for (const char* g : {"enc_fwd", "enc_bwd", "dec"})
    for (const char* t : {"Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh"})
      out.push_back(std::string(g) + "." + t);
  for (const char* t : {"Wh", "bh", "Wtr", "btr"}) out.push_back(std::string("highway.") + t);
  return out;
}

// ---------------------------------------------------------------------------
// Taped variants for training. The per-step arithmetic matches the plain path
// exactly; the only difference is that whole-sequence input projections are
// computed once and sliced per step, which produces bit-identical rows.
// ---------------------------------------------------------------------------

struct GruVars {
  Var Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh;
};

struct HighwayVars {
  Var Wh, bh, Wtr, btr;
};

struct ModelVars {
  GruVars enc_fwd, enc_bwd, dec;
  HighwayVars highway;
};

inline GruVars insert_params(Graph& g, const GruParams& p) {
  GruVars v;
  v.Wz = g.param(p.Wz);
  v.Uz = g.param(p.Uz);
  v.bz = g.param(p.bz);
  v.Wr = g.param(p.Wr);
  v.Ur = g.param(p.Ur);
  v.br = g.param(p.br);
  v.Wh = g.param(p.Wh);
  v.Uh = g.param(p.Uh);
  v.bh = g.param(p.bh);
  return v;
}

inline ModelVars insert_params(Graph& g, const ModelParams& m) {
  ModelVars v;
  v.enc_fwd = insert_params(g, m.enc_fwd);
  v.enc_bwd = insert_params(g, m.enc_bwd);
  v.dec = insert_params(g, m.dec);
  v.highway.Wh = g.param(m.highway.Wh);
  v.highway.bh = g.param(m.highway.bh);
  v.highway.Wtr = g.param(m.highway.Wtr);
  v.highway.btr = g.param(m.highway.btr);
  return v;
}

// Vars in the same canonical order as param_list.
inline std::vector<Var> var_list(const ModelVars& v) {
  std::vector<Var> out;
  for (const GruVars* g : {&v.enc_fwd, &v.enc_bwd, &v.dec})
    for (Var t : {g->Wz, g->Uz, g->bz, g->Wr, g->Ur, g->br, g->Wh, g->Uh, g->bh})
      out.push_back(t);
  for (Var t : {v.highway.Wh, v.highway.bh, v.highway.Wtr, v.highway.btr}) out.push_back(t);
  return out;
}

inline Var gru_sequence(Graph& g, const GruVars& p, Var x_seq, std::size_t steps,
                        std::size_t hidden_dim) {
  Var xz = g.matmul(x_seq, p.Wz);
  Var xr = g.matmul(x_seq, p.Wr);
  Var xh = g.matmul(x_seq, p.Wh);
  Var h = g.constant(Tensor::zeros(1, hidden_dim));
  Var one = g.constant(Tensor::full(1, hidden_dim, 1.0));
  std::vector<Var> rows;
  rows.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Var z = g.sigmoid(g.add(g.add(g.slice_rows(xz, t, t + 1), g.matmul(h, p.Uz)), p.bz));
    Var r = g.sigmoid(g.add(g.add(g.slice_rows(xr, t, t + 1), g.matmul(h, p.Ur)), p.br));
    Var cand =
        g.tanh(g.add(g.add(g.slice_rows(xh, t, t + 1), g.matmul(g.hadamard(r, h), p.Uh)), p.bh));
    h = g.add(g.hadamard(g.subtract(one, z), h), g.hadamard(z, cand));
    rows.push_back(h);
  }
  return g.concat_rows(rows);
}

inline Var bigru_encode(Graph& g, const GruVars& enc_fwd, const GruVars& enc_bwd, Var x_seq,
                        Var x_rev, std::size_t steps, std::size_t hidden_dim) {
  Var hf = gru_sequence(g, enc_fwd, x_seq, steps, hidden_dim);
  Var hb = gru_sequence(g, enc_bwd, x_rev, steps, hidden_dim);
  return g.concat_cols(g.add(hf, x_seq), g.add(hb, x_rev));
}

inline Var highway(Graph& g, const HighwayVars& hw, Var y, std::size_t rows, std::size_t cols) {
  Var ph = g.add_rowvec(g.matmul(y, hw.Wh), hw.bh);
  Var pt = g.add_rowvec(g.matmul(y, hw.Wtr), hw.btr);
  Var one = g.constant(Tensor::full(rows, cols, 1.0));
  return g.add(g.hadamard(g.sigmoid(ph), g.relu(pt)), g.hadamard(y, g.subtract(one, g.sigmoid(pt))));
}

struct ForwardVars {
  Var y_filt;
  Var y_hat;
};

/// Taped per-segment forward. segment and segment_rev are graph leaves holding
/// the T x N input and its row reversal.
inline ForwardVars model_forward(Graph& g, const ModelVars& mv, Var segment, Var segment_rev,
                                 std::size_t T, std::size_t L, std::size_t N) {
  Var h_enc = bigru_encode(g, mv.enc_fwd, mv.enc_bwd, segment, segment_rev, T, N);
  Var h_dec = gru_sequence(g, mv.dec, h_enc, T, N);
  Var h_sub = g.slice_rows(h_dec, L, T - L);
  Var y_trim = g.slice_rows(segment, L, T - L);
  ForwardVars out;
  out.y_filt = g.hadamard(y_trim, g.abs_val(h_sub));
  out.y_hat = highway(g, mv.highway, out.y_filt, T - 2 * L, N);
  return out;
}

}  // namespace skf
