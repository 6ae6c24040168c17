// Dense row-major 2-D tensor of doubles plus the elementwise/matrix kernels
// shared by the plain (inference) and taped (training) execution paths.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace skf {

struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  bool requires_grad = false;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Tensor(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) throw std::invalid_argument("shape mismatch");
  }

  static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c); }
  static Tensor full(std::size_t r, std::size_t c, double v) {
    Tensor t(r, c);
    for (auto& x : t.data) x = v;
    return t;
  }
  static Tensor scalar(double v) { return Tensor(1, 1, {v}); }

  std::size_t numel() const { return rows * cols; }
  bool is_scalar() const { return numel() == 1; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

inline void check_same_shape(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch");
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b);
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] + b.data[i];
  return out;
}

inline Tensor subtract(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b);
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] - b.data[i];
  return out;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b);
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

// Adds a 1 x cols row vector to every row of m.
inline Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  if (v.rows != 1 || v.cols != m.cols) throw std::invalid_argument("shape mismatch");
  Tensor out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(r, c) + v.data[c];
  return out;
}

// C = A * B. The k-loop runs outermost per row so that row i of the result is
// bit-identical to multiplying row i alone (relied on by the taped GRU, which
// precomputes whole-sequence input projections and slices per step).
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) throw std::invalid_argument("shape mismatch");
  Tensor out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* ci = &out.data[i * b.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      const double* bk = &b.data[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aik * bk[j];
    }
  }
  return out;
}

// C = A * B^T
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols != b.cols) throw std::invalid_argument("shape mismatch");
  Tensor out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      double s = 0.0;
      const double* ai = &a.data[i * a.cols];
      const double* bj = &b.data[j * b.cols];
      for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      out(i, j) = s;
    }
  return out;
}

// C = A^T * B
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows) throw std::invalid_argument("shape mismatch");
  Tensor out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* ak = &a.data[k * a.cols];
    const double* bk = &b.data[k * b.cols];
    for (std::size_t i = 0; i < a.cols; ++i) {
      double* ci = &out.data[i * b.cols];
      const double aki = ak[i];
      for (std::size_t j = 0; j < b.cols; ++j) ci[j] += aki * bk[j];
    }
  }
  return out;
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows) throw std::invalid_argument("shape mismatch");
  Tensor out(a.rows, a.cols + b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t c = 0; c < a.cols; ++c) out(r, c) = a(r, c);
    for (std::size_t c = 0; c < b.cols; ++c) out(r, a.cols + c) = b(r, c);
  }
  return out;
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("shape mismatch");
  const std::size_t cols = parts.front().cols;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols != cols) throw std::invalid_argument("shape mismatch");
    rows += p.rows;
  }
  Tensor out(rows, cols);
  std::size_t r0 = 0;
  for (const auto& p : parts) {
    std::copy(p.data.begin(), p.data.end(), out.data.begin() + r0 * cols);
    r0 += p.rows;
  }
  return out;
}

// Rows [r0, r1) of m.
inline Tensor slice_rows(const Tensor& m, std::size_t r0, std::size_t r1) {
  if (r0 > r1 || r1 > m.rows) throw std::invalid_argument("shape mismatch");
  Tensor out(r1 - r0, m.cols);
  std::copy(m.data.begin() + r0 * m.cols, m.data.begin() + r1 * m.cols, out.data.begin());
  return out;
}

inline Tensor sigmoid(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = 1.0 / (1.0 + std::exp(-a.data[i]));
  return out;
}

inline Tensor tanh(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = std::tanh(a.data[i]);
  return out;
}

inline Tensor relu(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] > 0.0 ? a.data[i] : 0.0;
  return out;
}

inline Tensor abs_val(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = std::fabs(a.data[i]);
  return out;
}

// x^alpha elementwise. x = 0 with alpha < 1 is clamped to 0 instead of blowing
// up; negative bases are only allowed for integer alpha.
inline Tensor pow_scalar(const Tensor& a, double alpha) {
  Tensor out(a.rows, a.cols);
  const bool integer_alpha = alpha == std::floor(alpha);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double x = a.data[i];
    if (x < 0.0 && !integer_alpha)
      throw std::invalid_argument("pow_scalar: negative base with non-integer exponent");
    out.data[i] = (x == 0.0) ? 0.0 : std::pow(x, alpha);
  }
  return out;
}

inline constexpr double kLogEps = 1e-12;

inline Tensor log_eps(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = std::log(a.data[i] + kLogEps);
  return out;
}

inline Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data) s += x;
  return Tensor::scalar(s);
}

inline Tensor scale(const Tensor& a, double factor) {
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = a.data[i] * factor;
  return out;
}

inline Tensor transpose(const Tensor& a) {
  Tensor out(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) out(c, r) = a(r, c);
  return out;
}

inline Tensor reverse_rows(const Tensor& a) {
  Tensor out(a.rows, a.cols);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t c = 0; c < a.cols; ++c) out(a.rows - 1 - r, c) = a(r, c);
  return out;
}

inline bool all_finite(const Tensor& a) {
  for (double x : a.data)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace skf
