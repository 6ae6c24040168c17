#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "skf/tensor.hpp"

using skf::Tensor;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                     double lo = -1.0, double hi = 1.0) {
  Tensor t(rows, cols);
  for (auto& v : t.data) {
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    v = lo + (hi - lo) * u;
  }
  return t;
}

}  // namespace

TEST_CASE("matmul matches a triple-loop oracle") {
  std::mt19937_64 rng(7);
  const Tensor a = random_tensor(2, 3, rng);
  const Tensor b = random_tensor(3, 4, rng);
  const Tensor c = skf::matmul(a, b);
  REQUIRE(c.rows == 2);
  REQUIRE(c.cols == 4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double expect = 0.0;
      for (std::size_t k = 0; k < 3; ++k) expect += a(i, k) * b(k, j);
      REQUIRE(c(i, j) == Catch::Approx(expect).margin(1e-14));
    }
}

TEST_CASE("matmul transposed kernels agree with explicit transposes") {
  std::mt19937_64 rng(11);
  const Tensor a = random_tensor(4, 3, rng);
  const Tensor b = random_tensor(5, 3, rng);
  const Tensor nt = skf::matmul_nt(a, b);  // a * b^T
  const Tensor ref = skf::matmul(a, skf::transpose(b));
  REQUIRE(nt.rows == ref.rows);
  for (std::size_t i = 0; i < nt.data.size(); ++i)
    REQUIRE(nt.data[i] == Catch::Approx(ref.data[i]).margin(1e-13));
  const Tensor c = random_tensor(4, 2, rng);
  const Tensor tn = skf::matmul_tn(a, c);  // a^T * c
  const Tensor ref2 = skf::matmul(skf::transpose(a), c);
  for (std::size_t i = 0; i < tn.data.size(); ++i)
    REQUIRE(tn.data[i] == Catch::Approx(ref2.data[i]).margin(1e-13));
}

TEST_CASE("row slices of a product equal the product of row slices bit for bit") {
  // The taped GRU precomputes X*W for the whole sequence and slices per step;
  // the plain GRU multiplies one row at a time. Both must agree exactly.
  std::mt19937_64 rng(13);
  const Tensor x = random_tensor(9, 5, rng);
  const Tensor w = random_tensor(5, 7, rng);
  const Tensor full = skf::matmul(x, w);
  for (std::size_t t = 0; t < x.rows; ++t) {
    const Tensor row = skf::matmul(skf::slice_rows(x, t, t + 1), w);
    const Tensor sliced = skf::slice_rows(full, t, t + 1);
    for (std::size_t i = 0; i < row.data.size(); ++i) REQUIRE(row.data[i] == sliced.data[i]);
  }
}

TEST_CASE("shape mismatches throw") {
  const Tensor a(2, 3);
  const Tensor b(3, 2);
  REQUIRE_THROWS_AS(skf::add(a, b), std::invalid_argument);
  REQUIRE_THROWS_AS(skf::hadamard(a, b), std::invalid_argument);
  REQUIRE_THROWS_AS(skf::matmul(a, Tensor(2, 2)), std::invalid_argument);
  REQUIRE_THROWS_AS(skf::concat_cols(a, Tensor(3, 3)), std::invalid_argument);
  REQUIRE_THROWS_AS(skf::slice_rows(a, 1, 5), std::invalid_argument);
  REQUIRE_THROWS_AS(skf::add_rowvec(a, Tensor(1, 2)), std::invalid_argument);
}

TEST_CASE("concat and slice round trip") {
  std::mt19937_64 rng(17);
  const Tensor a = random_tensor(3, 2, rng);
  const Tensor b = random_tensor(3, 4, rng);
  const Tensor cc = skf::concat_cols(a, b);
  REQUIRE(cc.cols == 6);
  REQUIRE(cc(1, 1) == a(1, 1));
  REQUIRE(cc(2, 3) == b(2, 1));
  const Tensor rr = skf::concat_rows({a, random_tensor(2, 2, rng)});
  REQUIRE(rr.rows == 5);
  const Tensor back = skf::slice_rows(rr, 0, 3);
  for (std::size_t i = 0; i < a.data.size(); ++i) REQUIRE(back.data[i] == a.data[i]);
}

TEST_CASE("pow_scalar clamps zero base and rejects negative base with fractional exponent") {
  Tensor t(1, 3, {0.0, 4.0, 0.25});
  const Tensor r = skf::pow_scalar(t, 0.5);
  REQUIRE(r.data[0] == 0.0);
  REQUIRE(r.data[1] == Catch::Approx(2.0));
  REQUIRE(r.data[2] == Catch::Approx(0.5));
  Tensor neg(1, 1, {-1.0});
  REQUIRE_THROWS_AS(skf::pow_scalar(neg, 0.5), std::invalid_argument);
  REQUIRE(skf::pow_scalar(neg, 2.0).data[0] == Catch::Approx(1.0));
}

TEST_CASE("reverse_rows flips row order") {
  Tensor t(3, 2, {1, 2, 3, 4, 5, 6});
  const Tensor r = skf::reverse_rows(t);
  REQUIRE(r(0, 0) == 5);
  REQUIRE(r(2, 1) == 2);
}
