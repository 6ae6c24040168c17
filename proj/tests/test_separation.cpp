#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "skf/separation.hpp"

using skf::MagnitudeSpectrogram;
using skf::ModelParams;
using skf::Tensor;

namespace {

Tensor random_grid(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = 0.0,
                   double hi = 1.0) {
  Tensor t(rows, cols);
  for (auto& v : t.data) {
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
    v = lo + (hi - lo) * u;
  }
  return t;
}

MagnitudeSpectrogram wrap_mag(Tensor grid, std::size_t n_fft, std::size_t hop) {
  MagnitudeSpectrogram m;
  m.n_fft = n_fft;
  m.hop = hop;
  m.orig_len = grid.rows * hop;
  m.values = std::move(grid);
  return m;
}

}  // namespace

TEST_CASE("estimate_magnitude: zero mixture gives a zero estimate of the same shape") {
  const ModelParams model = skf::make_model(9, 6, 1, 11);
  const MagnitudeSpectrogram mix = wrap_mag(Tensor(30, 9), 16, 4);
  const MagnitudeSpectrogram est = skf::estimate_magnitude(model, mix);
  REQUIRE(est.values.rows == 30);
  REQUIRE(est.values.cols == 9);
  for (double v : est.values.data) REQUIRE(v == 0.0);
}

TEST_CASE("estimate_magnitude output shape matches the paper-sized input") {
  const ModelParams model = skf::make_model(1025, 18, 3, 1);
  std::mt19937_64 rng(2);
  const MagnitudeSpectrogram mix = wrap_mag(random_grid(100, 1025, rng), 2048, 256);
  const MagnitudeSpectrogram est = skf::estimate_magnitude(model, mix);
  REQUIRE(est.values.rows == 100);
  REQUIRE(est.values.cols == 1025);
  for (double v : est.values.data) REQUIRE(v >= 0.0);
}

TEST_CASE("estimate_magnitude equals independent per-segment forwards plus flatten") {
  std::mt19937_64 rng(3);
  const ModelParams model = skf::make_model(7, 6, 1, 19);
  const MagnitudeSpectrogram mix = wrap_mag(random_grid(23, 7, rng), 16, 4);
  const MagnitudeSpectrogram est = skf::estimate_magnitude(model, mix);

  const skf::SegmentTensor segs = skf::tensorize(mix.values, model.T, model.L);
  std::vector<Tensor> parts;
  for (const Tensor& seg : segs.segments) parts.push_back(skf::model_forward(model, seg).y_hat);
  const Tensor manual = skf::flatten(parts, segs.M);
  REQUIRE(est.values.data == manual.data);
  REQUIRE_THROWS_AS(skf::estimate_magnitude(model, wrap_mag(Tensor(10, 5), 16, 4)),
                    std::invalid_argument);
}

TEST_CASE("alpha_mask arithmetic and bounds") {
  std::mt19937_64 rng(5);
  const Tensor mix = random_grid(4, 6, rng, 0.2, 1.0);
  const Tensor m_same = skf::alpha_mask(mix, mix, 1.7);
  for (double v : m_same.data) REQUIRE(v == Catch::Approx(1.0).margin(1e-9));
  const Tensor est(1, 1, {1.0});
  const Tensor two(1, 1, {2.0});
  REQUIRE(skf::alpha_mask(est, two, 2.0).data[0] == Catch::Approx(0.25).epsilon(1e-9));
  const Tensor zero(1, 1, {0.0});
  REQUIRE(skf::alpha_mask(zero, two, 1.7).data[0] == 0.0);
  REQUIRE_THROWS_AS(skf::alpha_mask(mix, mix, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(skf::alpha_mask(mix, mix, 2.5), std::invalid_argument);
}

TEST_CASE("two_model_mask partitions unity with a shared denominator") {
  std::mt19937_64 rng(7);
  const Tensor e1 = random_grid(5, 8, rng, 0.0, 1.0);
  const Tensor e2 = random_grid(5, 8, rng, 0.0, 1.0);
  for (double alpha : {1.0, 1.7, 2.0}) {
    const Tensor m1 = skf::two_model_mask(e1, e2, alpha);
    const Tensor m2 = skf::two_model_mask(e2, e1, alpha);
    for (std::size_t i = 0; i < m1.data.size(); ++i)
      REQUIRE(m1.data[i] + m2.data[i] == Catch::Approx(1.0).margin(1e-9));
  }
  const Tensor same = skf::two_model_mask(e1, e1, 1.7);
  for (double v : same.data) REQUIRE(v == Catch::Approx(0.5).margin(1e-9));
  // est2 = 0: mask is ~1 wherever est1 is supported
  const Tensor m = skf::two_model_mask(e1, Tensor(5, 8), 2.0);
  for (std::size_t i = 0; i < m.data.size(); ++i)
    if (e1.data[i] > 0.01) REQUIRE(m.data[i] == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("apply_mask scales complex entries and preserves phase") {
  std::mt19937_64 rng(9);
  skf::ComplexSpectrogram y;
  y.n_fft = 8;
  y.hop = 2;
  y.orig_len = 12;
  y.frames = 3;
  y.bins = 5;
  y.values.resize(15);
  for (auto& v : y.values)
    v = {2.0 * (static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0,
         2.0 * (static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0};

  const Tensor ones = Tensor::full(3, 5, 1.0);
  const skf::ComplexSpectrogram same = skf::apply_mask(ones, y);
  for (std::size_t i = 0; i < y.values.size(); ++i) REQUIRE(same.values[i] == y.values[i]);

  const skf::ComplexSpectrogram zero = skf::apply_mask(Tensor(3, 5), y);
  for (const auto& v : zero.values) REQUIRE(std::abs(v) == 0.0);

  const Tensor mask = random_grid(3, 5, rng, 0.01, 2.0);
  const skf::ComplexSpectrogram masked = skf::apply_mask(mask, y);
  for (std::size_t i = 0; i < y.values.size(); ++i) {
    const double da = std::arg(masked.values[i]) - std::arg(y.values[i]);
    REQUIRE(std::fabs(da) < 1e-12);
  }
  REQUIRE_THROWS_AS(skf::apply_mask(Tensor(2, 5), y), std::invalid_argument);
}

TEST_CASE("ideal binary mask assigns bins to the dominant source") {
  std::mt19937_64 rng(13);
  const Tensor s1 = random_grid(4, 6, rng, 0.0, 1.0);
  const Tensor s2 = random_grid(4, 6, rng, 0.0, 1.0);
  const Tensor mask = skf::ideal_binary_mask({s1, s2}, 0);
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    REQUIRE(mask.data[i] == (s1.data[i] > s2.data[i] ? 1.0 : 0.0));

  // dominance: source twice everything else combined -> all ones
  Tensor big = s2;
  for (std::size_t i = 0; i < big.data.size(); ++i) big.data[i] = 2.0 * s2.data[i] + 0.1;
  const Tensor all_ones = skf::ideal_binary_mask({big, s2}, 0);
  for (double v : all_ones.data) REQUIRE(v == 1.0);
  const Tensor all_zero = skf::ideal_binary_mask({Tensor(4, 6), s2}, 0);
  for (std::size_t i = 0; i < all_zero.data.size(); ++i)
    REQUIRE(all_zero.data[i] == 0.0);

  // idempotence: masking the masked magnitudes again changes nothing
  const Tensor masked1 = skf::hadamard(s1, mask);
  const Tensor mask2 = skf::ideal_binary_mask({masked1, s2}, 0);
  const Tensor masked2 = skf::hadamard(masked1, mask2);
  for (std::size_t i = 0; i < masked1.data.size(); ++i) {
    if (mask.data[i] == 1.0) REQUIRE(masked2.data[i] == masked1.data[i]);
    else REQUIRE(masked2.data[i] == 0.0);
  }
  REQUIRE_THROWS_AS(skf::ideal_binary_mask({s1}, 0), std::invalid_argument);
}

TEST_CASE("single-model masks with est <= mix never amplify") {
  std::mt19937_64 rng(17);
  const Tensor mix = random_grid(5, 7, rng, 0.1, 1.0);
  Tensor est = mix;
  const Tensor shrink = random_grid(5, 7, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < est.data.size(); ++i) est.data[i] *= shrink.data[i];
  for (double alpha : {0.5, 1.0, 1.7, 2.0}) {
    const Tensor mask = skf::alpha_mask(est, mix, alpha);
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
      REQUIRE(mask.data[i] >= 0.0);
      REQUIRE(mask.data[i] <= 1.0 + 1e-12);
      REQUIRE(mask.data[i] * mix.data[i] <= mix.data[i] + 1e-12);
    }
  }
}

TEST_CASE("separate with an all-zero model yields near silence") {
  skf::TrainConfig cfg;
  cfg.n_fft = 64;
  cfg.hop = 16;
  cfg.sample_rate = 8000;
  cfg.t_frames = 6;
  cfg.l_context = 1;
  cfg.n_bins = 33;
  cfg.hidden = 33;
  skf::Checkpoint ck;
  ck.config = cfg;
  ck.params = skf::make_model_shell(33, 6, 1);  // all-zero weights

  skf::AudioBuffer x;
  x.sample_rate = 8000;
  x.samples.resize(2000);
  std::mt19937_64 rng(21);
  for (auto& v : x.samples)
    v = 2.0 * (static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0;

  skf::Strategy strategy;
  strategy.kind = skf::StrategyKind::gru_s;
  strategy.alpha = 1.7;
  strategy.model1 = &ck;
  skf::MaskStats stats;
  const skf::AudioBuffer out = skf::separate(strategy, x, &stats);
  REQUIRE(out.samples.size() == x.samples.size());
  REQUIRE(stats.max == Catch::Approx(0.0).margin(1e-12));
  for (double v : out.samples) REQUIRE(std::fabs(v) < 1e-9);
}

TEST_CASE("oracle bypass: a mask built from the mixture itself reconstructs the input") {
  skf::AudioBuffer x;
  x.sample_rate = 8000;
  x.samples.resize(4000);
  std::mt19937_64 rng(23);
  for (auto& v : x.samples)
    v = 2.0 * (static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
  const skf::ComplexSpectrogram y = skf::analyze(x, 256, 64);
  const skf::MagnitudeSpectrogram mag = skf::magnitude(y);
  const Tensor mask = skf::alpha_mask(mag.values, mag.values, 1.7);
  const skf::AudioBuffer back = skf::stft_synthesis(skf::apply_mask(mask, y));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.samples.size(); ++i) {
    num += (back.samples[i] - x.samples[i]) * (back.samples[i] - x.samples[i]);
    den += x.samples[i] * x.samples[i];
  }
  REQUIRE(std::sqrt(num / den) < 1e-5);
}

TEST_CASE("separate demands a second checkpoint for two-model strategies") {
  skf::TrainConfig cfg;
  cfg.n_fft = 64;
  cfg.hop = 16;
  cfg.n_bins = 33;
  cfg.hidden = 33;
  cfg.t_frames = 6;
  cfg.l_context = 1;
  skf::Checkpoint ck;
  ck.config = cfg;
  ck.params = skf::make_model_shell(33, 6, 1);
  skf::AudioBuffer x;
  x.samples.assign(512, 0.1);
  skf::Strategy strategy;
  strategy.kind = skf::StrategyKind::gru_d;
  strategy.alpha = 1.7;
  strategy.model1 = &ck;
  REQUIRE_THROWS_WITH(skf::separate(strategy, x), "strategy requires two checkpoints");
}
