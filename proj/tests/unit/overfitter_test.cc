// Copyright 2026 The NIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "gradcheck.h"
#include "nic/codec.h"
#include "nic/errors.h"
#include "nic/float16.h"
#include "nic/image_io.h"
#include "nic/ops.h"
#include "nic/overfitter.h"
#include "nic/rd.h"
#include "truncated_oracle.h"

namespace nic {
namespace {

using testing::kFdTolerance;
using testing::MaxGradientError;

ArchConfig TinyArch() {
  ArchConfig a;
  a.latent_channels = 4;
  a.hyper_channels = 4;
  a.base_width = 6;
  a.kernel = 3;
  return a;
}

TEST_CASE("bias subset selection") {
  const ArchConfig arch;
  const auto all = SelectBiasSubset(arch, 3);
  CHECK(all.size() == 131u);
  for (int i = 0; i < 131; ++i) CHECK(all[i] == i);
  const auto last = SelectBiasSubset(arch, 1);
  CHECK(last == std::vector<int>{128, 129, 130});
  for (int l = 1; l < 3; ++l) {
    const auto small = SelectBiasSubset(arch, l), big = SelectBiasSubset(arch, l + 1);
    CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
  CHECK_THROWS_AS(SelectBiasSubset(arch, 0), InvalidArgument);
  CHECK_THROWS_AS(SelectBiasSubset(arch, 4), InvalidArgument);
}

TEST_CASE("relaxed update quantization") {
  const Tensor b({3}, {0.2f, -0.05f, 0.0f});
  const Tensor q = Tensor::Scalar(10.0f);
  const std::vector<float> zero(3, 0.0f);
  const auto r0 = QuantizeUpdatesTrain(b, q, std::span<const float>(zero));
  for (int i = 0; i < 3; ++i) {
    CHECK(r0.symbols.data()[i] == doctest::Approx(b.data()[i] * 10.0f));
    CHECK(r0.delta.data()[i] == b.data()[i]);
  }
  NoiseSource rng(1);
  std::vector<float> u(3);
  for (int rep = 0; rep < 100; ++rep) {
    for (float& v : u) v = rng.CenteredUniform();
    const auto r = QuantizeUpdatesTrain(b, q, std::span<const float>(u));
    for (int i = 0; i < 3; ++i) CHECK(std::fabs(r.delta.data()[i] - b.data()[i]) <= 0.5f / 10.0f + 1e-7f);
  }
}

TEST_CASE("relaxed update gradients match finite differences") {
  for (uint64_t seed : {1, 2, 3}) {
    NoiseSource rng(seed);
    TensorD b = testing::RandomTensorD({5}, rng, 0.3);
    TensorD q = TensorD::Scalar(4.0 + 10.0 * rng.Uniform());
    std::vector<double> u(5);
    for (double& v : u) v = rng.Uniform() - 0.5;
    TensorD probe = testing::RandomTensorD({5}, rng);
    const auto delta = [&] {
      return Sum(Mul(QuantizeUpdatesTrain(b, q, std::span<const double>(u)).delta, probe));
    };
    const auto symbols = [&] {
      return Sum(Mul(QuantizeUpdatesTrain(b, q, std::span<const double>(u)).symbols, probe));
    };
    CHECK(MaxGradientError(delta, {b, q}) <= kFdTolerance);
    CHECK(MaxGradientError(symbols, {b, q}) <= kFdTolerance);
    // d delta / d q = -u / q^2.
    q.zero_grad();
    Sum(QuantizeUpdatesTrain(b, q, std::span<const double>(u)).delta).backward();
    double expected = 0.0;
    for (double v : u) expected -= v / (q.item() * q.item());
    CHECK(q.grad()[0] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("hard update quantization") {
  const std::vector<float> b{0.26f, -0.14f};
  const HardUpdate h = QuantizeUpdatesTest(b, 10.0);
  CHECK(h.symbols == std::vector<int32_t>{3, -1});
  CHECK(h.delta[0] == doctest::Approx(0.3));
  CHECK(h.delta[1] == doctest::Approx(-0.1));
  const std::vector<float> zero(4, 0.0f);
  const HardUpdate z = QuantizeUpdatesTest(zero, 10.0);
  CHECK(z.symbols == std::vector<int32_t>(4, 0));
  CHECK(z.delta == std::vector<float>(4, 0.0f));
  NoiseSource rng(4);
  std::vector<float> r(1000);
  for (float& v : r) v = static_cast<float>(rng.Uniform() - 0.5);
  for (double q : {3.0, 10.0, 37.5}) {
    const HardUpdate hr = QuantizeUpdatesTest(r, q);
    for (size_t i = 0; i < r.size(); ++i) CHECK(std::fabs(hr.delta[i] - r[i]) <= 0.5 / q + 1e-6);
  }
  // Half away from zero.
  const std::vector<float> halves{0.05f, -0.05f, 0.15f};
  CHECK(QuantizeUpdatesTest(halves, 10.0).symbols == std::vector<int32_t>{1, -1, 2});
}

TEST_CASE("update rate of identical entries is nearly free") {
  const Tensor same({20}, 3.0f);
  CHECK(UpdateRateTrain(same).item() < 1e-3);
}

TEST_CASE("update rate of gaussian samples tracks the continuous entropy") {
  const double entropy = std::log2(5.0 * std::sqrt(2.0 * M_PI * M_E));
  CHECK(entropy == doctest::Approx(4.3690).epsilon(1e-4));
  NoiseSource rng(5);
  for (int n : {200, 5000}) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(5.0 * rng.Normal());
    const double per = UpdateRateTrain(Tensor({n}, v)).item() / n;
    CHECK(per >= entropy - 0.1);
    CHECK(per <= entropy + 0.6);
  }
}

TEST_CASE("update rate is permutation invariant") {
  NoiseSource rng(6);
  std::vector<double> v(64);
  for (double& x : v) x = 3.0 * rng.Normal();
  const double a = UpdateRateTrain(TensorD({64}, v)).item();
  std::reverse(v.begin(), v.end());
  std::rotate(v.begin(), v.begin() + 17, v.end());
  CHECK(UpdateRateTrain(TensorD({64}, v)).item() == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("update rate gradient matches finite differences") {
  for (uint64_t seed : {7, 8, 9}) {
    NoiseSource rng(seed);
    TensorD v = testing::RandomTensorD({12}, rng, 3.0);
    CHECK(MaxGradientError([&] { return UpdateRateTrain(v); }, {v}) <= kFdTolerance);
  }
}

TEST_CASE("truncated fit of a constant vector") {
  const std::vector<int32_t> zeros(17, 0);
  const auto fit = FitTruncatedGaussian(zeros);
  CHECK(fit.s_min == 0);
  CHECK(fit.s_max == 0);
  CHECK(fit.pmf == std::vector<double>{1.0});
  CHECK(fit.log_likelihood == 0.0);
  const ExtraSection e = EncodeUpdate(zeros, 10.0, fit.mean, fit.sigma);
  CHECK(DecodeUpdate(e, zeros.size()) == zeros);
}

TEST_CASE("truncated fit is symmetric on a symmetric sample") {
  const std::vector<int32_t> s{-1, 0, 1, -1, 0, 1};
  const auto fit = FitTruncatedGaussian(s);
  CHECK(std::fabs(fit.mean) < 1e-9);
  REQUIRE(fit.pmf.size() == 3u);
  CHECK(fit.pmf[0] == fit.pmf[2]);
}

TEST_CASE("truncated fit of log-linear counts keeps a finite mean") {
  // Counts doubling per symbol have no finite maximiser without the mean bound.
  std::vector<int32_t> s;
  for (int k = 0; k < 10; ++k) s.push_back(-1);
  for (int k = 0; k < 20; ++k) s.push_back(0);
  for (int k = 0; k < 40; ++k) s.push_back(1);
  const auto fit = FitTruncatedGaussian(s);
  CHECK(std::fabs(fit.mean) <= kUpdateMeanRange);
  CHECK(fit.sigma <= kUpdateSigmaCap);
  CHECK(fit.pmf[0] < fit.pmf[1]);
  CHECK(fit.pmf[1] < fit.pmf[2]);
  const ExtraSection e = EncodeUpdate(s, 200.0, fit.mean, fit.sigma);
  CHECK(std::isfinite(DecodeF16(e.mean)));
  CHECK(DecodeUpdate(e, s.size()) == s);
}

TEST_CASE("truncated fit reaches the grid-search maximum") {
  NoiseSource rng(10);
  int worse = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testing::RandomUpdateSymbols(rng);
    const auto fit = FitTruncatedGaussian(s);
    CHECK(fit.s_min == *std::min_element(s.begin(), s.end()));
    CHECK(fit.s_max == *std::max_element(s.begin(), s.end()));
    const double oracle_at_fit = testing::TruncatedLogLikelihoodOracle(s, fit.mean, fit.sigma);
    CHECK(fit.log_likelihood == doctest::Approx(oracle_at_fit).epsilon(1e-10));
    if (oracle_at_fit < testing::GridSearchMaximum(s, 200) - 1e-6) ++worse;
  }
  CHECK(worse == 0);
}

TEST_CASE("update codec round trip and rate honesty") {
  NoiseSource rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = testing::RandomUpdateSymbols(rng);
    const auto fit = FitTruncatedGaussian(s);
    const ExtraSection e = EncodeUpdate(s, 7.25, fit.mean, fit.sigma);
    CHECK(DecodeF16(e.sigma) >= kUpdateSigmaFloor);
    CHECK(e.s_min == fit.s_min);
    CHECK(e.s_max == fit.s_max);
    CHECK(DecodeUpdate(e, s.size()) == s);
    const auto pmf = TruncatedGaussianPmf(DecodeF16(e.mean), DecodeF16(e.sigma), e.s_min, e.s_max);
    const CdfTable table = BuildCdfTable(pmf, e.s_min);
    double ideal = 0.0;
    for (int32_t v : s) ideal += table.CodeLength(v);
    CHECK(8.0 * static_cast<double>(e.coded.size()) <= ideal + 128.0);
  }
  const std::vector<int32_t> wide{-129, 0};
  CHECK_THROWS_AS(EncodeUpdate(wide, 10.0, 0.0, 1.0), NumericError);
}

TEST_CASE("apply update touches only the selected biases") {
  const ModelParams params = InitModel(ArchConfig{}, 12);
  const std::vector<int32_t> zeros(67, 0);
  const ModelParams same = ApplyUpdate(params, zeros, 10.0, 2);
  const auto a = NamedTensors(params), b = NamedTensors(same);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(std::equal(a[i].second.data().begin(), a[i].second.data().end(),
                     b[i].second.data().begin()));
  }
  std::vector<int32_t> s(67);
  for (int i = 0; i < 67; ++i) s[i] = (i * 7) % 11 - 5;
  const std::vector<float> before = DecoderBiasVector(params);
  const ModelParams updated = ApplyUpdate(params, s, 10.0, 2);
  CHECK(DecoderBiasVector(params) == before);
  const std::vector<float> after = DecoderBiasVector(updated);
  const std::vector<float> delta = UpdateDelta(s, 10.0);
  for (int i = 0; i < 64; ++i) CHECK(after[i] == before[i]);
  for (int i = 0; i < 67; ++i) {
    const float restored = after[64 + i] - delta[i];
    const float ulp = std::nextafter(std::fabs(before[64 + i]), INFINITY) - std::fabs(before[64 + i]);
    CHECK(std::fabs(restored - before[64 + i]) <= ulp);
  }
  const auto c = NamedTensors(updated);
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].first == "g_s.1.bias" || a[i].first == "g_s.2.bias") continue;
    CHECK(std::equal(a[i].second.data().begin(), a[i].second.data().end(),
                     c[i].second.data().begin()));
  }
}

struct DoubleProblem {
  ModelParamsD params;
  OverfitProblemT<double> problem;
};

DoubleProblem MakeProblem(uint64_t seed, int layers) {
  NoiseSource rng(seed);
  DoubleProblem p;
  p.params = CastModel<double>(InitModel(TinyArch(), seed));
  const TensorD y = testing::RandomTensorD({1, 4, 2, 2}, rng, 3.0);
  const int first = 3 - layers;
  p.problem.params = &p.params;
  p.problem.prefix = first == 0 ? y : DecoderForward(y, p.params, 0, {}, first);
  p.problem.target = Shift(testing::RandomTensorD({1, 3, 14, 16}, rng, 0.3), 0.5).detach();
  p.problem.layers = layers;
  p.problem.latent_bits = 900.0;
  p.problem.rate_of_psnr = RdInterp({800.0, 5.0}, {1600.0, 12.0});
  return p;
}

TEST_CASE("loss ratio gradient matches finite differences") {
  for (uint64_t seed : {13, 14, 15}) {
    for (int layers : {1, 2, 3}) {
      DoubleProblem p = MakeProblem(seed, layers);
      const int n = static_cast<int>(SelectBiasSubset(TinyArch(), layers).size());
      NoiseSource rng(seed + 100);
      TensorD b = testing::RandomTensorD({n}, rng, 0.05);
      TensorD q = TensorD::Scalar(10.0);
      std::vector<double> u(n);
      for (double& v : u) v = rng.Uniform() - 0.5;
      const double err = MaxGradientError(
          [&] { return LossRatio(p.problem, b, q, std::span<const double>(u)); }, {b, q},
          testing::kFdStepPiecewise);
      CHECK(err <= kFdTolerance);
    }
  }
}

TEST_CASE("loss ratio of a zero update") {
  DoubleProblem p = MakeProblem(16, 1);
  const TensorD b({3});
  const std::vector<double> zero(3, 0.0);
  const double loss = LossRatio(p.problem, b, TensorD::Scalar(10.0), std::span<const double>(zero)).item();
  const TensorD x_hat = Clamp(DecoderForward(p.problem.prefix, p.params, 2), 0.0, 1.0);
  const double psnr = PsnrTensor(p.problem.target, x_hat).item();
  const double expected = (900.0 + 64.0 + UpdateRateTrain(TensorD({3})).item()) /
                          p.problem.rate_of_psnr.Rate(psnr);
  CHECK(loss == doctest::Approx(expected).epsilon(1e-12));
  CHECK(loss == doctest::Approx((900.0 + 64.0) / p.problem.rate_of_psnr.Rate(psnr)).epsilon(1e-6));
  p.problem.rate_of_psnr = RdInterp({-5000.0, 60.0}, {-4000.0, 70.0});
  CHECK_THROWS_AS(LossRatio(p.problem, b, TensorD::Scalar(10.0), std::span<const double>(zero)),
                  InvalidArgument);
}

struct ImageCase {
  Image image;
  ModelParams params;
  Tensor y_hat;
};

ImageCase MakeImageCase(uint64_t seed) {
  ImageCase c;
  c.params = InitModel(TinyArch(), seed);
  c.image.width = 32;
  c.image.height = 32;
  c.image.rgb.resize(32 * 32 * 3);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        c.image.rgb[(y * 32 + x) * 3 + ch] = static_cast<uint8_t>((x * 5 + y * 3 + ch * 60) % 256);
      }
    }
  }
  c.y_hat = QuantizeRound(Analyze(ImageToTensor(c.image), c.params).y);
  return c;
}

TEST_CASE("zero iterations return the initial state") {
  const ImageCase c = MakeImageCase(17);
  OverfitConfig config;
  config.iterations = 0;
  config.layers = 2;
  const Image base = TensorToImage(Synthesize(c.y_hat, c.params), 32, 32);
  const double psnr = Psnr(c.image.rgb, base.rgb);
  const RdInterp r({1000.0, psnr - 1.0}, {2000.0, psnr + 1.0});
  const OverfitResult res = OverfitImage(c.image, c.y_hat, c.params, 1200.0, r, config);
  REQUIRE(res.trace.size() == 1u);
  CHECK(res.best_iteration == 0);
  CHECK(res.best.q == 10.0);
  CHECK(std::all_of(res.best.b.begin(), res.best.b.end(), [](float v) { return v == 0.0f; }));
  CHECK(res.best_psnr == psnr);
  CHECK(res.best_reconstruction.rgb == base.rgb);
  const double update_bits = 8.0 * static_cast<double>(res.best.extra.coded.size());
  CHECK(res.best_acc == doctest::Approx((1200.0 + update_bits + 64.0) / r.Rate(psnr)).epsilon(1e-12));
  CHECK(res.initial_acc == res.best_acc);
}

TEST_CASE("best snapshot is the minimum of the trace") {
  const ImageCase c = MakeImageCase(18);
  OverfitConfig config;
  config.iterations = 40;
  config.layers = 3;
  config.learning_rate = 1e-2;
  config.seed = 3;
  const Image base = TensorToImage(Synthesize(c.y_hat, c.params), 32, 32);
  const double psnr = Psnr(c.image.rgb, base.rgb);
  const RdInterp r({1000.0, psnr - 1.0}, {2000.0, psnr + 1.0});
  const OverfitResult res = OverfitImage(c.image, c.y_hat, c.params, 1200.0, r, config);
  REQUIRE(res.trace.size() == 41u);
  double min_acc = INFINITY;
  int arg = -1;
  for (const auto& row : res.trace) {
    if (row.acc < min_acc) {
      min_acc = row.acc;
      arg = row.iteration;
    }
  }
  CHECK(res.best_acc == min_acc);
  CHECK(res.best_iteration == arg);
  // The stored snapshot reproduces its reconstruction.
  const ModelParams updated = ApplyUpdate(c.params, res.best.symbols, res.best.q, config.layers);
  CHECK(TensorToImage(Synthesize(c.y_hat, updated), 32, 32).rgb == res.best_reconstruction.rgb);
  // Same seed, same trace.
  const OverfitResult again = OverfitImage(c.image, c.y_hat, c.params, 1200.0, r, config);
  CHECK(again.best_acc == res.best_acc);
  CHECK(again.best.symbols == res.best.symbols);
}

}  // namespace
}  // namespace nic
