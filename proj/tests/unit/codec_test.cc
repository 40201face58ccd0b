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
#include "nic/distributions.h"
#include "nic/errors.h"
#include "nic/ops.h"

namespace nic {
namespace {

std::vector<float> Values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

TEST_CASE("default architecture dimensions") {
  const ArchConfig arch;
  CHECK(arch.LatentFactor() == 8);
  CHECK(arch.PaddingMultiple() == 32);
  ArchConfig fact;
  fact.kind = ModelKind::kFactorized;
  CHECK(fact.PaddingMultiple() == 8);
  // Decoder widths 64, 64, 3.
  CHECK(arch.NumDecoderBiases() == 131);
  const ModelParams params = InitModel(arch, 1);
  CHECK(arch.NumDecoderBiases() < DecoderWeightCount(params) / 100);
  CHECK(DecoderBiasVector(params).size() == 131u);
}

TEST_CASE("architecture validation") {
  ArchConfig bad;
  bad.decoder_layers = 0;
  CHECK_THROWS_AS(bad.Validate(), InvalidArgument);
  bad = ArchConfig{};
  bad.kernel = 4;
  CHECK_THROWS_AS(bad.Validate(), InvalidArgument);
  ArchConfig fact;
  fact.kind = ModelKind::kFactorized;
  const ModelParams params = InitModel(fact, 3);
  CHECK(params.hyper_encoder.empty());
  CHECK(params.hyper_decoder.empty());
  CHECK(params.prior_loc.size() == fact.latent_channels);
}

TEST_CASE("analyze shapes and determinism") {
  const ArchConfig arch;
  const ModelParams params = InitModel(arch, 2);
  NoiseSource rng(3);
  Tensor x = testing::RandomTensor({1, 3, 64, 64}, rng, 0.5);
  x = Shift(x, 0.5f).detach();
  const AnalysisT<float> a = Analyze(x, params);
  CHECK(a.y.shape() == Shape{1, 48, 8, 8});
  CHECK(a.z.shape() == Shape{1, 32, 2, 2});
  const AnalysisT<float> b = Analyze(x, params);
  CHECK(Values(a.y) == Values(b.y));
  CHECK(Values(a.z) == Values(b.z));
  CHECK_THROWS_AS(Analyze(Tensor({1, 3, 60, 64}), params), ShapeError);
}

TEST_CASE("zero network maps a zero image to the encoder bias pattern") {
  const ArchConfig arch;
  ModelParams params = ZeroModel(arch);
  auto bias = params.encoder.back().bias.mutable_data();
  for (size_t c = 0; c < bias.size(); ++c) bias[c] = 0.01f * static_cast<float>(c) - 0.2f;
  const AnalysisT<float> a = Analyze(Tensor({1, 3, 32, 32}), params);
  for (int c = 0; c < 48; ++c) {
    for (int i = 0; i < 16; ++i) CHECK(a.y.data()[c * 16 + i] == bias[c]);
  }
}

TEST_CASE("quantize round") {
  const Tensor q = QuantizeRound(Tensor({4}, {0.4f, 0.5f, -0.5f, -1.6f}));
  CHECK(Values(q) == std::vector<float>{0.0f, 1.0f, -1.0f, -2.0f});
  const Tensor ints({3}, {-3.0f, 0.0f, 7.0f});
  CHECK(Values(QuantizeRound(ints)) == Values(ints));
  NoiseSource rng(4);
  const Tensor r = testing::RandomTensor({1000}, rng, 20.0);
  const Tensor rq = QuantizeRound(r);
  for (int64_t i = 0; i < r.size(); ++i) CHECK(std::fabs(r.data()[i] - rq.data()[i]) <= 0.5f);
  CHECK_THROWS_AS(QuantizeRound(Tensor({1}, {std::nanf("")})), InvalidArgument);
}

TEST_CASE("quantize noise range, mean and gradient") {
  NoiseSource noise(5);
  Tensor v({1000000}, 0.25f);
  v.set_requires_grad(true);
  const Tensor out = QuantizeNoise(v, noise);
  double mean = 0.0;
  bool in_range = true;
  for (int64_t i = 0; i < v.size(); ++i) {
    const double d = static_cast<double>(out.data()[i]) - 0.25;
    in_range = in_range && d >= -0.5 && d < 0.5;
    mean += d;
  }
  CHECK(in_range);
  CHECK(std::fabs(mean / 1e6) <= 0.002);
  Sum(out).backward();
  for (int64_t i = 0; i < 100; ++i) CHECK(v.grad()[i] == 1.0f);
}

TEST_CASE("factorized pmf") {
  const Tensor loc({1}, {0.0f});
  const Tensor log_scale({1}, {0.0f});
  const auto p0 = FactorizedPmf(Tensor({1, 1, 1, 1}, {0.0f}), loc, log_scale);
  // 2 L(0.5) - 1 = tanh(1/4).
  CHECK(p0[0] == doctest::Approx(std::tanh(0.25)).epsilon(1e-12));
  CHECK(p0[0] == doctest::Approx(0.2449186624).epsilon(1e-9));
  for (int x = 1; x <= 50; ++x) CHECK(LogisticPmf(x, 0.0, 0.3) == LogisticPmf(-x, 0.0, 0.3));
  for (double log_s : {0.0, 1.0, std::log(10.0)}) {
    double total = 0.0;
    for (int x = -1000; x <= 1000; ++x) {
      const double p = LogisticPmf(x, 0.3, log_s);
      // Positive wherever the mass is representable in binary64.
      if (std::fabs(x - 0.3) / std::exp(log_s) < 600.0) CHECK(p > 0.0);
      total += p;
    }
    CHECK(total >= 1.0 - 1e-6);
    CHECK(total <= 1.0 + 1e-12);
  }
}

TEST_CASE("gaussian pmf") {
  // erf(1 / (2 sqrt 2)) at binary64; the polynomial erf is accurate to 1.5e-7.
  const double oracle = std::erf(0.5 / std::sqrt(2.0));
  CHECK(oracle == doctest::Approx(0.382924922548026).epsilon(1e-14));
  CHECK(std::fabs(GaussianPmf(0, 0.0, 1.0) - oracle) < 2e-7);
  CHECK(GaussianPmf(0, 0.0, 1.0) == doctest::Approx(0.382925).epsilon(1e-6));
  NoiseSource rng(6);
  for (int i = 0; i < 200; ++i) {
    const double mu = rng.Uniform() * 20.0 - 10.0;
    const double sigma = kSigmaFloor + rng.Uniform() * 10.0;
    const int x = static_cast<int>(std::lround(mu + sigma * (rng.Uniform() * 40.0 - 20.0)));
    CHECK(std::fabs(GaussianPmf(x, mu, sigma) - GaussianPmf(2.0 * mu - x, mu, sigma)) <= 1e-12);
    CHECK(GaussianPmf(x, mu, sigma) > 0.0);
  }
  for (double mu : {0.0, 0.3, -2.2, 7.3}) {
    CHECK(GaussianPmf(std::round(mu), mu, kSigmaFloor) >= 0.999999);
  }
}

TEST_CASE("conditional pmf of tensors matches the scalar pmf") {
  const Tensor v({1, 2, 1, 2}, {0.0f, 1.0f, -3.0f, 2.0f});
  const Tensor mean({1, 2, 1, 2}, {0.0f, 0.5f, -2.0f, 4.0f});
  const Tensor sigma({1, 2, 1, 2}, {1.0f, 0.7f, 3.0f, 0.04f});
  const auto p = ConditionalPmf(v, mean, sigma);
  for (int i = 0; i < 4; ++i) {
    CHECK(p[i] == doctest::Approx(GaussianPmf(v.data()[i], mean.data()[i], sigma.data()[i])));
  }
}

TEST_CASE("hyper synthesize shapes, determinism and sigma bounds") {
  const ArchConfig arch;
  const ModelParams params = InitModel(arch, 7);
  NoiseSource rng(8);
  const Tensor z = QuantizeRound(testing::RandomTensor({1, 32, 3, 2}, rng, 30.0));
  const auto g = HyperSynthesize(z, params);
  CHECK(g.mean.shape() == Shape{1, 48, 12, 8});
  CHECK(g.sigma.shape() == Shape{1, 48, 12, 8});
  const auto g2 = HyperSynthesize(z, params);
  CHECK(Values(g.mean) == Values(g2.mean));
  CHECK(Values(g.sigma) == Values(g2.sigma));
  for (float s : g.sigma.data()) {
    CHECK(s >= static_cast<float>(kSigmaFloor));
    CHECK(s <= static_cast<float>(kSigmaCap));
  }
}

TEST_CASE("synthesize with bias deltas") {
  const ArchConfig arch;
  const ModelParams params = InitModel(arch, 9);
  NoiseSource rng(10);
  const Tensor y = QuantizeRound(testing::RandomTensor({1, 48, 4, 4}, rng, 3.0));
  const Tensor base = Synthesize(y, params);
  CHECK(base.shape() == Shape{1, 3, 32, 32});
  for (float v : base.data()) CHECK((v >= 0.0f && v <= 1.0f));
  CHECK(Values(Synthesize(y, params)) == Values(base));
  std::vector<float> delta(131, 0.0f);
  CHECK(Values(Synthesize(y, params, std::span<const float>(delta))) == Values(base));
  // Last layer channel 1 occupies index 64 + 64 + 1.
  delta[129] = 0.1f;
  const Tensor shifted = Synthesize(y, params, std::span<const float>(delta));
  double max_diff = 0.0;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 32 * 32; ++i) {
      const double d = std::fabs(shifted.data()[c * 1024 + i] - base.data()[c * 1024 + i]);
      if (c != 1) CHECK(d == 0.0);
      max_diff = std::max(max_diff, d);
    }
  }
  CHECK(max_diff > 0.0);
  CHECK_THROWS_AS(Synthesize(y, params, std::span<const float>(delta.data(), 5)), InvalidArgument);
}

TEST_CASE("rate estimate") {
  // Factorized kind with a single channel.
  ArchConfig arch;
  arch.kind = ModelKind::kFactorized;
  arch.latent_channels = 1;
  ModelParams params = ZeroModel(arch);
  // One symbol of probability 0.5 under a logistic with 2 L(0.5/s) - 1 = 0.5.
  params.prior_log_scale.mutable_data()[0] = static_cast<float>(std::log(0.5 / std::log(3.0)));
  const double one = RateEstimate(Tensor({1, 1, 1, 1}, {0.0f}), Tensor(), params);
  CHECK(one == doctest::Approx(1.0).epsilon(1e-6));

  const Tensor y({1, 1, 2, 3}, {0.0f, 1.0f, -2.0f, 3.0f, 0.0f, 5.0f});
  params.prior_loc.mutable_data()[0] = 0.4f;
  params.prior_log_scale.mutable_data()[0] = 0.7f;
  double oracle = 0.0;
  for (float v : y.data()) oracle -= std::log2(LogisticPmf(v, 0.4f, 0.7f));
  CHECK(RateEstimate(y, Tensor(), params) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("rate estimate of the hyperprior kind sums both terms") {
  const ArchConfig arch;
  const ModelParams params = InitModel(arch, 11);
  NoiseSource rng(12);
  const Tensor z = QuantizeRound(testing::RandomTensor({1, 32, 1, 1}, rng, 4.0));
  const auto g = HyperSynthesize(z, params);
  const Tensor y = QuantizeRound(testing::RandomTensor({1, 48, 4, 4}, rng, 4.0));
  double oracle = 0.0;
  // Masses are floored at the smallest normal double, as in the estimator.
  for (int64_t i = 0; i < y.size(); ++i) {
    oracle -= std::log2(std::max(std::numeric_limits<double>::min(), GaussianPmf(y.data()[i], g.mean.data()[i], g.sigma.data()[i])));
  }
  for (int c = 0; c < 32; ++c) {
    oracle -= std::log2(std::max(std::numeric_limits<double>::min(),
                                 LogisticPmf(z.data()[c], params.prior_loc.data()[c],
                                             params.prior_log_scale.data()[c])));
  }
  CHECK(RateEstimate(y, z, params) == doctest::Approx(oracle).epsilon(1e-6));
}

TEST_CASE("model cloning and casting") {
  const ModelParams params = InitModel(ArchConfig{}, 13);
  const ModelParams clone = CloneModel(params);
  clone.decoder[0].bias.node()->data[0] += 1.0f;
  CHECK(params.decoder[0].bias.data()[0] != clone.decoder[0].bias.data()[0]);
  const ModelParamsD wide = CastModel<double>(params);
  const auto a = NamedTensors(params);
  const auto b = NamedTensors(wide);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(a[i].second.data()[0] == static_cast<float>(b[i].second.data()[0]));
  }
  CHECK(ManifestNames(params.arch).size() == a.size());
}

}  // namespace
}  // namespace nic
