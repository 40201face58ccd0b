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

#include "nic/overfitter.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nic/adam.h"
#include "nic/errors.h"
#include "nic/float16.h"
#include "nic/ops.h"
#include "nic/random.h"

namespace nic {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kLn10 = 2.30258509299404568402;
constexpr int kFitSweeps = 50;
constexpr int kNewtonSteps = 30;

// Log-likelihood of a truncated Gaussian in natural parameters over the
// centred support z' = z - c: sum(eta1 x + eta2 x^2) - n log sum exp(...).
struct NaturalObjective {
  std::vector<double> support;  // centred
  double s1 = 0.0, s2 = 0.0, n = 0.0;

  struct Moments {
    double value, m1, m2, m3, m4;
  };

  Moments Evaluate(double eta1, double eta2) const {
    double peak = -INFINITY;
    for (double z : support) peak = std::max(peak, eta1 * z + eta2 * z * z);
    double sum = 0.0, m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double z : support) {
      const double w = std::exp(eta1 * z + eta2 * z * z - peak);
      sum += w;
      m1 += w * z;
      m2 += w * z * z;
      m3 += w * z * z * z;
      m4 += w * z * z * z * z;
    }
    const double log_z = peak + std::log(sum);
    return {eta1 * s1 + eta2 * s2 - n * log_z, m1 / sum, m2 / sum, m3 / sum, m4 / sum};
  }
};

double Clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

std::vector<int> SelectBiasSubset(const ArchConfig& arch, int l) {
  if (l < 1 || l > arch.decoder_layers) {
    throw InvalidArgument("SelectBiasSubset: l = " + std::to_string(l) + " outside [1, " +
                          std::to_string(arch.decoder_layers) + "]");
  }
  std::vector<int> out;
  int offset = 0;
  for (int i = 0; i < arch.decoder_layers; ++i) {
    const int width = arch.DecoderOutChannels(i);
    if (i >= arch.decoder_layers - l) {
      for (int c = 0; c < width; ++c) out.push_back(offset + c);
    }
    offset += width;
  }
  return out;
}

template <typename T>
RelaxedUpdateT<T> QuantizeUpdatesTrain(const TensorT<T>& b, const TensorT<T>& q,
                                       std::span<const T> noise) {
  if (q.rank() != 0) throw ShapeError("QuantizeUpdatesTrain: q must be a scalar");
  if (static_cast<int64_t>(noise.size()) != b.size()) {
    throw ShapeError("QuantizeUpdatesTrain: one noise draw per element required");
  }
  const TensorT<T> qe = Expand(q, b.shape());
  const TensorT<T> u(b.shape(), std::vector<T>(noise.begin(), noise.end()));
  return {Add(Mul(b, qe), u), Add(b, Div(u, qe))};
}

std::vector<float> UpdateDelta(std::span<const int32_t> symbols, double q) {
  std::vector<float> delta(symbols.size());
  for (size_t i = 0; i < symbols.size(); ++i) {
    delta[i] = static_cast<float>(static_cast<double>(symbols[i]) / q);
  }
  return delta;
}

HardUpdate QuantizeUpdatesTest(std::span<const float> b, double q) {
  if (!(q > 0.0) || !std::isfinite(q)) throw InvalidArgument("QuantizeUpdatesTest: q must be positive");
  HardUpdate out;
  out.symbols.resize(b.size());
  for (size_t i = 0; i < b.size(); ++i) {
    const double s = std::round(static_cast<double>(b[i]) * q);
    if (!std::isfinite(s) || std::fabs(s) > 1e9) {
      throw NumericError("QuantizeUpdatesTest: update symbol overflow");
    }
    out.symbols[i] = static_cast<int32_t>(s);
  }
  out.delta = UpdateDelta(out.symbols, q);
  return out;
}

template <typename T>
TensorT<T> UpdateRateTrain(const TensorT<T>& relaxed) {
  const Shape& shape = relaxed.shape();
  const TensorT<T> mean = Mean(relaxed);
  const TensorT<T> var = Mean(Square(Sub(relaxed, Expand(mean, shape))));
  const T floor2 = T(kUpdateSigmaFloor * kUpdateSigmaFloor);
  const T cap2 = T(kUpdateSigmaCap * kUpdateSigmaCap);
  const TensorT<T> sigma = Sqrt(Clamp(var, floor2, cap2));
  const TensorT<T> mass = GaussianLikelihood(relaxed, Expand(mean, shape), Expand(sigma, shape));
  const T tiny = std::is_same_v<T, float> ? T(1e-30) : T(1e-300);
  return Scale(Sum(Log(Clamp(mass, tiny, T(1)))), T(-1.0 / kLn2));
}

double TruncatedLogLikelihood(std::span<const int32_t> symbols, double mean, double sigma,
                              int32_t s_min, int32_t s_max) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double peak = -INFINITY;
  for (int32_t z = s_min; z <= s_max; ++z) peak = std::max(peak, -(z - mean) * (z - mean) * inv);
  double sum = 0.0;
  for (int32_t z = s_min; z <= s_max; ++z) sum += std::exp(-(z - mean) * (z - mean) * inv - peak);
  const double log_norm = peak + std::log(sum);
  double ll = 0.0;
  for (int32_t s : symbols) ll += -(s - mean) * (s - mean) * inv - log_norm;
  return ll;
}

std::vector<double> TruncatedGaussianPmf(double mean, double sigma, int32_t s_min,
                                         int32_t s_max) {
  if (s_max < s_min) throw InvalidArgument("TruncatedGaussianPmf: empty support");
  const double inv = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> pmf;
  double peak = -INFINITY;
  for (int32_t z = s_min; z <= s_max; ++z) peak = std::max(peak, -(z - mean) * (z - mean) * inv);
  double sum = 0.0;
  for (int32_t z = s_min; z <= s_max; ++z) {
    pmf.push_back(std::exp(-(z - mean) * (z - mean) * inv - peak));
    sum += pmf.back();
  }
  for (double& p : pmf) p /= sum;
  return pmf;
}

TruncatedGaussianFit FitTruncatedGaussian(std::span<const int32_t> symbols) {
  if (symbols.empty()) throw InvalidArgument("FitTruncatedGaussian: no symbols");
  TruncatedGaussianFit fit;
  fit.s_min = *std::min_element(symbols.begin(), symbols.end());
  fit.s_max = *std::max_element(symbols.begin(), symbols.end());
  if (fit.s_min == fit.s_max) {
    fit.mean = fit.s_min;
    fit.sigma = kUpdateSigmaFloor;
    fit.pmf = {1.0};
    fit.log_likelihood = 0.0;
    return fit;
  }

  const double centre = 0.5 * (fit.s_min + fit.s_max);
  NaturalObjective obj;
  for (int32_t z = fit.s_min; z <= fit.s_max; ++z) obj.support.push_back(z - centre);
  double mean = 0.0, sq = 0.0;
  for (int32_t s : symbols) {
    const double x = s - centre;
    obj.s1 += x;
    obj.s2 += x * x;
    mean += x;
  }
  obj.n = static_cast<double>(symbols.size());
  mean /= obj.n;
  for (int32_t s : symbols) sq += (s - centre - mean) * (s - centre - mean);
  const double sigma0 = Clip(std::sqrt(sq / obj.n), kUpdateSigmaFloor, kUpdateSigmaCap);

  // eta2 = -1 / (2 sigma^2) bounded by the sigma floor and cap.
  const double eta2_lo = -1.0 / (2.0 * kUpdateSigmaFloor * kUpdateSigmaFloor);
  const double eta2_hi = -1.0 / (2.0 * kUpdateSigmaCap * kUpdateSigmaCap);
  double eta2 = -1.0 / (2.0 * sigma0 * sigma0);
  double eta1 = mean / (sigma0 * sigma0);
  double best = obj.Evaluate(eta1, eta2).value;

  // Maximises along one coordinate by safeguarded Newton; the objective is
  // concave in (eta1, eta2).
  auto line_search = [&](double& coord, double lo, double hi, auto gradient_curvature) {
    for (int it = 0; it < kNewtonSteps; ++it) {
      const auto [g, h] = gradient_curvature();
      if (!(h < 0.0) || g == 0.0) return;
      double step = -g / h;
      const double start = coord;
      bool improved = false;
      for (int half = 0; half < 40; ++half, step *= 0.5) {
        coord = Clip(start + step, lo, hi);
        const double v = obj.Evaluate(eta1, eta2).value;
        if (v >= best) {
          improved = v > best;
          best = v;
          break;
        }
        coord = start;
      }
      if (!improved || std::fabs(coord - start) <= 1e-15 * (1.0 + std::fabs(start))) return;
    }
  };

  for (int sweep = 0; sweep < kFitSweeps; ++sweep) {
    const double before = best;
    // |mean - centre| <= kUpdateMeanRange is |eta1| <= -2 eta2 kUpdateMeanRange,
    // a convex cone, so each coordinate stays within an interval.
    const double eta1_bound = -2.0 * eta2 * kUpdateMeanRange;
    line_search(eta1, -eta1_bound, eta1_bound, [&] {
      const auto m = obj.Evaluate(eta1, eta2);
      return std::pair{obj.s1 - obj.n * m.m1, -obj.n * (m.m2 - m.m1 * m.m1)};
    });
    line_search(eta2, eta2_lo, std::min(eta2_hi, -std::fabs(eta1) / (2.0 * kUpdateMeanRange)), [&] {
      const auto m = obj.Evaluate(eta1, eta2);
      return std::pair{obj.s2 - obj.n * m.m2, -obj.n * (m.m4 - m.m2 * m.m2)};
    });
    // Joint Newton step, kept only when it improves: removes the slow
    // zig-zag of pure coordinate moves when the two coordinates correlate.
    {
      const auto m = obj.Evaluate(eta1, eta2);
      const double g1 = obj.s1 - obj.n * m.m1, g2 = obj.s2 - obj.n * m.m2;
      const double h11 = -obj.n * (m.m2 - m.m1 * m.m1);
      const double h22 = -obj.n * (m.m4 - m.m2 * m.m2);
      const double h12 = -obj.n * (m.m3 - m.m1 * m.m2);
      const double det = h11 * h22 - h12 * h12;
      if (det > 0.0 && h11 < 0.0) {
        double d1 = -(h22 * g1 - h12 * g2) / det;
        double d2 = -(h11 * g2 - h12 * g1) / det;
        for (int half = 0; half < 40; ++half, d1 *= 0.5, d2 *= 0.5) {
          const double e2 = Clip(eta2 + d2, eta2_lo, eta2_hi);
          const double e1 = Clip(eta1 + d1, 2.0 * e2 * kUpdateMeanRange, -2.0 * e2 * kUpdateMeanRange);
          const double v = obj.Evaluate(e1, e2).value;
          if (v > best) {
            eta1 = e1;
            eta2 = e2;
            best = v;
            break;
          }
        }
      }
    }
    if (best - before <= 1e-15 * (1.0 + std::fabs(best))) break;
  }

  fit.sigma = std::sqrt(-1.0 / (2.0 * eta2));
  fit.mean = centre - eta1 / (2.0 * eta2);
  fit.pmf = TruncatedGaussianPmf(fit.mean, fit.sigma, fit.s_min, fit.s_max);
  fit.log_likelihood = TruncatedLogLikelihood(symbols, fit.mean, fit.sigma, fit.s_min, fit.s_max);
  return fit;
}

uint16_t EncodeUpdateSigma(double sigma) {
  uint16_t code = EncodeF16(std::max(sigma, kUpdateSigmaFloor));
  while (DecodeF16(code) < kUpdateSigmaFloor) ++code;
  return code;
}

ExtraSection EncodeUpdate(std::span<const int32_t> symbols, double q, double mean, double sigma) {
  if (symbols.empty()) throw InvalidArgument("EncodeUpdate: no symbols");
  const auto [lo, hi] = std::minmax_element(symbols.begin(), symbols.end());
  if (*lo < kUpdateSymbolMin || *hi > kUpdateSymbolMax) {
    throw NumericError("EncodeUpdate: update symbols [" + std::to_string(*lo) + ", " +
                       std::to_string(*hi) + "] do not fit in 8 bits");
  }
  ExtraSection e;
  e.q = EncodeF16(q);
  e.mean = EncodeF16(mean);
  e.sigma = EncodeUpdateSigma(sigma);
  e.s_min = static_cast<int8_t>(*lo);
  e.s_max = static_cast<int8_t>(*hi);
  const CdfTable table = BuildCdfTable(
      TruncatedGaussianPmf(DecodeF16(e.mean), DecodeF16(e.sigma), e.s_min, e.s_max), e.s_min);
  RangeEncoder enc;
  for (int32_t s : symbols) enc.Encode(s, table);
  e.coded = enc.Finish();
  return e;
}

std::vector<int32_t> DecodeUpdate(const ExtraSection& e, size_t count) {
  const double mean = DecodeF16(e.mean), sigma = DecodeF16(e.sigma);
  if (!std::isfinite(mean) || !(sigma >= kUpdateSigmaFloor) || e.s_min > e.s_max) {
    throw ParseError(ParseErrorCode::kBadField, "eb: invalid update model parameters");
  }
  const CdfTable table =
      BuildCdfTable(TruncatedGaussianPmf(mean, sigma, e.s_min, e.s_max), e.s_min);
  RangeDecoder dec(e.coded);
  std::vector<int32_t> out(count);
  for (auto& s : out) s = dec.Decode(table);
  dec.Finish();
  return out;
}

ModelParams ApplyUpdate(const ModelParams& params, std::span<const int32_t> symbols, double q,
                        int l) {
  const ArchConfig& arch = params.arch;
  const auto subset = SelectBiasSubset(arch, l);
  if (symbols.size() != subset.size()) {
    throw InvalidArgument("ApplyUpdate: " + std::to_string(symbols.size()) + " symbols for " +
                          std::to_string(subset.size()) + " biases");
  }
  if (!(q > 0.0) || !std::isfinite(q)) throw InvalidArgument("ApplyUpdate: q must be positive");
  const auto delta = UpdateDelta(symbols, q);
  ModelParams out = params;  // shares every tensor
  size_t k = 0;
  for (int i = arch.decoder_layers - l; i < arch.decoder_layers; ++i) {
    std::vector<float> bias(params.decoder[i].bias.data().begin(),
                            params.decoder[i].bias.data().end());
    for (float& v : bias) v += delta[k++];
    out.decoder[i].bias = Tensor(params.decoder[i].bias.shape(), std::move(bias));
  }
  return out;
}

template <typename T>
TensorT<T> PsnrTensor(const TensorT<T>& target, const TensorT<T>& x_hat) {
  const TensorT<T> crop = Crop(x_hat, target.dim(2), target.dim(3));
  const TensorT<T> mse = Mean(Square(Sub(crop, target)));
  return Scale(Log(mse), T(-10.0 / kLn10));
}

template <typename T>
TensorT<T> LossRatio(const OverfitProblemT<T>& problem, const TensorT<T>& b,
                     const TensorT<T>& q, std::span<const T> noise) {
  const ModelParamsT<T>& params = *problem.params;
  const int layers = params.arch.decoder_layers;
  const int first = layers - problem.layers;
  const RelaxedUpdateT<T> relaxed = QuantizeUpdatesTrain(b, q, noise);
  const TensorT<T> rate = UpdateRateTrain(relaxed.symbols);

  std::vector<TensorT<T>> biases(layers);
  int offset = 0;
  for (int i = first; i < layers; ++i) {
    const TensorT<T>& bias = params.decoder[i].bias;
    biases[i] = Add(bias, Slice(relaxed.delta, offset, bias.dim(0)));
    offset += bias.dim(0);
  }
  if (offset != b.dim(0)) throw ShapeError("LossRatio: b does not match the selected biases");
  const TensorT<T> x_hat =
      Clamp(DecoderForward<T>(problem.prefix, params, first, biases), T(0), T(1));
  const TensorT<T> psnr = PsnrTensor(problem.target, x_hat);

  const RdInterp& r = problem.rate_of_psnr;
  const TensorT<T> denominator =
      Shift(Scale(psnr, T(r.Slope())), T(r.lo().rate - r.Slope() * r.lo().psnr));
  if (!(denominator.item() > T(0))) {
    throw RateDomainError("LossRatio: R(PSNR) is not positive; check the rate anchors");
  }
  const TensorT<T> numerator = Shift(rate, T(problem.latent_bits + problem.side_bits));
  return Div(numerator, denominator);
}

OverfitResult OverfitImage(const Image& original, const Tensor& y_hat, const ModelParams& params,
                           double latent_bits, const RdInterp& rate_of_psnr,
                           const OverfitConfig& config) {
  const ArchConfig& arch = params.arch;
  const int l = config.layers;
  const auto subset = SelectBiasSubset(arch, l);
  const int first = arch.decoder_layers - l;
  if (config.iterations < 0 || config.eval_every < 1) {
    throw InvalidArgument("OverfitImage: iterations must be >= 0 and eval_every >= 1");
  }

  OverfitProblemT<float> problem;
  problem.params = &params;
  problem.target = ImageToTensor(original);
  problem.prefix = first == 0 ? y_hat : DecoderForward(y_hat, params, 0, {}, first);
  problem.layers = l;
  problem.latent_bits = latent_bits;
  problem.rate_of_psnr = rate_of_psnr;
  problem.side_bits = config.side_bits;

  const int n = static_cast<int>(subset.size());
  Tensor b(Shape{n});
  b.set_requires_grad(true);
  Tensor log_q = Tensor::Scalar(static_cast<float>(std::log(config.q_init)));
  log_q.set_requires_grad(true);
  AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  Adam<float> adam({b, log_q}, opts);
  NoiseSource noise(config.seed);

  OverfitResult result;
  auto evaluate = [&](int iteration, double train_loss) {
    TraceRow row;
    row.iteration = iteration;
    row.train_loss = train_loss;
    row.q = RoundToF16(std::exp(static_cast<double>(log_q.item())));
    row.acc = INFINITY;
    row.psnr = NAN;
    row.update_bits = NAN;
    if (row.q > 0.0 && std::isfinite(row.q)) {
      const HardUpdate hard = QuantizeUpdatesTest(b.data(), row.q);
      const auto [lo, hi] = std::minmax_element(hard.symbols.begin(), hard.symbols.end());
      if (*lo >= kUpdateSymbolMin && *hi <= kUpdateSymbolMax) {
        const TruncatedGaussianFit fit = FitTruncatedGaussian(hard.symbols);
        ExtraSection extra = EncodeUpdate(hard.symbols, row.q, fit.mean, fit.sigma);
        const ModelParams updated = ApplyUpdate(params, hard.symbols, row.q, l);
        const Tensor x_hat = Clamp(DecoderForward(problem.prefix, updated, first), 0.0f, 1.0f);
        Image recon = TensorToImage(x_hat, original.width, original.height);
        row.psnr = Psnr(original.rgb, recon.rgb);
        row.update_bits = 8.0 * static_cast<double>(extra.coded.size());
        const double denominator = rate_of_psnr.Rate(row.psnr);
        if (denominator > 0.0) {
          row.acc = (latent_bits + row.update_bits + config.side_bits) / denominator;
        }
        if (row.acc < result.best_acc) {
          result.best_acc = row.acc;
          result.best_iteration = iteration;
          result.best_psnr = row.psnr;
          result.best_reconstruction = std::move(recon);
          BiasUpdate& best = result.best;
          best.b.assign(b.data().begin(), b.data().end());
          best.q = row.q;
          best.symbols = hard.symbols;
          best.mean = DecodeF16(extra.mean);
          best.sigma = DecodeF16(extra.sigma);
          best.s_min = extra.s_min;
          best.s_max = extra.s_max;
          best.extra = std::move(extra);
        }
      }
    }
    result.trace.push_back(row);
  };

  {
    const std::vector<float> zero(n, 0.0f);
    const double loss0 = LossRatio(problem, b, Exp(log_q), std::span<const float>(zero)).item();
    evaluate(0, loss0);
    result.initial_acc = result.trace.front().acc;
  }
  std::vector<float> u(n);
  for (int it = 1; it <= config.iterations; ++it) {
    for (float& v : u) v = noise.CenteredUniform();
    adam.ZeroGrad();
    Tensor loss;
    try {
      loss = LossRatio(problem, b, Exp(log_q), std::span<const float>(u));
    } catch (const RateDomainError&) {
      // This noise draw pushed PSNR below the range where R(PSNR) > 0; no step.
      ++result.skipped_steps;
      if (it % config.eval_every == 0 || it == config.iterations) evaluate(it, NAN);
      continue;
    }
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw NumericError("OverfitImage: non-finite loss at iteration " + std::to_string(it) +
                         " (q = " + std::to_string(std::exp(log_q.item())) + ")");
    }
    loss.backward();
    adam.Step();
    if (it % config.eval_every == 0 || it == config.iterations) evaluate(it, value);
  }
  if (!std::isfinite(result.best_acc)) {
    throw NumericError("OverfitImage: no snapshot produced a codable update");
  }
  return result;
}

void WriteTraceCsv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "iteration,train_loss,acc,psnr_db,update_bits,q\n";
  out.precision(17);
  for (const auto& r : trace) {
    out << r.iteration << ',' << r.train_loss << ',' << r.acc << ',' << r.psnr << ','
        << r.update_bits << ',' << r.q << '\n';
  }
}

#define NIC_INSTANTIATE_OVERFIT(T)                                                         \
  template RelaxedUpdateT<T> QuantizeUpdatesTrain(const TensorT<T>&, const TensorT<T>&,    \
                                                  std::span<const T>);                     \
  template TensorT<T> UpdateRateTrain(const TensorT<T>&);                                  \
  template TensorT<T> PsnrTensor(const TensorT<T>&, const TensorT<T>&);                    \
  template TensorT<T> LossRatio(const OverfitProblemT<T>&, const TensorT<T>&,              \
                                const TensorT<T>&, std::span<const T>);

NIC_INSTANTIATE_OVERFIT(float)
NIC_INSTANTIATE_OVERFIT(double)

#undef NIC_INSTANTIATE_OVERFIT

}  // namespace nic
