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

#include "nic/latent_coding.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nic/byte_io.h"
#include "nic/distributions.h"
#include "nic/errors.h"

namespace nic {
namespace {

constexpr double kVanishingMass = 1e-300;

}  // namespace

std::vector<CdfTable> BuildSectionTables(size_t count, int32_t min_symbol, int32_t max_symbol,
                                         const ElementPmf& pmf) {
  if (max_symbol < min_symbol) throw InvalidArgument("BuildSectionTables: empty range");
  const size_t support = static_cast<size_t>(max_symbol - min_symbol) + 1;
  if (support > kProbabilityTotal) {
    throw NumericError("BuildSectionTables: symbol range " + std::to_string(support) +
                       " exceeds the coder precision");
  }
  std::vector<CdfTable> tables;
  tables.reserve(count);
  std::vector<double> p(support);
  for (size_t e = 0; e < count; ++e) {
    double total = 0.0;
    for (size_t s = 0; s < support; ++s) {
      p[s] = pmf(e, min_symbol + static_cast<int32_t>(s));
      total += p[s];
    }
    if (!(total > kVanishingMass)) std::fill(p.begin(), p.end(), 1.0 / support);
    tables.push_back(BuildCdfTable(p, min_symbol));
  }
  return tables;
}

CodedSection EncodeSection(const Tensor& symbols, const ElementPmf& pmf) {
  const size_t n = static_cast<size_t>(symbols.size());
  std::vector<int32_t> s(n);
  int32_t lo = 0, hi = 0;
  for (size_t i = 0; i < n; ++i) {
    const float v = symbols.data()[i];
    if (!(std::fabs(v) <= 32767.0f) || v != std::round(v)) {
      throw NumericError("EncodeSection: symbol " + std::to_string(v) +
                         " is not an int16 integer");
    }
    s[i] = static_cast<int32_t>(v);
    lo = i == 0 ? s[i] : std::min(lo, s[i]);
    hi = i == 0 ? s[i] : std::max(hi, s[i]);
  }
  const auto tables = BuildSectionTables(n, lo, hi, pmf);
  ByteWriter w;
  w.I16(static_cast<int16_t>(lo));
  w.I16(static_cast<int16_t>(hi));
  w.Bytes(EncodeSymbols(s, tables));
  return {w.Take(), IdealCodeLength(s, tables)};
}

Tensor DecodeSection(std::span<const uint8_t> bytes, const Shape& shape, const ElementPmf& pmf) {
  ByteReader r(bytes, "latent section");
  const int32_t lo = r.I16();
  const int32_t hi = r.I16();
  if (hi < lo) throw ParseError(ParseErrorCode::kBadField, "latent section: max < min");
  const size_t n = static_cast<size_t>(NumElements(shape));
  const auto tables = BuildSectionTables(n, lo, hi, pmf);
  const auto s = DecodeSymbols(r.Bytes(r.remaining()), tables, n);
  std::vector<float> values(s.begin(), s.end());
  return Tensor(shape, std::move(values));
}

ElementPmf FactorizedElementPmf(const Shape& shape, const Tensor& loc, const Tensor& log_scale) {
  if (shape.size() < 2 || loc.rank() != 1 || loc.dim(0) != shape[1] ||
      log_scale.shape() != loc.shape()) {
    throw ShapeError("FactorizedElementPmf: prior does not match " + ShapeString(shape));
  }
  const int channels = shape[1];
  const int64_t plane = NumElements(shape) / (int64_t{shape[0]} * channels);
  std::vector<double> l(loc.data().begin(), loc.data().end());
  std::vector<double> s(log_scale.data().begin(), log_scale.data().end());
  return [=](size_t e, int32_t x) {
    const int c = static_cast<int>((static_cast<int64_t>(e) / plane) % channels);
    return LogisticPmf(x, l[c], s[c]);
  };
}

ElementPmf GaussianElementPmf(const Tensor& mean, const Tensor& sigma) {
  if (mean.shape() != sigma.shape()) throw ShapeError("GaussianElementPmf: shape mismatch");
  std::vector<double> m(mean.data().begin(), mean.data().end());
  std::vector<double> s(sigma.data().begin(), sigma.data().end());
  return [m = std::move(m), s = std::move(s)](size_t e, int32_t x) {
    return GaussianPmf(x, m[e], s[e]);
  };
}

}  // namespace nic
