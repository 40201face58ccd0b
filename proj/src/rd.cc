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

#include "nic/rd.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nic/errors.h"

namespace nic {
namespace {

// Evaluates the antiderivative of sum c_k t^k at t.
double PolyIntegral(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (size_t k = c.size(); k-- > 0;) acc = acc * t + c[k] / static_cast<double>(k + 1);
  return acc * t;
}

}  // namespace

double PsnrFromMse(double mse, double peak) {
  if (mse <= 0.0) return kPsnrOfIdentical;
  return 10.0 * std::log10(peak * peak / mse);
}

double Psnr(std::span<const float> x, std::span<const float> x_hat, double peak) {
  if (x.size() != x_hat.size() || x.empty()) throw InvalidArgument("Psnr: size mismatch");
  double sse = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - x_hat[i];
    sse += d * d;
  }
  return PsnrFromMse(sse / static_cast<double>(x.size()), peak);
}

double Psnr(std::span<const uint8_t> x, std::span<const uint8_t> x_hat) {
  if (x.size() != x_hat.size() || x.empty()) throw InvalidArgument("Psnr: size mismatch");
  uint64_t sse = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const int d = int{x[i]} - int{x_hat[i]};
    sse += static_cast<uint64_t>(d * d);
  }
  return PsnrFromMse(static_cast<double>(sse) / static_cast<double>(x.size()), 255.0);
}

RdCurve RdCurve::FromPoints(std::vector<RdPoint> points, std::string unit) {
  std::sort(points.begin(), points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.rate < b.rate; });
  for (size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].rate) || !std::isfinite(points[i].psnr)) {
      throw InvalidArgument("RdCurve: non-finite point");
    }
    if (i > 0 && (points[i].rate <= points[i - 1].rate || points[i].psnr <= points[i - 1].psnr)) {
      throw InvalidArgument("RdCurve: points are not strictly increasing in rate and PSNR");
    }
  }
  return {std::move(unit), std::move(points)};
}

RdCurve ReadRdCurveCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const std::string prefix = "rate_";
  const size_t comma = line.find(',');
  if (line.rfind(prefix, 0) != 0 || comma == std::string::npos ||
      line.substr(comma + 1).rfind("psnr_db", 0) != 0) {
    throw IoError(path + ": expected header rate_<unit>,psnr_db");
  }
  const std::string unit = line.substr(prefix.size(), comma - prefix.size());
  std::vector<RdPoint> points;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    RdPoint p;
    if (!(row >> p.rate >> p.psnr)) throw IoError(path + ": malformed row '" + line + "'");
    points.push_back(p);
  }
  return RdCurve::FromPoints(std::move(points), unit);
}

void WriteRdCurveCsv(const RdCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "rate_" << curve.unit << ",psnr_db\n";
  out.precision(17);
  for (const auto& p : curve.points) out << p.rate << ',' << p.psnr << '\n';
}

RdInterp::RdInterp(RdPoint a, RdPoint b) {
  if (a.rate > b.rate) std::swap(a, b);
  if (!(b.rate > a.rate) || !(b.psnr > a.psnr)) {
    throw InvalidArgument("RdInterp: the higher-rate anchor must have the higher PSNR");
  }
  lo_ = a;
  hi_ = b;
  slope_ = (b.rate - a.rate) / (b.psnr - a.psnr);
}

double BitSaving(double new_bits, const RdInterp& r, double achieved_psnr) {
  return 1.0 - new_bits / r.Rate(achieved_psnr);
}

std::vector<double> PolyFit(std::span<const double> x, std::span<const double> y, int degree) {
  if (x.size() != y.size() || static_cast<int>(x.size()) <= degree) {
    throw InvalidArgument("PolyFit: need more points than the degree");
  }
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd v(n, degree + 1);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= x[i]) v(i, k) = p;
    rhs(i) = y[i];
  }
  const Eigen::VectorXd c = v.colPivHouseholderQr().solve(rhs);
  return {c.data(), c.data() + c.size()};
}

double BdRate(const RdCurve& a, const RdCurve& b) {
  if (a.points.size() < 4 || b.points.size() < 4) {
    throw InvalidArgument("BdRate: each curve needs at least 4 points");
  }
  auto range = [](const RdCurve& c) {
    double lo = c.points.front().psnr, hi = lo;
    for (const auto& p : c.points) {
      lo = std::min(lo, p.psnr);
      hi = std::max(hi, p.psnr);
    }
    return std::pair{lo, hi};
  };
  const auto [a_lo, a_hi] = range(a);
  const auto [b_lo, b_hi] = range(b);
  const double lo = std::max(a_lo, b_lo), hi = std::min(a_hi, b_hi);
  if (!(hi > lo)) throw InvalidArgument("BdRate: curves do not overlap in PSNR");

  // Fit in a centred, scaled variable for conditioning; the fitted function
  // of PSNR is the same.
  const double centre = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  auto mean_log_rate = [&](const RdCurve& c) {
    std::vector<double> t, r;
    for (const auto& p : c.points) {
      t.push_back((p.psnr - centre) / half);
      r.push_back(std::log10(p.rate));
    }
    const auto coef = PolyFit(t, r, 3);
    return (PolyIntegral(coef, 1.0) - PolyIntegral(coef, -1.0)) / 2.0;
  };
  const double diff = mean_log_rate(b) - mean_log_rate(a);
  return 100.0 * (std::pow(10.0, diff) - 1.0);
}

}  // namespace nic
