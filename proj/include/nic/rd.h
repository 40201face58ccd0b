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

#ifndef NIC_RD_H_
#define NIC_RD_H_

// Rate-distortion metrics: PSNR, the linear R(D) interpolant, bit saving and
// Bjontegaard delta rate.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nic {

inline constexpr double kPsnrOfIdentical = 1e9;  // sentinel for MSE == 0

// 10 log10(peak^2 / MSE). Identical inputs give kPsnrOfIdentical.
double Psnr(std::span<const float> x, std::span<const float> x_hat, double peak = 1.0);
double Psnr(std::span<const uint8_t> x, std::span<const uint8_t> x_hat);
double PsnrFromMse(double mse, double peak = 1.0);

struct RdPoint {
  double rate = 0.0;  // bits or bits per pixel, see RdCurve::unit
  double psnr = 0.0;  // dB
};

// Points sorted by rate, strictly increasing in both coordinates.
struct RdCurve {
  std::string unit = "bits";
  std::vector<RdPoint> points;

  // Sorts by rate and throws InvalidArgument on non-monotone input.
  static RdCurve FromPoints(std::vector<RdPoint> points, std::string unit = "bits");
};

// CSV with header "rate_<unit>,psnr_db".
RdCurve ReadRdCurveCsv(const std::string& path);
void WriteRdCurveCsv(const RdCurve& curve, const std::string& path);

// Bitlength as a linear function of PSNR through two anchors, extrapolated
// with the same slope on both sides.
class RdInterp {
 public:
  RdInterp() = default;
  // Throws InvalidArgument unless the higher-rate anchor has the higher PSNR.
  RdInterp(RdPoint a, RdPoint b);

  double Rate(double psnr) const { return lo_.rate + slope_ * (psnr - lo_.psnr); }
  // dR/dD, constant.
  double Slope() const { return slope_; }
  // D(R), the inverse.
  double Psnr(double rate) const { return lo_.psnr + (rate - lo_.rate) / slope_; }

  RdPoint lo() const { return lo_; }
  RdPoint hi() const { return hi_; }

 private:
  RdPoint lo_, hi_;
  double slope_ = 1.0;
};

// 1 - new_bits / R(achieved_psnr).
double BitSaving(double new_bits, const RdInterp& r, double achieved_psnr);

// Cubic fit of log10(rate) over PSNR per curve, integrated over the common
// PSNR interval; percent rate change of b relative to a (negative = b saves).
// Throws InvalidArgument with fewer than 4 points or no PSNR overlap.
double BdRate(const RdCurve& a, const RdCurve& b);

// Least-squares polynomial coefficients, lowest degree first.
std::vector<double> PolyFit(std::span<const double> x, std::span<const double> y, int degree);

}  // namespace nic

#endif  // NIC_RD_H_
