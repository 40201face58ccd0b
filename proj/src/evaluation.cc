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


#include "nic/evaluation.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include "nic/errors.h"
#include "nic/pipeline.h"
#include "nic/rd.h"

namespace nic {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double Mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Median over seeds of the per-seed mean of `field`.
template <typename Field>
double MedianOfSeedMeans(const std::vector<const EvalRow*>& rows, Field field) {
  std::map<uint64_t, std::vector<double>> by_seed;
  for (const EvalRow* r : rows) by_seed[r->seed].push_back(field(*r));
  std::vector<double> means;
  for (const auto& [seed, v] : by_seed) means.push_back(Mean(v));
  return Median(means);
}

std::string SweepShape(const std::vector<double>& v) {
  if (v.size() < 2) return "flat";
  bool up = true, down = true;
  for (size_t i = 1; i < v.size(); ++i) {
    up = up && v[i] > v[i - 1];
    down = down && v[i] < v[i - 1];
  }
  if (up) return "increasing";
  if (down) return "decreasing";
  const size_t peak = static_cast<size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  bool unimodal = peak > 0 && peak + 1 < v.size();
  for (size_t i = 1; unimodal && i < v.size(); ++i) {
    unimodal = i <= peak ? v[i] > v[i - 1] : v[i] < v[i - 1];
  }
  if (unimodal) return "rise-then-fall";
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); }) ? "flat"
                                                                                      : "irregular";
}

double CurveBdRate(const std::vector<RdPoint>& base, const std::vector<RdPoint>& test) {
  if (base.size() < 4) return kNaN;
  try {
    return BdRate(RdCurve::FromPoints(base), RdCurve::FromPoints(test));
  } catch (const InvalidArgument&) {
    return kNaN;
  }
}

}  // namespace

double Median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

EvalRow EvaluateImage(const std::string& name, const Image& image, const ModelParams& params,
                      int quality, std::span<const ModelRef> candidates,
                      const OverfitConfig& config) {
  const ImageAnchors anchors = SelectImageAnchors(image, params, quality, candidates);
  const BaselineEncoding& own = anchors.own;
  const RdInterp payload = anchors.PayloadRate();
  const RdInterp container = anchors.ContainerRate();
  const OverfitEncoding enc = EncodeOverfit(image, params, static_cast<uint8_t>(quality), payload, config);

  EvalRow row;
  row.image = name;
  row.quality = quality;
  row.neighbor = anchors.neighbor_quality;
  row.layers = config.layers;
  row.seed = config.seed;
  row.width = image.width;
  row.height = image.height;
  row.baseline_bits = 8.0 * static_cast<double>(own.bytes.size());
  row.baseline_payload_bits = own.latents.PayloadBits();
  row.baseline_psnr = own.psnr;
  row.overfit_bits = 8.0 * static_cast<double>(enc.bytes.size());
  row.update_bits = 8.0 * static_cast<double>(enc.result.best.extra.coded.size());
  row.overfit_payload_bits = row.baseline_payload_bits + row.update_bits + config.side_bits;
  row.overfit_psnr = enc.result.best_psnr;
  row.rate_at_psnr = payload.Rate(row.overfit_psnr);
  row.bit_saving = 1.0 - row.overfit_payload_bits / row.rate_at_psnr;
  row.bit_saving_container = 1.0 - row.overfit_bits / container.Rate(row.overfit_psnr);
  row.initial_acc = enc.result.initial_acc;
  row.best_acc = enc.result.best_acc;
  row.best_iteration = enc.result.best_iteration;
  return row;
}

EvalReport Summarize(std::vector<EvalRow> rows) {
  EvalReport report;
  report.rows = std::move(rows);
  std::map<std::pair<int, int>, std::vector<const EvalRow*>> by_ql;
  std::map<int, std::vector<const EvalRow*>> by_l;
  for (const EvalRow& r : report.rows) {
    by_ql[{r.quality, r.layers}].push_back(&r);
    by_l[r.layers].push_back(&r);
  }
  auto field_mean = [](const std::vector<const EvalRow*>& rs, double EvalRow::*f) {
    std::vector<double> v;
    for (const EvalRow* r : rs) v.push_back(r->*f);
    return Mean(v);
  };
  for (const auto& [key, rs] : by_ql) {
    QualitySummary s;
    s.quality = key.first;
    s.layers = key.second;
    s.rows = static_cast<int>(rs.size());
    s.mean_bit_saving = field_mean(rs, &EvalRow::bit_saving);
    s.median_seed_bit_saving = MedianOfSeedMeans(rs, [](const EvalRow& r) { return r.bit_saving; });
    s.mean_bit_saving_container = field_mean(rs, &EvalRow::bit_saving_container);
    s.mean_baseline_bits = field_mean(rs, &EvalRow::baseline_bits);
    s.mean_overfit_bits = field_mean(rs, &EvalRow::overfit_bits);
    s.mean_baseline_psnr = field_mean(rs, &EvalRow::baseline_psnr);
    s.mean_overfit_psnr = field_mean(rs, &EvalRow::overfit_psnr);
    for (const EvalRow* r : rs) s.improved += r->best_acc < r->initial_acc;
    report.qualities.push_back(s);
  }
  for (QualitySummary& s : report.qualities) {
    const QualitySummary* best = nullptr;
    for (const QualitySummary& o : report.qualities) {
      if (o.quality == s.quality && (!best || o.mean_bit_saving > best->mean_bit_saving)) best = &o;
    }
    s.best_layers = best->layers;
  }
  std::vector<double> sweep;
  for (const auto& [l, rs] : by_l) {
    LayerSummary s;
    s.layers = l;
    s.rows = static_cast<int>(rs.size());
    s.mean_bit_saving = field_mean(rs, &EvalRow::bit_saving);
    s.median_seed_bit_saving = MedianOfSeedMeans(rs, [](const EvalRow& r) { return r.bit_saving; });
    s.mean_bit_saving_container = field_mean(rs, &EvalRow::bit_saving_container);
    for (const EvalRow* r : rs) s.improved += r->best_acc < r->initial_acc;
    std::vector<RdPoint> base, test;
    for (const QualitySummary& q : report.qualities) {
      if (q.layers != l) continue;
      base.push_back({q.mean_baseline_bits, q.mean_baseline_psnr});
      test.push_back({q.mean_overfit_bits, q.mean_overfit_psnr});
    }
    s.bd_rate = CurveBdRate(base, test);
    sweep.push_back(s.median_seed_bit_saving);
    report.layers.push_back(s);
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const LayerSummary& s : report.layers) {
    if (s.median_seed_bit_saving > best) {
      best = s.median_seed_bit_saving;
      report.best_layers = s.layers;
    }
  }
  report.sweep_shape = SweepShape(sweep);
  return report;
}

void WriteEvalReport(const EvalReport& report, const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  const fs::path stem = p.parent_path() / p.stem();
  auto open = [](const fs::path& f) {
    std::ofstream out(f);
    if (!out) throw IoError("cannot write " + f.string());
    out.precision(10);
    return out;
  };
  {
    std::ofstream out = open(p);
    out << "image,quality,neighbor,layers,seed,width,height,baseline_bits,baseline_payload_bits,"
           "baseline_psnr_db,overfit_bits,overfit_payload_bits,overfit_psnr_db,update_bits,"
           "rate_at_psnr,bit_saving,bit_saving_container,initial_acc,best_acc,best_iteration\n";
    for (const EvalRow& r : report.rows) {
      out << r.image << ',' << r.quality << ',' << r.neighbor << ',' << r.layers << ',' << r.seed
          << ',' << r.width << ',' << r.height << ',' << r.baseline_bits << ','
          << r.baseline_payload_bits << ',' << r.baseline_psnr << ',' << r.overfit_bits << ','
          << r.overfit_payload_bits << ',' << r.overfit_psnr << ',' << r.update_bits << ','
          << r.rate_at_psnr << ',' << r.bit_saving << ',' << r.bit_saving_container << ','
          << r.initial_acc << ',' << r.best_acc << ',' << r.best_iteration << '\n';
    }
  }
  {
    std::ofstream out = open(stem.string() + "_summary.csv");
    out << "quality,layers,rows,mean_bit_saving,median_seed_bit_saving,mean_bit_saving_container,"
           "mean_baseline_bits,mean_overfit_bits,mean_baseline_psnr_db,mean_overfit_psnr_db,"
           "improved,best_layers\n";
    for (const QualitySummary& s : report.qualities) {
      out << s.quality << ',' << s.layers << ',' << s.rows << ',' << s.mean_bit_saving << ','
          << s.median_seed_bit_saving << ',' << s.mean_bit_saving_container << ','
          << s.mean_baseline_bits << ',' << s.mean_overfit_bits << ',' << s.mean_baseline_psnr
          << ',' << s.mean_overfit_psnr << ',' << s.improved << ',' << s.best_layers << '\n';
    }
  }
  {
    std::ofstream out = open(stem.string() + "_layers.csv");
    out << "layers,rows,mean_bit_saving,median_seed_bit_saving,mean_bit_saving_container,"
           "bd_rate_percent,improved,best,sweep_shape\n";
    for (const LayerSummary& s : report.layers) {
      out << s.layers << ',' << s.rows << ',' << s.mean_bit_saving << ','
          << s.median_seed_bit_saving << ',' << s.mean_bit_saving_container << ',' << s.bd_rate
          << ',' << s.improved << ',' << (s.layers == report.best_layers ? 1 : 0) << ','
          << report.sweep_shape << '\n';
    }
  }
}

}  // namespace nic
