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

#include "nic/zoo.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <utility>
#include <json.hpp>

#include "nic/checkpoint.h"
#include "nic/errors.h"
#include "nic/pipeline.h"

namespace nic {

using nlohmann::json;

const ZooEntry* ZooManifest::Find(int quality) const {
  for (const auto& e : entries) {
    if (e.quality == quality) return &e;
  }
  return nullptr;
}

ZooManifest ReadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  ZooManifest m;
  try {
    const json j = json::parse(in);
    if (j.at("format").get<std::string>() != "nic-zoo") throw IoError(path + ": not a zoo manifest");
    m.version = j.at("version").get<int>();
    if (m.version != 1) throw IoError(path + ": unsupported manifest version");
    for (const auto& e : j.at("entries")) {
      ZooEntry z;
      z.quality = e.at("quality").get<int>();
      z.lambda = e.at("lambda").get<double>();
      z.checkpoint = e.at("checkpoint").get<std::string>();
      z.val_rate_bits = e.value("val_rate_bits", 0.0);
      z.val_psnr_db = e.value("val_psnr_db", 0.0);
      z.failed = e.value("failed", false);
      z.error = e.value("error", std::string());
      m.entries.push_back(z);
    }
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return m;
}

void WriteManifest(const ZooManifest& m, const std::string& path) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json row = {{"quality", e.quality},          {"lambda", e.lambda},
                {"checkpoint", e.checkpoint},    {"val_rate_bits", e.val_rate_bits},
                {"val_psnr_db", e.val_psnr_db},  {"failed", e.failed}};
    if (!e.error.empty()) row["error"] = e.error;
    entries.push_back(row);
  }
  const json j = {{"format", "nic-zoo"}, {"version", m.version}, {"entries", entries}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::vector<std::string> MonotonicityWarnings(const ZooManifest& m) {
  std::vector<std::string> warnings;
  const ZooEntry* prev = nullptr;
  for (const ZooEntry& b : m.entries) {
    if (b.failed) continue;
    const ZooEntry* a = std::exchange(prev, &b);
    if (!a) continue;
    if (b.lambda > a->lambda &&
        (b.val_psnr_db < a->val_psnr_db || b.val_rate_bits < a->val_rate_bits)) {
      warnings.push_back("quality " + std::to_string(b.quality) + " (lambda " +
                         std::to_string(b.lambda) + ") does not dominate quality " +
                         std::to_string(a->quality) + " in rate and PSNR");
    }
  }
  return warnings;
}

Zoo::Zoo(std::string directory)
    : directory_(std::move(directory)),
      manifest_(ReadManifest((std::filesystem::path(directory_) / kZooManifestName).string())) {}

bool Zoo::Has(int quality) const {
  const ZooEntry* e = manifest_.Find(quality);
  return e && !e->failed;
}

const ModelParams& Zoo::Model(int quality) {
  if (auto it = cache_.find(quality); it != cache_.end()) return it->second;
  const ZooEntry* e = manifest_.Find(quality);
  if (!e) throw InvalidArgument("zoo has no quality " + std::to_string(quality));
  if (e->failed) throw InvalidArgument("zoo quality " + std::to_string(quality) + " failed to train");
  ModelParams params = LoadModel((std::filesystem::path(directory_) / e->checkpoint).string());
  return cache_.emplace(quality, std::move(params)).first->second;
}

std::vector<int> Zoo::NeighborCandidates(int quality) const {
  if (!Has(quality)) throw InvalidArgument("zoo has no usable quality " + std::to_string(quality));
  // Manifest order is increasing lambda.
  std::vector<int> usable;
  for (const auto& e : manifest_.entries) {
    if (!e.failed) usable.push_back(e.quality);
  }
  const int pos = static_cast<int>(std::find(usable.begin(), usable.end(), quality) - usable.begin());
  std::vector<int> out;
  for (int d = 1; d < static_cast<int>(usable.size()); ++d) {
    if (pos + d < static_cast<int>(usable.size())) out.push_back(usable[pos + d]);
    if (pos - d >= 0) out.push_back(usable[pos - d]);
  }
  return out;
}

int Zoo::Neighbor(int quality) const {
  const std::vector<int> c = NeighborCandidates(quality);
  if (c.empty()) throw InvalidArgument("zoo has no neighbor for quality " + std::to_string(quality));
  return c.front();
}

RdInterp ImageAnchors::PayloadRate() const {
  return RdInterp({own.latents.PayloadBits(), own.psnr},
                  {neighbor.latents.PayloadBits(), neighbor.psnr});
}

RdInterp ImageAnchors::ContainerRate() const {
  return RdInterp({8.0 * static_cast<double>(own.bytes.size()), own.psnr},
                  {8.0 * static_cast<double>(neighbor.bytes.size()), neighbor.psnr});
}

ImageAnchors SelectImageAnchors(const Image& image, const ModelParams& params, int quality,
                                std::span<const ModelRef> candidates) {
  ImageAnchors a;
  a.own = EncodeBaseline(image, params, static_cast<uint8_t>(quality));
  const double rate = a.own.latents.PayloadBits();
  for (const auto& [q, model] : candidates) {
    BaselineEncoding other = EncodeBaseline(image, *model, static_cast<uint8_t>(q));
    const double dr = other.latents.PayloadBits() - rate, dp = other.psnr - a.own.psnr;
    if ((dr > 0.0 && dp > 0.0) || (dr < 0.0 && dp < 0.0)) {
      a.neighbor = std::move(other);
      a.neighbor_quality = q;
      return a;
    }
  }
  throw InvalidArgument("no zoo model gives this image an increasing R(D) with quality " +
                        std::to_string(quality));
}

ImageAnchors SelectImageAnchors(const Image& image, Zoo& zoo, int quality) {
  std::vector<ModelRef> candidates;
  for (int q : zoo.NeighborCandidates(quality)) candidates.emplace_back(q, &zoo.Model(q));
  return SelectImageAnchors(image, zoo.Model(quality), quality, candidates);
}

RdInterp ImageRateFunction(const Image& image, Zoo& zoo, int quality) {
  return SelectImageAnchors(image, zoo, quality).PayloadRate();
}

}  // namespace nic
