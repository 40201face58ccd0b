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

#ifndef NIC_ZOO_H_
#define NIC_ZOO_H_

// A model zoo is a directory holding zoo.json and one checkpoint per quality.
//
// zoo.json:
//   {"format": "nic-zoo", "version": 1,
//    "entries": [{"quality": 0, "lambda": 0.002, "checkpoint": "q0.nicm",
//                 "val_rate_bits": ..., "val_psnr_db": ..., "failed": false}, ...]}
// Entries are ordered by increasing lambda.

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nic/codec.h"
#include "nic/image_io.h"
#include "nic/pipeline.h"
#include "nic/rd.h"

namespace nic {

inline constexpr const char* kZooManifestName = "zoo.json";

struct ZooEntry {
  int quality = 0;
  double lambda = 0.0;
  std::string checkpoint;  // relative to the zoo directory
  double val_rate_bits = 0.0;
  double val_psnr_db = 0.0;
  bool failed = false;
  std::string error;

  bool operator==(const ZooEntry&) const = default;
};

struct ZooManifest {
  int version = 1;
  std::vector<ZooEntry> entries;

  const ZooEntry* Find(int quality) const;
};

ZooManifest ReadManifest(const std::string& path);
void WriteManifest(const ZooManifest& manifest, const std::string& path);
// Human-readable messages for every adjacent pair where larger lambda does
// not give larger-or-equal validation rate and PSNR.
std::vector<std::string> MonotonicityWarnings(const ZooManifest& manifest);

class Zoo {
 public:
  explicit Zoo(std::string directory);

  const ZooManifest& manifest() const { return manifest_; }
  const std::string& directory() const { return directory_; }
  bool Has(int quality) const;
  // Loads (and caches) the checkpoint of `quality`; throws InvalidArgument
  // when the quality is absent or its run failed.
  const ModelParams& Model(int quality);
  // Usable qualities other than `quality` in order of preference as the
  // second R(D) anchor: the next higher lambda, the next lower, then
  // alternating outward.
  std::vector<int> NeighborCandidates(int quality) const;
  // The first candidate.
  int Neighbor(int quality) const;

 private:
  std::string directory_;
  ZooManifest manifest_;
  std::map<int, ModelParams> cache_;
};

// Baseline encodes of one image with its own model and with the neighbor
// that anchors its R(D).
struct ImageAnchors {
  BaselineEncoding own;
  BaselineEncoding neighbor;
  int neighbor_quality = 0;

  // Anchors (|mb| + |sb| bits, 8-bit PSNR).
  RdInterp PayloadRate() const;
  // Anchors (container bits, 8-bit PSNR).
  RdInterp ContainerRate() const;
};

using ModelRef = std::pair<int, const ModelParams*>;

// Takes the first candidate whose encode of `image` differs from the own
// encode in the same direction in rate and PSNR, so that R(D) is increasing.
// Throws InvalidArgument when no candidate qualifies.
ImageAnchors SelectImageAnchors(const Image& image, const ModelParams& params, int quality,
                                std::span<const ModelRef> candidates);
ImageAnchors SelectImageAnchors(const Image& image, Zoo& zoo, int quality);

// SelectImageAnchors(...).PayloadRate().
RdInterp ImageRateFunction(const Image& image, Zoo& zoo, int quality);

}  // namespace nic

#endif  // NIC_ZOO_H_
