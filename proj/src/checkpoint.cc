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

#include "nic/checkpoint.h"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "nic/byte_io.h"
#include "nic/errors.h"

namespace nic {
namespace {

constexpr char kMagic[4] = {'N', 'I', 'C', 'M'};

void WriteArch(ByteWriter& w, const ArchConfig& a) {
  w.U8(static_cast<uint8_t>(a.kind));
  w.U16(static_cast<uint16_t>(a.latent_channels));
  w.U16(static_cast<uint16_t>(a.hyper_channels));
  w.U16(static_cast<uint16_t>(a.base_width));
  w.U8(static_cast<uint8_t>(a.kernel));
  w.U8(static_cast<uint8_t>(a.encoder_layers));
  w.U8(static_cast<uint8_t>(a.decoder_layers));
  w.U8(static_cast<uint8_t>(a.hyper_layers));
}

ArchConfig ReadArch(ByteReader& r) {
  ArchConfig a;
  const uint8_t kind = r.U8();
  if (kind > 1) throw ParseError(ParseErrorCode::kBadField, "checkpoint: unknown model kind");
  a.kind = static_cast<ModelKind>(kind);
  a.latent_channels = r.U16();
  a.hyper_channels = r.U16();
  a.base_width = r.U16();
  a.kernel = r.U8();
  a.encoder_layers = r.U8();
  a.decoder_layers = r.U8();
  a.hyper_layers = r.U8();
  try {
    a.Validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(ParseErrorCode::kBadField, std::string("checkpoint: ") + e.what());
  }
  return a;
}

std::string ReadName(ByteReader& r) { return r.String(r.U16()); }

}  // namespace

std::vector<uint8_t> SerializeModel(const ModelParams& params) {
  ByteWriter w;
  w.Bytes({reinterpret_cast<const uint8_t*>(kMagic), 4});
  w.U8(kCheckpointVersion);
  WriteArch(w, params.arch);
  const auto named = NamedTensors(params);
  w.U32(static_cast<uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    w.U16(static_cast<uint16_t>(name.size()));
    w.String(name);
  }
  for (const auto& [name, t] : named) {
    w.U16(static_cast<uint16_t>(name.size()));
    w.String(name);
    w.U8(static_cast<uint8_t>(t.rank()));
    for (int d : t.shape()) w.U32(static_cast<uint32_t>(d));
    for (float v : t.data()) w.F32(v);
  }
  return w.Take();
}

ModelParams DeserializeModel(std::span<const uint8_t> bytes) {
  ByteReader r(bytes, "checkpoint");
  const auto magic = r.Bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw ParseError(ParseErrorCode::kBadMagic, "checkpoint: bad magic");
  }
  if (r.U8() != kCheckpointVersion) {
    throw ParseError(ParseErrorCode::kBadVersion, "checkpoint: unsupported version");
  }
  const ArchConfig arch = ReadArch(r);
  ModelParams params = ZeroModel(arch);
  const auto named = NamedTensors(params);

  const uint32_t count = r.U32();
  if (count != named.size()) {
    throw ParseError(ParseErrorCode::kBadField, "checkpoint: manifest has " +
                                                    std::to_string(count) + " entries, expected " +
                                                    std::to_string(named.size()));
  }
  for (const auto& [name, t] : named) {
    if (ReadName(r) != name) {
      throw ParseError(ParseErrorCode::kBadField, "checkpoint: manifest does not match " + name);
    }
  }
  for (auto [name, t] : named) {
    if (ReadName(r) != name) {
      throw ParseError(ParseErrorCode::kBadField, "checkpoint: expected tensor " + name);
    }
    const int rank = r.U8();
    Shape shape(rank);
    for (int& d : shape) d = static_cast<int>(r.U32());
    if (shape != t.shape()) {
      throw ParseError(ParseErrorCode::kBadField, "checkpoint: tensor " + name + " has shape " +
                                                      ShapeString(shape) + ", expected " +
                                                      ShapeString(t.shape()));
    }
    for (float& v : t.mutable_data()) v = r.F32();
  }
  if (r.remaining() != 0) {
    throw ParseError(ParseErrorCode::kTrailingBytes, "checkpoint: trailing bytes");
  }
  return params;
}

void SaveModel(const ModelParams& params, const std::string& path) {
  WriteFileBytes(path, SerializeModel(params));
}

ModelParams LoadModel(const std::string& path) { return DeserializeModel(ReadFileBytes(path)); }

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace nic
