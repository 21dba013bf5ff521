/* Copyright 2026 The RWP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "rwp/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <string>

#include "rwp/error.hpp"

namespace rwp {

constexpr char kCheckpointMagic[4] = {'R', 'W', 'P', '1'};

void write_u64_le(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

void write_f64_le(std::ostream& out, double v) {
  write_u64_le(out, std::bit_cast<std::uint64_t>(v));
}

std::uint64_t read_u64_le(std::istream& in, const char* what) {
  std::array<unsigned char, 8> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw IngestionError(std::string("truncated file while reading ") + what);
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

double read_f64_le(std::istream& in, const char* what) {
  return std::bit_cast<double>(read_u64_le(in, what));
}

void write_checkpoint(const std::filesystem::path& path, const ParamVector& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot open checkpoint for writing: " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_u64_le(out, params.size());
  for (double v : params) write_f64_le(out, v);
  if (!out) throw IngestionError("failed writing checkpoint: " + path.string());
}

ParamVector read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open checkpoint: " + path.string());
  char magic[4];
  if (!in.read(magic, 4)) throw IngestionError("truncated checkpoint header");
  if (!std::equal(magic, magic + 4, kCheckpointMagic)) {
    throw IngestionError("bad magic in checkpoint " + path.string());
  }
  const std::uint64_t count = read_u64_le(in, "checkpoint count");
  const auto body_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - body_start);
  in.seekg(body_start);
  if (remaining / 8 < count) throw IngestionError("truncated checkpoint " + path.string());
  ParamVector params(count);
  for (std::uint64_t i = 0; i < count; ++i) params[i] = read_f64_le(in, "checkpoint values");
  return params;
}

}  // namespace rwp
