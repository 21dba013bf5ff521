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
#ifndef RWP_CHECKPOINT_HPP_
#define RWP_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>

#include "rwp/param_vector.hpp"

namespace rwp {

// Checkpoint layout, all little-endian:
//   "RWP1" | u64 count | count x f64
void write_checkpoint(const std::filesystem::path& path, const ParamVector& params);
ParamVector read_checkpoint(const std::filesystem::path& path);

// Little-endian primitives shared with the dataset container.
void write_u64_le(std::ostream& out, std::uint64_t v);
void write_f64_le(std::ostream& out, double v);
std::uint64_t read_u64_le(std::istream& in, const char* what);
double read_f64_le(std::istream& in, const char* what);

}  // namespace rwp

#endif  // RWP_CHECKPOINT_HPP_
