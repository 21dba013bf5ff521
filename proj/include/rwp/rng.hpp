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
#ifndef RWP_RNG_HPP_
#define RWP_RNG_HPP_

#include <cstdint>
#include <random>

namespace rwp {

// Seeded random stream. The engine sequence is fixed by the standard; the
// uniform and normal transforms are implemented here so that streams are
// reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Seed for an independent stream derived from (seed, stream_id).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal (polar method, both variates used).
  double normal();

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  bool operator==(const Rng&) const = default;

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rwp

#endif  // RWP_RNG_HPP_
