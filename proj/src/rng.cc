// Copyright 2026 The flsnn Authors. All Rights Reserved.
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
// =============================================================================

#include "flsnn/rng.h"

#include <cmath>
#include <numbers>

namespace flsnn {

std::uint64_t SplitMix64::uniform_below(std::uint64_t bound) {
  // Largest multiple of bound representable in 2^64, computed without
  // overflow: 2^64 mod bound == (2^64 - bound) mod bound.
  const std::uint64_t rejection = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next();
    if (x >= rejection) return x % bound;
  }
}

double SplitMix64::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace flsnn
