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
#include <array>
#include <cmath>

#include "doctest.h"

#include "flsnn/rng.h"

namespace flsnn {

TEST_CASE("splitmix64 reference outputs") {
  // Published SplitMix64 sequences.
  SplitMix64 zero(0);
  CHECK(zero.next() == 0xE220A8397B1DCDAFULL);
  CHECK(zero.next() == 0x6E789E6AA1B965F4ULL);
  CHECK(zero.next() == 0x06C45D188009454FULL);

  SplitMix64 s(1234567);
  const std::array<std::uint64_t, 5> expected = {
      6457827717110365317ULL, 3203168211198807973ULL, 9817491932198370423ULL,
      4593380528125082431ULL, 16408922859458223821ULL};
  for (auto e : expected) CHECK(s.next() == e);
}

TEST_CASE("round seed derivation") {
  // The finalizer maps 0 to 0, so the all-zero triple derives seed 0.
  CHECK(splitmix64_mix(0) == 0);
  CHECK(derive_round_seed(0, 0, 0) == splitmix64_mix(0));

  CHECK(derive_round_seed(42, 3, 5) == derive_round_seed(42, 3, 5));
  // Frozen from an independent evaluation of the finalizer.
  CHECK(derive_round_seed(42, 3, 5) == 0x183D6E4BC7D73CCEULL);
  CHECK(derive_round_seed(42, 3, 6) == 0xEC50FD4425EA79B0ULL);
  CHECK(derive_round_seed(7, 1, 0xFFFF) == 0xA1C80B198BDDC2E3ULL);

  std::size_t collisions = 0;
  for (std::uint64_t t = 0; t < 50; ++t) {
    for (std::uint64_t k = 0; k < 50; ++k) {
      collisions += derive_round_seed(9, t, k) == derive_round_seed(9, t, k + 1);
      collisions += derive_round_seed(9, t, k) == derive_round_seed(9, t + 1, k);
    }
  }
  CHECK(collisions == 0);
}

TEST_CASE("uniform_below is in range and roughly flat") {
  SplitMix64 rng(5);
  std::array<int, 7> counts{};
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.uniform_below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(rng.uniform_below(1) == 0);

  // Bounds near 2^64 exercise the rejection path.
  const std::uint64_t big = (1ULL << 63) + 12345;
  for (int i = 0; i < 1000; ++i) CHECK(rng.uniform_below(big) < big);
}

TEST_CASE("uniform01 and normal moments") {
  SplitMix64 rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = rng.normal();
    REQUIRE(std::isfinite(z));
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

}  // namespace flsnn
