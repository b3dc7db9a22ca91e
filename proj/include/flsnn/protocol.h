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
#ifndef FLSNN_PROTOCOL_H_
#define FLSNN_PROTOCOL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flsnn/matrix.h"
#include "flsnn/snn.h"

namespace flsnn {

/// Client update: locally trained weights minus the broadcast weights.
struct ModelDelta {
  Matrix<float> d_hidden;
  Matrix<float> d_out;

  ModelDelta() = default;
  ModelDelta(std::size_t n_input, std::size_t n_hidden, std::size_t n_output)
      : d_hidden(n_hidden, n_input), d_out(n_output, n_hidden) {}

  bool same_shape(const ModelDelta& o) const {
    return d_hidden.same_shape(o.d_hidden) && d_out.same_shape(o.d_out);
  }
  bool operator==(const ModelDelta&) const = default;
};

struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t count() const { return rows * cols; }
  bool operator==(const LayerShape&) const = default;
};

/// Layer order on the wire and in masks: hidden first, then output.
std::vector<LayerShape> layer_shapes(const ModelParams& params);
std::vector<LayerShape> layer_shapes(const ModelDelta& delta);

inline constexpr float kMaxMaskFraction = 0.99f;

/// Seeded random sparsity pattern over all layers of an update.
struct MaskSpec {
  std::uint64_t seed = 0;
  float mask_fraction = 0.0f;
  std::vector<std::vector<std::uint32_t>> kept;  // per layer, ascending

  bool operator==(const MaskSpec&) const = default;
};

/// Wire object sent uplink: the seed plus the kept values of each layer.
struct MaskedUpdate {
  std::uint32_t client_id = 0;
  std::uint32_t round = 0;
  std::uint64_t seed = 0;
  float mask_fraction = 0.0f;
  std::vector<std::vector<float>> values;  // per layer, ascending index order

  /// Bitwise equality, so NaN payloads compare equal to themselves.
  bool bit_equal(const MaskedUpdate& other) const;
};

struct UpdateMeta {
  std::uint32_t client_id = 0;
  std::uint32_t round = 0;
};

struct RoundRoster {
  std::uint32_t total = 0;
  std::vector<std::uint32_t> working;  // sorted client ids
  double cdp = 0.0;
};

/// Element-wise w_new - w_old. Throws ProtocolError on shape mismatch.
ModelDelta compute_delta(const ModelParams& w_new, const ModelParams& w_old);

/// Number of values kept for a layer of count parameters: (1-m)*count
/// rounded half away from zero, clamped to [1, count].
std::size_t kept_count(std::size_t count, float mask_fraction);

/// Draws kept indices for every layer from one SplitMix64 stream seeded with
/// the seed, by partial Fisher-Yates, then sorts them. Throws ConfigError
/// unless 0 <= mask_fraction <= 0.99.
MaskSpec gen_mask(std::uint64_t seed, std::span<const LayerShape> shapes,
                  float mask_fraction);

MaskedUpdate apply_mask(const ModelDelta& delta, const MaskSpec& spec,
                        const UpdateMeta& meta);

/// Server side: regenerates the mask from the update's seed and scatters
/// the values; unkept entries are zero.
ModelDelta reconstruct(const MaskedUpdate& update,
                       std::span<const LayerShape> shapes);

// Wire layout, little-endian: "FSU1", u16 version, u32 client_id, u32 round,
// u64 seed, f32 mask_fraction, u16 layer_count, then per layer u32 count and
// count f32 values.
inline constexpr std::uint16_t kWireVersion = 1;
inline constexpr std::size_t kWireHeaderBytes = 28;

std::vector<std::uint8_t> serialize(const MaskedUpdate& update);
/// Throws CodecError on bad magic or version, truncation or trailing bytes.
MaskedUpdate deserialize(std::span<const std::uint8_t> bytes);

/// Exact serialized size: 28 + 4*L + 4*sum(k_l).
std::size_t uplink_bytes(const MaskedUpdate& update);

/// Drops exactly round(cdp*total) clients, chosen uniformly from a
/// SplitMix64 stream. Throws ConfigError if no client would remain or cdp
/// is outside [0, 1].
RoundRoster select_dropouts(std::uint32_t total, double cdp,
                            std::uint64_t round_seed);

/// Uniform mean, summed in the given (client-id) order.
ModelDelta aggregate(std::span<const ModelDelta> updates);

ModelParams apply_global(const ModelParams& w, const ModelDelta& h);

}  // namespace flsnn

#endif  // FLSNN_PROTOCOL_H_
