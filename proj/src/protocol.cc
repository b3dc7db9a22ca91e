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
#include "flsnn/protocol.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>

#include "flsnn/bytes.h"
#include "flsnn/error.h"
#include "flsnn/rng.h"

namespace flsnn {

namespace {

constexpr char kWireMagic[4] = {'F', 'S', 'U', '1'};

std::span<const float> layer_view(const ModelDelta& d, std::size_t layer) {
  return layer == 0 ? d.d_hidden.flat() : d.d_out.flat();
}

std::span<float> layer_view(ModelDelta& d, std::size_t layer) {
  return layer == 0 ? d.d_hidden.flat() : d.d_out.flat();
}

void require_model_layers(std::span<const LayerShape> shapes) {
  if (shapes.size() != 2) {
    throw ProtocolError("expected 2 layers, got " + std::to_string(shapes.size()));
  }
}

}  // namespace

std::vector<LayerShape> layer_shapes(const ModelParams& params) {
  return {{params.w_hidden.rows(), params.w_hidden.cols()},
          {params.w_out.rows(), params.w_out.cols()}};
}

std::vector<LayerShape> layer_shapes(const ModelDelta& delta) {
  return {{delta.d_hidden.rows(), delta.d_hidden.cols()},
          {delta.d_out.rows(), delta.d_out.cols()}};
}

bool MaskedUpdate::bit_equal(const MaskedUpdate& other) const {
  if (client_id != other.client_id || round != other.round || seed != other.seed ||
      std::bit_cast<std::uint32_t>(mask_fraction) !=
          std::bit_cast<std::uint32_t>(other.mask_fraction) ||
      values.size() != other.values.size()) {
    return false;
  }
  for (std::size_t l = 0; l < values.size(); ++l) {
    const auto& a = values[l];
    const auto& b = other.values[l];
    if (a.size() != b.size()) return false;
    if (!a.empty() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

ModelDelta compute_delta(const ModelParams& w_new, const ModelParams& w_old) {
  if (!w_new.same_shape(w_old)) {
    throw ProtocolError("compute_delta: parameter shapes differ");
  }
  ModelDelta d(w_old.n_input(), w_old.n_hidden(), w_old.n_output());
  auto sub = [](auto a, auto b, auto out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  };
  sub(w_new.w_hidden.flat(), w_old.w_hidden.flat(), d.d_hidden.flat());
  sub(w_new.w_out.flat(), w_old.w_out.flat(), d.d_out.flat());
  return d;
}

std::size_t kept_count(std::size_t count, float mask_fraction) {
  if (count == 0) return 0;
  const double kept = (1.0 - static_cast<double>(mask_fraction)) *
                      static_cast<double>(count);
  const auto k = static_cast<std::size_t>(std::llround(kept));
  return std::clamp<std::size_t>(k, 1, count);
}

MaskSpec gen_mask(std::uint64_t seed, std::span<const LayerShape> shapes,
                  float mask_fraction) {
  if (!(mask_fraction >= 0.0f && mask_fraction <= kMaxMaskFraction)) {
    throw ConfigError("mask fraction must lie in [0, 0.99], got " +
                      std::to_string(mask_fraction));
  }
  MaskSpec spec;
  spec.seed = seed;
  spec.mask_fraction = mask_fraction;
  SplitMix64 rng(seed);
  std::vector<std::uint32_t> pool;
  for (const auto& shape : shapes) {
    const std::size_t n = shape.count();
    if (n > std::numeric_limits<std::uint32_t>::max()) {
      throw ConfigError("layer too large for 32-bit mask indices");
    }
    const std::size_t k = kept_count(n, mask_fraction);
    pool.resize(n);
    std::iota(pool.begin(), pool.end(), std::uint32_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.uniform_below(n - i);
      std::swap(pool[i], pool[j]);
    }
    std::vector<std::uint32_t> kept(pool.begin(), pool.begin() + k);
    std::sort(kept.begin(), kept.end());
    spec.kept.push_back(std::move(kept));
  }
  return spec;
}

MaskedUpdate apply_mask(const ModelDelta& delta, const MaskSpec& spec,
                        const UpdateMeta& meta) {
  const auto shapes = layer_shapes(delta);
  if (spec.kept.size() != shapes.size()) {
    throw ProtocolError("mask has " + std::to_string(spec.kept.size()) +
                        " layers, delta has " + std::to_string(shapes.size()));
  }
  MaskedUpdate out;
  out.client_id = meta.client_id;
  out.round = meta.round;
  out.seed = spec.seed;
  out.mask_fraction = spec.mask_fraction;
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto src = layer_view(delta, l);
    std::vector<float> values;
    values.reserve(spec.kept[l].size());
    for (std::uint32_t idx : spec.kept[l]) {
      if (idx >= src.size()) {
        throw ProtocolError("mask index " + std::to_string(idx) +
                            " outside layer " + std::to_string(l));
      }
      values.push_back(src[idx]);
    }
    out.values.push_back(std::move(values));
  }
  return out;
}

ModelDelta reconstruct(const MaskedUpdate& update,
                       std::span<const LayerShape> shapes) {
  require_model_layers(shapes);
  if (update.values.size() != shapes.size()) {
    throw ProtocolError("update carries " + std::to_string(update.values.size()) +
                        " layers, model has " + std::to_string(shapes.size()));
  }
  if (shapes[1].cols != shapes[0].rows) {
    throw ProtocolError("layer shapes do not chain");
  }
  MaskSpec spec;
  try {
    spec = gen_mask(update.seed, shapes, update.mask_fraction);
  } catch (const ConfigError& e) {
    throw ProtocolError(std::string("update from client ") +
                        std::to_string(update.client_id) + ": " + e.what());
  }
  ModelDelta out(shapes[0].cols, shapes[0].rows, shapes[1].rows);
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const auto& kept = spec.kept[l];
    const auto& values = update.values[l];
    if (values.size() != kept.size()) {
      throw ProtocolError("client " + std::to_string(update.client_id) + " layer " +
                          std::to_string(l) + ": expected " +
                          std::to_string(kept.size()) + " values, got " +
                          std::to_string(values.size()));
    }
    auto dst = layer_view(out, l);
    for (std::size_t i = 0; i < kept.size(); ++i) dst[kept[i]] = values[i];
  }
  return out;
}

std::vector<std::uint8_t> serialize(const MaskedUpdate& update) {
  if (update.values.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw CodecError("too many layers to encode");
  }
  ByteWriter w;
  w.reserve(uplink_bytes(update));
  w.put_bytes(kWireMagic);
  w.put_u16(kWireVersion);
  w.put_u32(update.client_id);
  w.put_u32(update.round);
  w.put_u64(update.seed);
  w.put_f32(update.mask_fraction);
  w.put_u16(static_cast<std::uint16_t>(update.values.size()));
  for (const auto& layer : update.values) {
    if (layer.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw CodecError("layer too large to encode");
    }
    w.put_u32(static_cast<std::uint32_t>(layer.size()));
    for (float v : layer) w.put_f32(v);
  }
  return w.take();
}

MaskedUpdate deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader<CodecError> r(bytes);
  const auto magic = r.get_bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), std::begin(kWireMagic))) {
    throw CodecError("bad update magic");
  }
  const std::uint16_t version = r.get_u16("version");
  if (version != kWireVersion) {
    throw CodecError("unsupported update version " + std::to_string(version));
  }
  MaskedUpdate u;
  u.client_id = r.get_u32("client_id");
  u.round = r.get_u32("round");
  u.seed = r.get_u64("seed");
  u.mask_fraction = r.get_f32("mask_fraction");
  const std::uint16_t layers = r.get_u16("layer_count");
  u.values.resize(layers);
  for (auto& layer : u.values) {
    const std::uint32_t count = r.get_u32("value_count");
    if (r.remaining() / 4 < count) {
      throw CodecError("truncated input: layer declares " + std::to_string(count) +
                       " values at byte offset " + std::to_string(r.offset()));
    }
    layer.resize(count);
    for (auto& v : layer) v = r.get_f32("value");
  }
  if (r.remaining() != 0) {
    throw CodecError(std::to_string(r.remaining()) + " trailing bytes after update");
  }
  return u;
}

std::size_t uplink_bytes(const MaskedUpdate& update) {
  std::size_t total = kWireHeaderBytes + 4 * update.values.size();
  for (const auto& layer : update.values) total += 4 * layer.size();
  return total;
}

RoundRoster select_dropouts(std::uint32_t total, double cdp,
                            std::uint64_t round_seed) {
  if (total == 0) throw ConfigError("need at least one client");
  if (!(cdp >= 0.0 && cdp <= 1.0)) {
    throw ConfigError("client drop probability must lie in [0, 1], got " +
                      std::to_string(cdp));
  }
  const auto dropped = static_cast<std::uint32_t>(std::llround(cdp * total));
  if (dropped >= total) {
    throw ConfigError("cdp " + std::to_string(cdp) + " leaves no working client out of " +
                      std::to_string(total));
  }
  if (cdp > 0.8) {
    std::cerr << "warning: cdp " << cdp << " is above the studied range [0, 0.8]\n";
  }
  std::vector<std::uint32_t> pool(total);
  std::iota(pool.begin(), pool.end(), std::uint32_t{0});
  SplitMix64 rng(round_seed);
  for (std::uint32_t i = 0; i < dropped; ++i) {
    const auto j = i + static_cast<std::uint32_t>(rng.uniform_below(total - i));
    std::swap(pool[i], pool[j]);
  }
  RoundRoster roster;
  roster.total = total;
  roster.cdp = cdp;
  roster.working.assign(pool.begin() + dropped, pool.end());
  std::sort(roster.working.begin(), roster.working.end());
  return roster;
}

ModelDelta aggregate(std::span<const ModelDelta> updates) {
  if (updates.empty()) throw ProtocolError("aggregate: no updates received");
  ModelDelta sum = updates.front();
  for (const auto& u : updates.subspan(1)) {
    if (!u.same_shape(sum)) throw ProtocolError("aggregate: update shapes differ");
    for (std::size_t l = 0; l < 2; ++l) {
      auto dst = layer_view(sum, l);
      const auto src = layer_view(u, l);
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
  const float n = static_cast<float>(updates.size());
  for (auto& v : sum.d_hidden.flat()) v /= n;
  for (auto& v : sum.d_out.flat()) v /= n;
  return sum;
}

ModelParams apply_global(const ModelParams& w, const ModelDelta& h) {
  if (w.w_hidden.rows() != h.d_hidden.rows() || w.w_hidden.cols() != h.d_hidden.cols() ||
      w.w_out.rows() != h.d_out.rows() || w.w_out.cols() != h.d_out.cols()) {
    throw ProtocolError("apply_global: delta shape does not match the model");
  }
  ModelParams out = w;
  auto add = [](auto dst, auto src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  };
  add(out.w_hidden.flat(), h.d_hidden.flat());
  add(out.w_out.flat(), h.d_out.flat());
  return out;
}

}  // namespace flsnn
