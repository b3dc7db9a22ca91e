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
#include "flsnn/dataio.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "flsnn/bytes.h"
#include "flsnn/error.h"
#include "flsnn/rng.h"

namespace flsnn {

namespace {

constexpr char kRasterMagic[4] = {'S', 'P', 'K', '1'};

// Template geometry of the synthetic generator: the time axis is cut into
// this many bands and each (neuron, band) cell is active with this
// probability.
constexpr std::size_t kTemplateBands = 5;
constexpr double kTemplateDensity = 0.2;

}  // namespace

SpikeRaster::SpikeRaster(std::size_t n_samples, std::size_t steps,
                         std::size_t n_neurons, std::size_t n_classes)
    : steps_(steps),
      n_neurons_(n_neurons),
      n_classes_(n_classes),
      labels_(n_samples, 0),
      spikes_(n_samples * steps * n_neurons, 0) {
  if (steps == 0 || n_neurons == 0 || n_classes == 0) {
    throw ConfigError("raster dimensions must be positive");
  }
  if (n_classes > 65536) throw ConfigError("at most 65536 classes are supported");
}

void SpikeRaster::set_label(std::size_t i, std::uint16_t label) {
  if (label >= n_classes_) {
    throw InputError("label " + std::to_string(label) + " out of range");
  }
  labels_[i] = label;
}

SpikeRaster SpikeRaster::subset(std::span<const std::size_t> indices) const {
  SpikeRaster out(indices.size(), steps_, n_neurons_, n_classes_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= n_samples()) throw InputError("subset index out of range");
    out.labels_[k] = labels_[i];
    const auto src = sample(i).bins;
    std::copy(src.begin(), src.end(), out.mutable_sample(k).begin());
  }
  return out;
}

std::vector<std::uint8_t> encode_raster(const SpikeRaster& raster) {
  ByteWriter w;
  w.put_bytes(kRasterMagic);
  w.put_u32(static_cast<std::uint32_t>(raster.n_samples()));
  w.put_u32(static_cast<std::uint32_t>(raster.steps()));
  w.put_u32(static_cast<std::uint32_t>(raster.n_neurons()));
  w.put_u32(static_cast<std::uint32_t>(raster.n_classes()));
  for (std::size_t i = 0; i < raster.n_samples(); ++i) {
    w.put_u16(raster.label(i));
    w.put_bytes(raster.sample(i).bins);
  }
  return w.take();
}

SpikeRaster decode_raster(std::span<const std::uint8_t> bytes) {
  ByteReader<FormatError> r(bytes);
  const auto magic = r.get_bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), std::begin(kRasterMagic))) {
    throw FormatError("bad raster magic at byte offset 0");
  }
  const std::uint32_t n_samples = r.get_u32("n_samples");
  const std::uint32_t steps = r.get_u32("steps");
  const std::uint32_t n_neurons = r.get_u32("n_neurons");
  const std::uint32_t n_classes = r.get_u32("n_classes");
  if (steps == 0 || n_neurons == 0 || n_classes == 0) {
    throw FormatError("zero raster dimension in header at byte offset 8");
  }
  const std::uint64_t record = 2 + std::uint64_t{steps} * n_neurons;
  const std::uint64_t expected = kRasterHeaderBytes + record * n_samples;
  if (bytes.size() < expected) {
    throw FormatError("raster truncated: expected " + std::to_string(expected) +
                      " bytes, file has " + std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw FormatError("trailing data after byte offset " + std::to_string(expected));
  }

  SpikeRaster raster(n_samples, steps, n_neurons, n_classes);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::size_t label_offset = r.offset();
    const std::uint16_t label = r.get_u16("label");
    if (label >= n_classes) {
      throw FormatError("label " + std::to_string(label) + " >= n_classes at byte offset " +
                        std::to_string(label_offset));
    }
    raster.set_label(i, label);
    const std::size_t bins_offset = r.offset();
    const auto bins = r.get_bytes(raster.sample_size(), "spikes");
    for (std::size_t k = 0; k < bins.size(); ++k) {
      if (bins[k] > 1) {
        throw FormatError("spike byte " + std::to_string(bins[k]) +
                          " not in {0,1} at byte offset " +
                          std::to_string(bins_offset + k));
      }
    }
    std::copy(bins.begin(), bins.end(), raster.mutable_sample(i).begin());
  }
  return raster;
}

void save_raster(const SpikeRaster& raster, const std::filesystem::path& path) {
  write_file(path, encode_raster(raster));
}

SpikeRaster load_raster(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_raster(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

SpikeRaster synth_generate(std::size_t n_classes, std::size_t n_neurons,
                           std::size_t steps, std::size_t samples_per_class,
                           double noise_rate, std::uint64_t seed) {
  if (n_classes == 0 || n_neurons == 0 || steps == 0 || samples_per_class == 0) {
    throw ConfigError("synthetic dataset dimensions must be positive");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) {
    throw ConfigError("noise_rate must lie in [0, 0.5)");
  }
  SplitMix64 rng(seed);
  const std::size_t bands = std::min(kTemplateBands, steps);
  const std::size_t band_width = (steps + bands - 1) / bands;

  // templates[c] is [steps x neurons]: the cell pattern expanded over time.
  std::vector<std::vector<std::uint8_t>> templates(n_classes);
  for (auto& tmpl : templates) {
    tmpl.assign(steps * n_neurons, 0);
    for (std::size_t n = 0; n < n_neurons; ++n) {
      for (std::size_t b = 0; b < bands; ++b) {
        if (rng.uniform01() >= kTemplateDensity) continue;
        const std::size_t end = std::min(steps, (b + 1) * band_width);
        for (std::size_t t = b * band_width; t < end; ++t) tmpl[t * n_neurons + n] = 1;
      }
    }
  }

  SpikeRaster raster(n_classes * samples_per_class, steps, n_neurons, n_classes);
  std::size_t i = 0;
  for (std::size_t s = 0; s < samples_per_class; ++s) {
    for (std::size_t c = 0; c < n_classes; ++c, ++i) {
      raster.set_label(i, static_cast<std::uint16_t>(c));
      auto bins = raster.mutable_sample(i);
      const auto& tmpl = templates[c];
      for (std::size_t k = 0; k < bins.size(); ++k) {
        const bool flip = noise_rate > 0.0 && rng.uniform01() < noise_rate;
        bins[k] = static_cast<std::uint8_t>(tmpl[k] ^ (flip ? 1 : 0));
      }
    }
  }
  return raster;
}

std::pair<SpikeRaster, SpikeRaster> split_head_per_class(
    const SpikeRaster& raster, std::size_t per_class_head) {
  std::vector<std::size_t> seen(raster.n_classes(), 0);
  std::vector<std::size_t> head, tail;
  for (std::size_t i = 0; i < raster.n_samples(); ++i) {
    auto& count = seen[raster.label(i)];
    (count < per_class_head ? head : tail).push_back(i);
    ++count;
  }
  return {raster.subset(head), raster.subset(tail)};
}

std::vector<Shard> partition(std::size_t n_samples, std::size_t n_clients,
                             std::uint64_t seed) {
  if (n_clients == 0) throw ConfigError("partition needs at least one client");
  if (n_clients > n_samples) {
    throw ConfigError("cannot split " + std::to_string(n_samples) + " samples across " +
                      std::to_string(n_clients) + " clients");
  }
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_below(i)]);
  }

  std::vector<Shard> shards(n_clients);
  const std::size_t base = n_samples / n_clients;
  const std::size_t extra = n_samples % n_clients;
  std::size_t offset = 0;
  for (std::size_t k = 0; k < n_clients; ++k) {
    const std::size_t size = base + (k < extra ? 1 : 0);
    shards[k].client_id = static_cast<std::uint32_t>(k);
    shards[k].indices.assign(order.begin() + offset, order.begin() + offset + size);
    std::sort(shards[k].indices.begin(), shards[k].indices.end());
    offset += size;
  }
  return shards;
}

}  // namespace flsnn
