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
#ifndef FLSNN_DATAIO_H_
#define FLSNN_DATAIO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace flsnn {

/// One sample of a raster: [steps x neurons] bins, row-major, each 0 or 1.
struct SpikeView {
  std::span<const std::uint8_t> bins;
  std::size_t steps = 0;
  std::size_t neurons = 0;

  std::uint8_t operator()(std::size_t step, std::size_t neuron) const {
    return bins[step * neurons + neuron];
  }
};

/// Dense binary spike tensor [samples x steps x neurons] with class labels.
class SpikeRaster {
 public:
  SpikeRaster() = default;
  /// Zero-filled raster; throws ConfigError on a zero dimension.
  SpikeRaster(std::size_t n_samples, std::size_t steps, std::size_t n_neurons,
              std::size_t n_classes);

  std::size_t n_samples() const { return labels_.size(); }
  std::size_t steps() const { return steps_; }
  std::size_t n_neurons() const { return n_neurons_; }
  std::size_t n_classes() const { return n_classes_; }
  std::size_t sample_size() const { return steps_ * n_neurons_; }

  std::uint16_t label(std::size_t i) const { return labels_[i]; }
  void set_label(std::size_t i, std::uint16_t label);

  SpikeView sample(std::size_t i) const {
    return {std::span(spikes_).subspan(i * sample_size(), sample_size()), steps_,
            n_neurons_};
  }
  std::span<std::uint8_t> mutable_sample(std::size_t i) {
    return std::span(spikes_).subspan(i * sample_size(), sample_size());
  }

  std::span<const std::uint16_t> labels() const { return labels_; }
  std::span<const std::uint8_t> spikes() const { return spikes_; }

  /// New raster holding the given samples, in the given order.
  SpikeRaster subset(std::span<const std::size_t> indices) const;

  bool operator==(const SpikeRaster&) const = default;

 private:
  std::size_t steps_ = 0;
  std::size_t n_neurons_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<std::uint16_t> labels_;
  std::vector<std::uint8_t> spikes_;
};

/// A client's slice of a dataset, as sorted sample indices.
struct Shard {
  std::uint32_t client_id = 0;
  std::vector<std::size_t> indices;
};

// "SPK1" file: magic, u32 n_samples, u32 steps, u32 n_neurons, u32 n_classes,
// then per sample a u16 label followed by steps*n_neurons bytes of 0/1.
// All integers little-endian.
inline constexpr std::size_t kRasterHeaderBytes = 20;

std::vector<std::uint8_t> encode_raster(const SpikeRaster& raster);
/// Throws FormatError (with byte offset) on any malformed input.
SpikeRaster decode_raster(std::span<const std::uint8_t> bytes);

void save_raster(const SpikeRaster& raster, const std::filesystem::path& path);
SpikeRaster load_raster(const std::filesystem::path& path);

/// Synthetic class-template dataset. Each class owns a seeded template of
/// active (neuron, time-band) cells; every sample of the class reproduces the
/// template with each bin dropped (if active) or switched on (if inactive)
/// with probability noise_rate. Samples are interleaved by class.
SpikeRaster synth_generate(std::size_t n_classes, std::size_t n_neurons,
                           std::size_t steps, std::size_t samples_per_class,
                           double noise_rate, std::uint64_t seed);

/// Splits a class-interleaved raster into the first per_class_head samples of
/// each class and the remainder.
std::pair<SpikeRaster, SpikeRaster> split_head_per_class(
    const SpikeRaster& raster, std::size_t per_class_head);

/// Seeded shuffle of all sample indices, cut into n_clients contiguous shards
/// whose sizes differ by at most one. Indices inside each shard are sorted.
std::vector<Shard> partition(std::size_t n_samples, std::size_t n_clients,
                             std::uint64_t seed);

}  // namespace flsnn

#endif  // FLSNN_DATAIO_H_
