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
#ifndef FLSNN_EXPERIMENT_H_
#define FLSNN_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flsnn/dataio.h"
#include "flsnn/snn.h"

namespace flsnn {

/// All hyperparameters of one federated run. Defaults follow the reference
/// SHD setup (700-50-5 network, batch 20, one local epoch, lr 1e-4, 150
/// rounds, alpha 0, beta 1).
struct FedConfig {
  std::uint32_t n_clients = 4;
  std::uint32_t rounds = 150;
  double mask_fraction = 0.0;
  double cdp = 0.0;
  std::uint64_t master_seed = 1;
  NeuronConfig neuron;
  double learning_rate = 1e-4;
  std::size_t batch_size = 20;
  std::size_t local_epochs = 1;
  std::size_t n_input = 700;
  std::size_t n_hidden = 50;
  std::size_t n_output = 5;
  double init_scale = 1.0;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
  TrainOptions train_options() const {
    return {learning_rate, batch_size, local_epochs};
  }
  float wire_mask_fraction() const { return static_cast<float>(mask_fraction); }

  /// Miniature of the reference setup sized for the synthetic dataset
  /// (100 inputs, 30 rounds) with a learning rate that converges there.
  static FedConfig desk_scale();
};

/// JSON object whose keys are the FedConfig field names; the neuron fields
/// are flattened (alpha, beta, theta, lambda_sg). Missing keys keep their
/// defaults, unknown keys are rejected.
FedConfig parse_config(std::string_view json_text);
FedConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const FedConfig& cfg);

// Reserved stream ids for derive_round_seed. Per-client seeds use the
// client index, which is always below these.
inline constexpr std::uint64_t kRosterStream = 0xFFFF;
inline constexpr std::uint64_t kPartitionStream = 0xFFFE;
inline constexpr std::uint64_t kInitStream = 0xFFFD;

std::uint64_t mask_seed(std::uint64_t master, std::uint32_t round,
                        std::uint32_t client);
std::uint64_t shuffle_seed(std::uint64_t master, std::uint32_t round,
                           std::uint32_t client);
std::uint64_t roster_seed(std::uint64_t master, std::uint32_t round);

ModelParams initial_model(const FedConfig& cfg);
std::vector<Shard> client_shards(const FedConfig& cfg, std::size_t n_train);

struct RoundMetrics {
  std::uint32_t round = 0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::uint32_t n_working = 0;
  std::uint64_t uplink_bytes = 0;
  double seconds = 0.0;
};

struct RoundResult {
  ModelParams params;
  RoundMetrics metrics;
};

/// One round of masked federated training: dropout roster, local training
/// and masking per working client, wire encode/decode, reconstruction,
/// uniform aggregation, global update, then evaluation of the new model.
RoundResult run_round(std::uint32_t round, const ModelParams& w,
                      const SpikeRaster& train, const SpikeRaster& test,
                      std::span<const Shard> shards, const FedConfig& cfg);

struct ExperimentResult {
  ModelParams final_params;
  std::vector<RoundMetrics> rounds;
};

/// Checks that the datasets fit the configured model. Throws ConfigError.
void check_data(const FedConfig& cfg, const SpikeRaster& train,
                const SpikeRaster& test);

/// Rounds 1..R from the seeded initial model, in memory.
ExperimentResult run_federation(
    const FedConfig& cfg, const SpikeRaster& train, const SpikeRaster& test,
    const std::function<void(const RoundMetrics&)>& on_round = {});

inline constexpr std::string_view kMetricsHeader =
    "round,train_acc,test_acc,n_working,uplink_bytes,seconds";

std::string metrics_csv_row(const RoundMetrics& m);

/// run_federation plus one CSV row per round at csv_path and the final
/// model dump at model_path.
ExperimentResult run_experiment(const FedConfig& cfg, const SpikeRaster& train,
                                const SpikeRaster& test,
                                const std::filesystem::path& csv_path,
                                const std::filesystem::path& model_path);

// Model dump: u32 n_input, u32 n_hidden, u32 n_output, u32 reserved (0),
// then w_hidden and w_out row-major as little-endian f32.
inline constexpr std::size_t kModelHeaderBytes = 16;
std::vector<std::uint8_t> encode_model(const ModelParams& params);
ModelParams decode_model(std::span<const std::uint8_t> bytes);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

enum class GridAxis { kClients, kCdp };

struct GridCell {
  double mask_fraction = 0.0;
  double axis_value = 0.0;
  double final_train_acc = 0.0;
  double final_test_acc = 0.0;
  std::uint64_t total_uplink_bytes = 0;
  std::string status = "ok";
};

/// One experiment per (mask, axis value) cell, mask-major. Cell i runs with
/// master_seed + i. A failing cell is recorded with its error and the grid
/// continues. Writes grid.csv and cell_<i>.csv under out_dir.
std::vector<GridCell> run_grid(const FedConfig& base, std::span<const double> masks,
                               GridAxis axis, std::span<const double> axis_values,
                               const SpikeRaster& train, const SpikeRaster& test,
                               const std::filesystem::path& out_dir,
                               unsigned threads = 0);

}  // namespace flsnn

#endif  // FLSNN_EXPERIMENT_H_
