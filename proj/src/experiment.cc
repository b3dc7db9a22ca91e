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
#include "flsnn/experiment.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "flsnn/bytes.h"
#include "flsnn/error.h"
#include "flsnn/protocol.h"
#include "flsnn/rng.h"

namespace flsnn {

namespace {

// Re-raises the in-flight flsnn exception with a context prefix, keeping
// its type so callers can still tell configuration faults from data faults.
[[noreturn]] void rethrow_tagged(const std::string& prefix) {
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const InputError& e) {
    throw InputError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const ProtocolError& e) {
    throw ProtocolError(prefix + e.what());
  } catch (const CodecError& e) {
    throw CodecError(prefix + e.what());
  } catch (const FormatError& e) {
    throw FormatError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

}  // namespace

void FedConfig::validate() const {
  if (n_clients < 1) throw ConfigError("n_clients must be at least 1");
  if (n_clients >= kInitStream) throw ConfigError("n_clients is too large");
  if (rounds < 1) throw ConfigError("rounds must be at least 1");
  if (!(mask_fraction >= 0.0 && mask_fraction <= 0.99)) {
    throw ConfigError("mask_fraction must lie in [0, 0.99], got " +
                      std::to_string(mask_fraction));
  }
  if (!(cdp >= 0.0 && cdp <= 1.0)) {
    throw ConfigError("cdp must lie in [0, 1], got " + std::to_string(cdp));
  }
  if (std::llround(cdp * n_clients) >= static_cast<long long>(n_clients)) {
    throw ConfigError("cdp " + std::to_string(cdp) + " drops all " +
                      std::to_string(n_clients) + " clients");
  }
  neuron.validate();
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be positive");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (n_input < 1 || n_hidden < 1 || n_output < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw ConfigError("init_scale must be non-negative");
  }
}

FedConfig FedConfig::desk_scale() {
  FedConfig cfg;
  cfg.n_input = 100;
  cfg.rounds = 30;
  cfg.learning_rate = 1e-3;
  return cfg;
}

FedConfig parse_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid JSON config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  FedConfig cfg;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_clients") cfg.n_clients = value.get<std::uint32_t>();
      else if (key == "rounds") cfg.rounds = value.get<std::uint32_t>();
      else if (key == "mask_fraction") cfg.mask_fraction = value.get<double>();
      else if (key == "cdp") cfg.cdp = value.get<double>();
      else if (key == "master_seed") cfg.master_seed = value.get<std::uint64_t>();
      else if (key == "alpha") cfg.neuron.alpha = value.get<double>();
      else if (key == "beta") cfg.neuron.beta = value.get<double>();
      else if (key == "theta") cfg.neuron.theta = value.get<double>();
      else if (key == "lambda_sg") cfg.neuron.lambda_sg = value.get<double>();
      else if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
      else if (key == "local_epochs") cfg.local_epochs = value.get<std::size_t>();
      else if (key == "n_input") cfg.n_input = value.get<std::size_t>();
      else if (key == "n_hidden") cfg.n_hidden = value.get<std::size_t>();
      else if (key == "n_output") cfg.n_output = value.get<std::size_t>();
      else if (key == "init_scale") cfg.init_scale = value.get<double>();
      else throw ConfigError("unknown config key \"" + key + "\"");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  // Unsigned fields silently wrap negative JSON numbers; reject those.
  for (const char* key : {"n_clients", "rounds", "master_seed", "batch_size",
                          "local_epochs", "n_input", "n_hidden", "n_output"}) {
    if (j.contains(key) && !j[key].is_number_unsigned()) {
      throw ConfigError(std::string(key) + " must be a non-negative integer");
    }
  }
  cfg.validate();
  return cfg;
}

FedConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                       bytes.size()));
}

std::string config_to_json(const FedConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_clients"] = cfg.n_clients;
  j["rounds"] = cfg.rounds;
  j["mask_fraction"] = cfg.mask_fraction;
  j["cdp"] = cfg.cdp;
  j["master_seed"] = cfg.master_seed;
  j["alpha"] = cfg.neuron.alpha;
  j["beta"] = cfg.neuron.beta;
  j["theta"] = cfg.neuron.theta;
  j["lambda_sg"] = cfg.neuron.lambda_sg;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["local_epochs"] = cfg.local_epochs;
  j["n_input"] = cfg.n_input;
  j["n_hidden"] = cfg.n_hidden;
  j["n_output"] = cfg.n_output;
  j["init_scale"] = cfg.init_scale;
  return j.dump(2);
}

std::uint64_t mask_seed(std::uint64_t master, std::uint32_t round,
                        std::uint32_t client) {
  return derive_round_seed(master, round, client);
}

std::uint64_t shuffle_seed(std::uint64_t master, std::uint32_t round,
                           std::uint32_t client) {
  return derive_round_seed(~master, round, client);
}

std::uint64_t roster_seed(std::uint64_t master, std::uint32_t round) {
  return derive_round_seed(master, round, kRosterStream);
}

ModelParams initial_model(const FedConfig& cfg) {
  return init_params(cfg.n_input, cfg.n_hidden, cfg.n_output, cfg.init_scale,
                     derive_round_seed(cfg.master_seed, 0, kInitStream));
}

std::vector<Shard> client_shards(const FedConfig& cfg, std::size_t n_train) {
  return partition(n_train, cfg.n_clients,
                   derive_round_seed(cfg.master_seed, 0, kPartitionStream));
}

RoundResult run_round(std::uint32_t round, const ModelParams& w,
                      const SpikeRaster& train, const SpikeRaster& test,
                      std::span<const Shard> shards, const FedConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const std::string where = "round " + std::to_string(round) + ": ";
  if (shards.size() != cfg.n_clients) {
    throw ConfigError(where + "expected " + std::to_string(cfg.n_clients) +
                      " shards, got " + std::to_string(shards.size()));
  }
  RoundRoster roster;
  try {
    roster = select_dropouts(cfg.n_clients, cfg.cdp, roster_seed(cfg.master_seed, round));
  } catch (const Error&) {
    rethrow_tagged(where);
  }

  const auto shapes = layer_shapes(w);
  const float mask = cfg.wire_mask_fraction();
  std::vector<ModelDelta> received;
  received.reserve(roster.working.size());
  std::uint64_t uplink = 0;
  for (std::uint32_t k : roster.working) {
    try {
      // Client side.
      const ModelParams local =
          train_local(train, shards[k].indices, w, cfg.neuron, cfg.train_options(),
                      shuffle_seed(cfg.master_seed, round, k));
      const ModelDelta delta = compute_delta(local, w);
      const MaskSpec spec = gen_mask(mask_seed(cfg.master_seed, round, k), shapes, mask);
      const auto wire = serialize(apply_mask(delta, spec, {k, round}));
      uplink += wire.size();
      // Server side.
      received.push_back(reconstruct(deserialize(wire), shapes));
    } catch (const Error&) {
      rethrow_tagged(where + "client " + std::to_string(k) + ": ");
    }
  }

  RoundResult result;
  try {
    result.params = apply_global(w, aggregate(received));
  } catch (const Error&) {
    rethrow_tagged(where);
  }
  result.metrics.round = round;
  result.metrics.train_accuracy = evaluate(train, result.params, cfg.neuron);
  result.metrics.test_accuracy = evaluate(test, result.params, cfg.neuron);
  result.metrics.n_working = static_cast<std::uint32_t>(roster.working.size());
  result.metrics.uplink_bytes = uplink;
  result.metrics.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void check_data(const FedConfig& cfg, const SpikeRaster& train,
                const SpikeRaster& test) {
  for (const auto* data : {&train, &test}) {
    const char* name = data == &train ? "training" : "test";
    if (data->n_samples() == 0) {
      throw ConfigError(std::string(name) + " set is empty");
    }
    if (data->n_neurons() != cfg.n_input) {
      throw ConfigError(std::string(name) + " set has " +
                        std::to_string(data->n_neurons()) +
                        " input neurons, config n_input is " +
                        std::to_string(cfg.n_input));
    }
    if (data->n_classes() > cfg.n_output) {
      throw ConfigError(std::string(name) + " set has " +
                        std::to_string(data->n_classes()) +
                        " classes, config n_output is " + std::to_string(cfg.n_output));
    }
  }
  if (train.n_samples() < cfg.n_clients) {
    throw ConfigError("fewer training samples than clients");
  }
}

ExperimentResult run_federation(
    const FedConfig& cfg, const SpikeRaster& train, const SpikeRaster& test,
    const std::function<void(const RoundMetrics&)>& on_round) {
  cfg.validate();
  check_data(cfg, train, test);
  const auto shards = client_shards(cfg, train.n_samples());
  ExperimentResult result;
  result.final_params = initial_model(cfg);
  for (std::uint32_t t = 1; t <= cfg.rounds; ++t) {
    auto round = run_round(t, result.final_params, train, test, shards, cfg);
    result.final_params = std::move(round.params);
    if (on_round) on_round(round.metrics);
    result.rounds.push_back(round.metrics);
  }
  return result;
}

std::string metrics_csv_row(const RoundMetrics& m) {
  std::ostringstream row;
  row << m.round << ',' << format_double("%.6f", m.train_accuracy) << ','
      << format_double("%.6f", m.test_accuracy) << ',' << m.n_working << ','
      << m.uplink_bytes << ',' << format_double("%.3f", m.seconds);
  return row.str();
}

ExperimentResult run_experiment(const FedConfig& cfg, const SpikeRaster& train,
                                const SpikeRaster& test,
                                const std::filesystem::path& csv_path,
                                const std::filesystem::path& model_path) {
  cfg.validate();
  check_data(cfg, train, test);
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw IoError("cannot open " + csv_path.string() + " for writing");
  csv << kMetricsHeader << '\n';
  auto result = run_federation(cfg, train, test, [&](const RoundMetrics& m) {
    csv << metrics_csv_row(m) << '\n';
    csv.flush();
  });
  if (!csv) throw IoError("write failed for " + csv_path.string());
  if (!model_path.empty()) save_model(result.final_params, model_path);
  return result;
}

std::vector<std::uint8_t> encode_model(const ModelParams& params) {
  ByteWriter w;
  w.reserve(kModelHeaderBytes + 4 * (params.w_hidden.size() + params.w_out.size()));
  w.put_u32(static_cast<std::uint32_t>(params.n_input()));
  w.put_u32(static_cast<std::uint32_t>(params.n_hidden()));
  w.put_u32(static_cast<std::uint32_t>(params.n_output()));
  w.put_u32(0);
  for (float v : params.w_hidden.flat()) w.put_f32(v);
  for (float v : params.w_out.flat()) w.put_f32(v);
  return w.take();
}

ModelParams decode_model(std::span<const std::uint8_t> bytes) {
  ByteReader<FormatError> r(bytes);
  const std::uint32_t n_input = r.get_u32("n_input");
  const std::uint32_t n_hidden = r.get_u32("n_hidden");
  const std::uint32_t n_output = r.get_u32("n_output");
  if (r.get_u32("reserved") != 0) throw FormatError("model reserved field is not 0");
  if (n_input == 0 || n_hidden == 0 || n_output == 0) {
    throw FormatError("zero model dimension");
  }
  const std::uint64_t expected =
      kModelHeaderBytes +
      4 * (std::uint64_t{n_input} * n_hidden + std::uint64_t{n_hidden} * n_output);
  if (bytes.size() != expected) {
    throw FormatError("model dump has " + std::to_string(bytes.size()) +
                      " bytes, expected " + std::to_string(expected));
  }
  ModelParams p(n_input, n_hidden, n_output);
  for (auto& v : p.w_hidden.flat()) v = r.get_f32("w_hidden");
  for (auto& v : p.w_out.flat()) v = r.get_f32("w_out");
  return p;
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  write_file(path, encode_model(params));
}

ModelParams load_model(const std::filesystem::path& path) {
  return decode_model(read_file(path));
}

std::vector<GridCell> run_grid(const FedConfig& base, std::span<const double> masks,
                               GridAxis axis, std::span<const double> axis_values,
                               const SpikeRaster& train, const SpikeRaster& test,
                               const std::filesystem::path& out_dir,
                               unsigned threads) {
  if (masks.empty() || axis_values.empty()) {
    throw ConfigError("grid axes must be non-empty");
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  const std::size_t n_cells = masks.size() * axis_values.size();
  std::vector<GridCell> cells(n_cells);
  for (std::size_t i = 0; i < n_cells; ++i) {
    cells[i].mask_fraction = masks[i / axis_values.size()];
    cells[i].axis_value = axis_values[i % axis_values.size()];
  }

  auto run_cell = [&](std::size_t i) {
    GridCell& cell = cells[i];
    try {
      FedConfig cfg = base;
      cfg.mask_fraction = cell.mask_fraction;
      if (axis == GridAxis::kClients) {
        if (!(cell.axis_value >= 1.0) || cell.axis_value != std::floor(cell.axis_value)) {
          throw ConfigError("client count must be a positive integer");
        }
        cfg.n_clients = static_cast<std::uint32_t>(cell.axis_value);
      } else {
        cfg.cdp = cell.axis_value;
      }
      cfg.master_seed = base.master_seed + i;
      const auto result = run_experiment(
          cfg, train, test, out_dir / ("cell_" + std::to_string(i) + ".csv"), {});
      cell.final_train_acc = result.rounds.back().train_accuracy;
      cell.final_test_acc = result.rounds.back().test_accuracy;
      for (const auto& m : result.rounds) cell.total_uplink_bytes += m.uplink_bytes;
    } catch (const std::exception& e) {
      cell.status = std::string("error: ") + e.what();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_cells));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n_cells; i = next++) run_cell(i);
    });
  }
  for (auto& t : pool) t.join();

  std::ofstream csv(out_dir / "grid.csv", std::ios::trunc);
  if (!csv) throw IoError("cannot write " + (out_dir / "grid.csv").string());
  csv << "mask_fraction," << (axis == GridAxis::kClients ? "clients" : "cdp")
      << ",final_train_acc,final_test_acc,total_uplink_bytes,status\n";
  for (const auto& cell : cells) {
    std::string status = cell.status;
    for (char& c : status) {
      if (c == ',' || c == '\n' || c == '"') c = ';';
    }
    csv << format_double("%g", cell.mask_fraction) << ','
        << format_double("%g", cell.axis_value) << ','
        << format_double("%.6f", cell.final_train_acc) << ','
        << format_double("%.6f", cell.final_test_acc) << ','
        << cell.total_uplink_bytes << ',' << status << '\n';
  }
  if (!csv) throw IoError("write failed for " + (out_dir / "grid.csv").string());
  return cells;
}

}  // namespace flsnn
