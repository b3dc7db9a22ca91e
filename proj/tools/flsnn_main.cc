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
// Command-line front end: dataset synthesis, single federated runs, grid
// sweeps and file inspection.
//
// Exit codes: 0 success, 1 configuration or usage error, 2 data error
// (missing or malformed input files), 3 any other failure.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flsnn/bytes.h"
#include "flsnn/dataio.h"
#include "flsnn/error.h"
#include "flsnn/experiment.h"
#include "flsnn/protocol.h"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitOther = 3;

struct RunOptions {
  std::string config_path;
  std::string preset = "reference";
  std::string train_path;
  std::string test_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> mask;
  std::optional<double> cdp;
  std::optional<std::uint32_t> clients;
  std::optional<std::uint32_t> rounds;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config (FedConfig fields)");
  cmd->add_option("--preset", o.preset, "Defaults used when --config is absent")
      ->check(CLI::IsMember({"reference", "desk"}));
  cmd->add_option("--data-train", o.train_path, "Training raster (.spk)")->required();
  cmd->add_option("--data-test", o.test_path, "Test raster (.spk)")->required();
  cmd->add_option("--seed", o.seed, "Master seed (overrides config)");
  cmd->add_option("--mask", o.mask, "Mask fraction in [0, 0.99]");
  cmd->add_option("--cdp", o.cdp, "Client drop probability");
  cmd->add_option("--clients", o.clients, "Number of clients");
  cmd->add_option("--rounds", o.rounds, "Number of rounds");
}

flsnn::FedConfig resolve_config(const RunOptions& o) {
  flsnn::FedConfig cfg =
      o.preset == "desk" ? flsnn::FedConfig::desk_scale() : flsnn::FedConfig{};
  if (!o.config_path.empty()) {
    try {
      cfg = flsnn::load_config(o.config_path);
    } catch (const flsnn::IoError& e) {
      throw flsnn::ConfigError(e.what());
    }
  }
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.mask) cfg.mask_fraction = *o.mask;
  if (o.cdp) cfg.cdp = *o.cdp;
  if (o.clients) cfg.n_clients = *o.clients;
  if (o.rounds) cfg.rounds = *o.rounds;
  cfg.validate();
  return cfg;
}

struct Datasets {
  flsnn::SpikeRaster train;
  flsnn::SpikeRaster test;
};

Datasets load_datasets(const RunOptions& o) {
  return {flsnn::load_raster(o.train_path), flsnn::load_raster(o.test_path)};
}

int cmd_synth(const std::string& out, const std::string& out_test, std::size_t classes,
              std::size_t neurons, std::size_t steps, std::size_t train_per_class,
              std::size_t test_per_class, double noise, std::uint64_t seed) {
  const std::size_t test_count = out_test.empty() ? 0 : test_per_class;
  const auto all = flsnn::synth_generate(classes, neurons, steps,
                                         train_per_class + test_count, noise, seed);
  auto [train, test] = flsnn::split_head_per_class(all, train_per_class);
  flsnn::save_raster(train, out);
  std::cout << "wrote " << train.n_samples() << " samples to " << out << '\n';
  if (!out_test.empty()) {
    flsnn::save_raster(test, out_test);
    std::cout << "wrote " << test.n_samples() << " samples to " << out_test << '\n';
  }
  return 0;
}

int cmd_train(const RunOptions& o, std::string model_out) {
  const auto cfg = resolve_config(o);
  const auto data = load_datasets(o);
  if (model_out.empty()) model_out = o.out_path + ".model";
  const auto result = flsnn::run_experiment(cfg, data.train, data.test, o.out_path,
                                            model_out);
  const auto& last = result.rounds.back();
  std::cout << "rounds=" << result.rounds.size() << " train_acc=" << last.train_accuracy
            << " test_acc=" << last.test_accuracy << '\n';
  return 0;
}

int cmd_grid(const RunOptions& o, const std::vector<double>& masks,
             const std::vector<double>& client_list, const std::vector<double>& cdp_list,
             unsigned threads) {
  if (client_list.empty() == cdp_list.empty()) {
    throw flsnn::ConfigError("give exactly one of --client-list or --cdp-list");
  }
  const auto cfg = resolve_config(o);
  const auto data = load_datasets(o);
  const bool by_clients = !client_list.empty();
  const auto cells = flsnn::run_grid(
      cfg, masks, by_clients ? flsnn::GridAxis::kClients : flsnn::GridAxis::kCdp,
      by_clients ? client_list : cdp_list, data.train, data.test, o.out_path, threads);
  std::size_t failed = 0;
  for (const auto& c : cells) failed += c.status != "ok";
  std::cout << cells.size() << " cells, " << failed << " failed; see "
            << o.out_path << "/grid.csv\n";
  return 0;
}

int cmd_inspect(const std::string& path) {
  const auto bytes = flsnn::read_file(path);
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "SPK1")) {
    const auto r = flsnn::decode_raster(bytes);
    std::cout << "format: SPK1 raster\n"
              << "n_samples: " << r.n_samples() << "\nsteps: " << r.steps()
              << "\nn_neurons: " << r.n_neurons() << "\nn_classes: " << r.n_classes()
              << '\n';
    std::map<std::uint16_t, std::size_t> counts;
    for (auto l : r.labels()) ++counts[l];
    for (const auto& [label, n] : counts) {
      std::cout << "label " << label << ": " << n << '\n';
    }
    return 0;
  }
  if (bytes.size() >= 4 && std::equal(bytes.begin(), bytes.begin() + 4, "FSU1")) {
    const auto u = flsnn::deserialize(bytes);
    std::cout << "format: FSU1 masked update\n"
              << "client_id: " << u.client_id << "\nround: " << u.round
              << "\nseed: " << u.seed << "\nmask_fraction: " << u.mask_fraction
              << "\nlayer_count: " << u.values.size() << '\n';
    for (std::size_t l = 0; l < u.values.size(); ++l) {
      std::cout << "layer " << l << " values: " << u.values[l].size() << '\n';
    }
    std::cout << "bytes: " << flsnn::uplink_bytes(u) << '\n';
    return 0;
  }
  throw flsnn::FormatError(path + ": unrecognised file magic");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated training of spiking networks with masked updates"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic spike dataset");
  std::string synth_out, synth_out_test;
  std::size_t classes = 5, neurons = 100, steps = 50, train_per_class = 60,
              test_per_class = 20;
  double noise = 0.05;
  std::uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "Training raster path")->required();
  synth->add_option("--out-test", synth_out_test, "Test raster path");
  synth->add_option("--classes", classes)->check(CLI::PositiveNumber);
  synth->add_option("--neurons", neurons)->check(CLI::PositiveNumber);
  synth->add_option("--steps", steps)->check(CLI::PositiveNumber);
  synth->add_option("--train-per-class", train_per_class)->check(CLI::PositiveNumber);
  synth->add_option("--test-per-class", test_per_class)->check(CLI::PositiveNumber);
  synth->add_option("--noise", noise, "Bin flip probability in [0, 0.5)");
  synth->add_option("--seed", synth_seed);

  RunOptions train_opts;
  std::string model_out;
  auto* train = app.add_subcommand("train", "Run one federated experiment");
  add_run_options(train, train_opts);
  train->add_option("--out", train_opts.out_path, "Metrics CSV path")->required();
  train->add_option("--model-out", model_out, "Final model dump (default <out>.model)");

  RunOptions grid_opts;
  std::vector<double> masks, client_list, cdp_list;
  unsigned threads = 0;
  auto* grid = app.add_subcommand("grid", "Sweep mask fraction against clients or cdp");
  add_run_options(grid, grid_opts);
  grid->add_option("--out", grid_opts.out_path, "Output directory")->required();
  grid->add_option("--mask-list", masks, "Comma-separated mask fractions")
      ->required()
      ->delimiter(',');
  grid->add_option("--client-list", client_list, "Comma-separated client counts")
      ->delimiter(',');
  grid->add_option("--cdp-list", cdp_list, "Comma-separated drop probabilities")
      ->delimiter(',');
  grid->add_option("--threads", threads, "Worker threads (0 = all cores)");

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "Print the header of a .spk or update file");
  inspect->add_option("file", inspect_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(synth_out, synth_out_test, classes, neurons, steps,
                       train_per_class, test_per_class, noise, synth_seed);
    }
    if (train->parsed()) return cmd_train(train_opts, model_out);
    if (grid->parsed()) return cmd_grid(grid_opts, masks, client_list, cdp_list, threads);
    if (inspect->parsed()) return cmd_inspect(inspect_path);
  } catch (const flsnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const flsnn::IoError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const flsnn::FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const flsnn::CodecError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const flsnn::InputError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOther;
}
