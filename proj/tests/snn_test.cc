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
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.h"

#include "flsnn/dataio.h"
#include "flsnn/error.h"
#include "flsnn/rng.h"
#include "flsnn/snn.h"

namespace flsnn {
namespace {

SpikeRaster random_raster(std::size_t n, std::size_t steps, std::size_t neurons,
                          std::size_t classes, double density, std::uint64_t seed) {
  SpikeRaster r(n, steps, neurons, classes);
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    r.set_label(i, static_cast<std::uint16_t>(i % classes));
    for (auto& b : r.mutable_sample(i)) b = rng.uniform01() < density ? 1 : 0;
  }
  return r;
}

ModelParams random_params(std::size_t n_in, std::size_t n_hid, std::size_t n_out,
                          std::uint64_t seed, double scale = 1.0) {
  return init_params(n_in, n_hid, n_out, scale, seed);
}

}  // namespace

TEST_CASE("neuron config ranges") {
  NeuronConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.beta = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.theta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.lambda_sg = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("single neuron hand trace") {
  // w=2, theta=1, alpha=0, beta=1, one input spike at m=0.
  ModelParams p(1, 1, 1);
  p.w_hidden(0, 0) = 2.0f;
  const std::vector<std::uint8_t> bins = {1, 0, 0, 0, 0, 0};
  const SpikeView input{bins, 6, 1};
  NeuronConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta = 1.0;
  cfg.theta = 1.0;
  const auto tr = lif_forward(input, p, cfg);
  CHECK(tr.syn_current_h(1, 0) == 2.0f);
  CHECK(tr.v_hidden(1, 0) == 0.0f);
  CHECK(tr.v_hidden(2, 0) == 2.0f);
  CHECK(tr.spikes_hidden(2, 0) == 1.0f);
  CHECK(tr.v_hidden(3, 0) == 1.0f);
  CHECK(tr.spikes_hidden(3, 0) == 1.0f);
  CHECK(tr.v_hidden(4, 0) == 0.0f);
  CHECK(tr.spikes_hidden(4, 0) == 0.0f);
  CHECK(tr.spikes_hidden(0, 0) == 0.0f);
  CHECK(tr.spikes_hidden(1, 0) == 0.0f);
}

TEST_CASE("zero weights give a silent network") {
  const auto data = random_raster(3, 20, 8, 5, 0.5, 11);
  const ModelParams p(8, 6, 5);
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    const auto tr = lif_forward(data.sample(i), p, NeuronConfig{});
    for (auto v : tr.syn_current_h.flat()) CHECK(v == 0.0f);
    for (auto v : tr.v_hidden.flat()) CHECK(v == 0.0f);
    for (auto v : tr.spikes_hidden.flat()) CHECK(v == 0.0f);
    for (auto v : tr.v_out.flat()) CHECK(v == 0.0f);
    for (auto v : tr.logits) CHECK(v == 0.0f);
  }
}

TEST_CASE("alpha zero makes the current memoryless") {
  const auto data = random_raster(4, 30, 10, 3, 0.3, 5);
  const auto p = random_params(10, 7, 3, 9, 3.0);
  NeuronConfig cfg;
  cfg.alpha = 0.0;
  for (std::size_t s = 0; s < data.n_samples(); ++s) {
    const auto x = data.sample(s);
    const auto tr = lif_forward(x, p, cfg);
    for (std::size_t m = 0; m + 1 < x.steps; ++m) {
      for (std::size_t i = 0; i < 7; ++i) {
        float drive = 0.0f;
        for (std::size_t j = 0; j < 10; ++j) {
          if (x(m, j)) drive += p.w_hidden(i, j);
        }
        CHECK(tr.syn_current_h(m + 1, i) == drive);
      }
    }
  }

  // Perturbing an earlier input step leaves later currents untouched.
  auto x0 = data.sample(0);
  std::vector<std::uint8_t> bins(x0.bins.begin(), x0.bins.end());
  const auto base = lif_forward(SpikeView{bins, x0.steps, x0.neurons}, p, cfg);
  const std::size_t perturbed_step = 5;
  for (std::size_t j = 0; j < 10; ++j) bins[perturbed_step * 10 + j] ^= 1;
  const auto moved = lif_forward(SpikeView{bins, x0.steps, x0.neurons}, p, cfg);
  for (std::size_t m = perturbed_step + 2; m < x0.steps; ++m) {
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(base.syn_current_h(m, i) == moved.syn_current_h(m, i));
    }
  }
}

TEST_CASE("spikes are binary and the stored trace replays exactly") {
  SplitMix64 seeds(21);
  for (int trial = 0; trial < 25; ++trial) {
    const auto data = random_raster(1, 25, 12, 4, 0.4, seeds.next());
    const auto p = random_params(12, 9, 4, seeds.next(), 4.0);
    NeuronConfig cfg;
    cfg.alpha = 0.7 * seeds.uniform01();
    cfg.beta = 0.6 + 0.4 * seeds.uniform01();
    const auto x = data.sample(0);
    const auto tr = lif_forward(x, p, cfg);
    const float a = static_cast<float>(cfg.alpha);
    const float b = static_cast<float>(cfg.beta);
    const float th = static_cast<float>(cfg.theta);
    for (std::size_t m = 0; m < x.steps; ++m) {
      for (std::size_t i = 0; i < 9; ++i) {
        const float s = tr.spikes_hidden(m, i);
        REQUIRE((s == 0.0f || s == 1.0f));
        CHECK(s == (tr.v_hidden(m, i) >= th ? 1.0f : 0.0f));
        if (m + 1 == x.steps) continue;
        float drive = 0.0f;
        for (std::size_t j = 0; j < 12; ++j) {
          if (x(m, j)) drive += p.w_hidden(i, j);
        }
        CHECK(tr.syn_current_h(m + 1, i) == a * tr.syn_current_h(m, i) + drive);
        CHECK(tr.v_hidden(m + 1, i) ==
              b * tr.v_hidden(m, i) + tr.syn_current_h(m, i) - th * s);
      }
      if (m + 1 == x.steps) continue;
      for (std::size_t c = 0; c < 4; ++c) {
        float drive = 0.0f;
        for (std::size_t i = 0; i < 9; ++i) {
          if (tr.spikes_hidden(m, i) != 0.0f) drive += p.w_out(c, i);
        }
        CHECK(tr.syn_current_o(m + 1, c) == a * tr.syn_current_o(m, c) + drive);
        CHECK(tr.v_out(m + 1, c) == b * tr.v_out(m, c) + tr.syn_current_o(m, c));
      }
    }
    for (std::size_t c = 0; c < 4; ++c) {
      float best = tr.v_out(0, c);
      for (std::size_t m = 1; m < x.steps; ++m) best = std::max(best, tr.v_out(m, c));
      CHECK(tr.logits[c] == best);
      CHECK(tr.v_out(tr.peak_step[c], c) == best);
      for (std::size_t m = 0; m < tr.peak_step[c]; ++m) CHECK(tr.v_out(m, c) < best);
    }
  }
}

TEST_CASE("forward input validation") {
  const ModelParams p(4, 3, 2);
  const std::vector<std::uint8_t> wrong_width(5 * 3, 0);
  CHECK_THROWS_AS(lif_forward(SpikeView{wrong_width, 5, 3}, p, NeuronConfig{}),
                  ConfigError);
  std::vector<std::uint8_t> bins(5 * 4, 0);
  bins[7] = 2;
  CHECK_THROWS_AS(lif_forward(SpikeView{bins, 5, 4}, p, NeuronConfig{}), InputError);
}

TEST_CASE("softmax cross-entropy readout") {
  ForwardTrace<double> tr;
  tr.logits = {0, 0, 0, 0, 0};
  auto r = readout_loss(tr, 2);
  for (double p : r.probs) CHECK(p == doctest::Approx(0.2));
  CHECK(r.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(r.loss == doctest::Approx(1.6094).epsilon(1e-4));

  tr.logits = {1, 0, 0, 0, 0};
  r = readout_loss(tr, 0);
  CHECK(r.loss == doctest::Approx(-std::log(std::exp(1.0) / (std::exp(1.0) + 4.0))));
  CHECK(r.loss == doctest::Approx(0.9048).epsilon(1e-4));

  tr.logits = {200, 0, 0, 0, 0};
  r = readout_loss(tr, 0);
  CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.probs[0] == doctest::Approx(1.0));
  CHECK(std::isfinite(readout_loss(tr, 3).loss));

  CHECK_THROWS_AS(readout_loss(tr, 5), InputError);

  SplitMix64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    ForwardTrace<float> tf;
    for (int c = 0; c < 7; ++c) tf.logits.push_back(static_cast<float>(20 * rng.normal()));
    const auto rf = readout_loss(tf, 0);
    float sum = 0.0f;
    for (float p : rf.probs) sum += p;
    CHECK(std::abs(sum - 1.0f) <= 1e-6f);
    CHECK(rf.loss >= 0.0f);
  }
}

TEST_CASE("surrogate derivative") {
  CHECK(surrogate_deriv(0.0, 100.0) == 1.0);
  CHECK(surrogate_deriv(0.01, 100.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(surrogate_deriv(-0.01, 100.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(surrogate_deriv(1e9, 100.0) < 1e-20);
  CHECK(surrogate_deriv(-1e9, 100.0) < 1e-20);
  CHECK(surrogate_deriv(-1e9, 100.0) > 0.0);
}

TEST_CASE("backward with silent input is zero") {
  const std::vector<std::uint8_t> bins(10 * 6, 0);
  const SpikeView x{bins, 10, 6};
  const auto p = cast_params<double>(random_params(6, 4, 3, 8));
  const auto tr = lif_forward(x, p, NeuronConfig{});
  const auto g = backward(x, tr, 1, p, NeuronConfig{});
  for (double v : g.w_hidden.flat()) CHECK(v == 0.0);
  for (double v : g.w_out.flat()) CHECK(v == 0.0);
}

TEST_CASE("backward rejects a mismatched trace") {
  const std::vector<std::uint8_t> bins(10 * 6, 0);
  const SpikeView x{bins, 10, 6};
  const auto p = cast_params<double>(random_params(6, 4, 3, 8));
  auto tr = lif_forward(x, p, NeuronConfig{});
  tr.logits.pop_back();
  CHECK_THROWS_AS(backward(x, tr, 1, p, NeuronConfig{}), Error);
}

TEST_CASE("w_out gradient matches central differences") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const auto inst = testing::random_instance(seed, 4, 3, 3, 8);
    const auto p = inst.params();
    const auto g =
        backward(inst.view(), lif_forward(inst.view(), p, inst.cfg), inst.label, p, inst.cfg);
    const auto fd = testing::central_difference_w_out(inst, 1e-5);
    for (std::size_t i = 0; i < fd.size(); ++i) {
      CHECK(testing::relative_close(g.w_out.flat()[i], fd.flat()[i], 1e-4));
    }
  }
}

TEST_CASE("full gradient matches the unrolled chain-rule oracle") {
  int active = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = testing::random_instance(seed, 3, 2, 2, 5);
    const auto p = inst.params();
    const auto g =
        backward(inst.view(), lif_forward(inst.view(), p, inst.cfg), inst.label, p, inst.cfg);
    const auto oracle = testing::unrolled_gradient(inst);
    for (std::size_t i = 0; i < g.w_hidden.size(); ++i) {
      CHECK(std::abs(g.w_hidden.flat()[i] - oracle.w_hidden.flat()[i]) <= 1e-10);
      active += oracle.w_hidden.flat()[i] != 0.0;
    }
    for (std::size_t i = 0; i < g.w_out.size(); ++i) {
      CHECK(std::abs(g.w_out.flat()[i] - oracle.w_out.flat()[i]) <= 1e-10);
    }
  }
  // The instances must actually exercise the surrogate path.
  CHECK(active > 50);
}

TEST_CASE("adam step") {
  SUBCASE("zero gradient leaves parameters and moments alone") {
    auto p = random_params(5, 4, 3, 1);
    const auto before = p;
    AdamState<float> st(p);
    const Gradients<float> zero(5, 4, 3);
    adam_step(p, zero, st, 1e-4);
    CHECK(p == before);
    for (float v : st.m1_hidden.flat()) CHECK(v == 0.0f);
    for (float v : st.m2_out.flat()) CHECK(v == 0.0f);
    CHECK(st.step == 1);
  }
  SUBCASE("first step with unit gradient") {
    BasicModelParams<double> p(1, 1, 1);
    AdamState<double> st(p);
    Gradients<double> g(1, 1, 1);
    g.w_hidden(0, 0) = 1.0;
    adam_step(p, g, st, 1e-4);
    CHECK(p.w_hidden(0, 0) == doctest::Approx(-1e-4 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(p.w_hidden(0, 0) == doctest::Approx(-9.99999e-5).epsilon(1e-6));
    CHECK(p.w_out(0, 0) == 0.0);
  }
  SUBCASE("constant gradient approaches lr per step") {
    BasicModelParams<double> p(1, 1, 1);
    AdamState<double> st(p);
    Gradients<double> g(1, 1, 1);
    g.w_hidden(0, 0) = 0.37;
    double prev = 0.0;
    for (int i = 0; i < 1000; ++i) {
      prev = p.w_hidden(0, 0);
      adam_step(p, g, st, 1e-3);
    }
    CHECK(st.step == 1000);
    const double last = prev - p.w_hidden(0, 0);
    CHECK(std::abs(last - 1e-3) <= 0.01 * 1e-3);
  }
  SUBCASE("non-finite gradient names its layer") {
    auto p = random_params(3, 2, 2, 4);
    const auto before = p;
    AdamState<float> st(p);
    Gradients<float> g(3, 2, 2);
    g.w_out(1, 0) = std::nanf("");
    try {
      adam_step(p, g, st, 1e-3);
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("w_out") != std::string::npos);
    }
    CHECK(p == before);
    CHECK(st.step == 0);
  }
}

TEST_CASE("batch plan") {
  CHECK(batch_sizes(43, 20) == std::vector<std::size_t>{20, 20, 3});
  CHECK(batch_sizes(40, 20) == std::vector<std::size_t>{20, 20});
  CHECK(batch_sizes(5, 20) == std::vector<std::size_t>{5});
  CHECK_THROWS_AS(batch_sizes(5, 0), ConfigError);
}

TEST_CASE("train_local") {
  const auto data = random_raster(43, 15, 10, 3, 0.3, 77);
  std::vector<std::size_t> shard(data.n_samples());
  std::iota(shard.begin(), shard.end(), std::size_t{0});
  const auto start = random_params(10, 6, 3, 5, 2.0);
  NeuronConfig cfg;

  SUBCASE("zero epochs returns the start point") {
    TrainOptions opt{1e-3, 20, 0};
    CHECK(train_local(data, shard, start, cfg, opt, 1) == start);
  }
  SUBCASE("one full batch is one Adam step") {
    TrainOptions opt{1e-3, 64, 1};
    const auto out = train_local(data, shard, start, cfg, opt, 1);
    // A full-batch step averages in shuffled order; the manual reference
    // reproduces that order.
    std::vector<std::size_t> order = shard;
    SplitMix64 rng(1);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_below(i)]);
    }
    auto manual = start;
    AdamState<float> st(manual);
    adam_step(manual, batch_gradient(data, order, manual, cfg), st, 1e-3);
    CHECK(out == manual);
    CHECK_FALSE(out == start);
  }
  SUBCASE("deterministic for a fixed seed") {
    TrainOptions opt{1e-3, 20, 2};
    const auto a = train_local(data, shard, start, cfg, opt, 99);
    const auto b = train_local(data, shard, start, cfg, opt, 99);
    const auto c = train_local(data, shard, start, cfg, opt, 100);
    CHECK(a == b);
    CHECK_FALSE(a == c);
  }
  SUBCASE("empty shard") {
    CHECK_THROWS_AS(train_local(data, {}, start, cfg, TrainOptions{}, 1), InputError);
  }
}

TEST_CASE("evaluate") {
  SUBCASE("zero weights predict class zero") {
    const auto data = synth_generate(5, 20, 15, 8, 0.05, 3);
    CHECK(evaluate(data, ModelParams(20, 6, 5), NeuronConfig{}) ==
          doctest::Approx(0.2));
  }
  SUBCASE("a single sample can be memorised") {
    const auto data = synth_generate(5, 30, 20, 1, 0.05, 4);
    const std::vector<std::size_t> one = {3};
    const auto sample = data.subset(one);
    auto p = random_params(30, 12, 5, 6);
    AdamState<float> st(p);
    int steps = 0;
    while (evaluate(sample, p, NeuronConfig{}) < 1.0 && steps < 200) {
      adam_step(p, batch_gradient(sample, std::vector<std::size_t>{0}, p, NeuronConfig{}),
                st, 1e-2);
      ++steps;
    }
    CHECK(evaluate(sample, p, NeuronConfig{}) == 1.0);
    CHECK(steps <= 200);
  }
  SUBCASE("random weights score at chance") {
    const auto data = synth_generate(5, 100, 50, 20, 0.05, 7);
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      total += evaluate(data, random_params(100, 50, 5, seed), NeuronConfig{});
    }
    const double mean = total / 10.0;
    CHECK(mean >= 0.10);
    CHECK(mean <= 0.35);
  }
  SUBCASE("empty dataset") {
    CHECK_THROWS_AS(evaluate(SpikeRaster(0, 5, 20, 5), ModelParams(20, 6, 5), NeuronConfig{}),
                    InputError);
  }
}

TEST_CASE("weight initialisation statistics") {
  const auto p = init_params(400, 100, 5, 1.0, 42);
  double sum = 0.0, sq = 0.0;
  for (float v : p.w_hidden.flat()) {
    sum += v;
    sq += double(v) * v;
  }
  const double n = static_cast<double>(p.w_hidden.size());
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.002);
  CHECK(sd == doctest::Approx(1.0 / 20.0).epsilon(0.02));
  CHECK(init_params(400, 100, 5, 1.0, 42) == p);
  CHECK_THROWS_AS(init_params(0, 1, 1, 1.0, 1), ConfigError);
}

}  // namespace flsnn
