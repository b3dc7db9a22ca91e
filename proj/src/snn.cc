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
#include "flsnn/snn.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "flsnn/error.h"
#include "flsnn/rng.h"

namespace flsnn {

void NeuronConfig::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in [0, 1), got " + std::to_string(alpha));
  }
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("beta must lie in [0, 1], got " + std::to_string(beta));
  }
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw ConfigError("theta must be positive, got " + std::to_string(theta));
  }
  if (!(lambda_sg > 0.0) || !std::isfinite(lambda_sg)) {
    throw ConfigError("lambda_sg must be positive, got " +
                      std::to_string(lambda_sg));
  }
}

namespace {

std::vector<std::size_t> active_inputs(const SpikeView& input, std::size_t step) {
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < input.neurons; ++j) {
    if (input(step, j) != 0) active.push_back(j);
  }
  return active;
}

void check_input(const SpikeView& input, std::size_t n_input) {
  if (input.neurons != n_input) {
    throw ConfigError("input has " + std::to_string(input.neurons) +
                      " neurons but the model expects " + std::to_string(n_input));
  }
  if (input.steps == 0 || input.bins.size() != input.steps * input.neurons) {
    throw ConfigError("input view size does not match its dimensions");
  }
  for (std::size_t i = 0; i < input.bins.size(); ++i) {
    if (input.bins[i] > 1) {
      throw InputError("non-binary spike value " + std::to_string(input.bins[i]) +
                       " at bin " + std::to_string(i));
    }
  }
}

}  // namespace

template <typename Real>
ForwardTrace<Real> lif_forward(const SpikeView& input,
                               const BasicModelParams<Real>& params,
                               const NeuronConfig& cfg) {
  check_input(input, params.n_input());
  if (params.w_out.cols() != params.n_hidden()) {
    throw ConfigError("w_out columns do not match the hidden layer size");
  }
  const std::size_t steps = input.steps;
  const std::size_t n_hidden = params.n_hidden();
  const std::size_t n_out = params.n_output();
  const Real alpha = static_cast<Real>(cfg.alpha);
  const Real beta = static_cast<Real>(cfg.beta);
  const Real theta = static_cast<Real>(cfg.theta);

  ForwardTrace<Real> tr;
  tr.syn_current_h = Matrix<Real>(steps, n_hidden);
  tr.v_hidden = Matrix<Real>(steps, n_hidden);
  tr.spikes_hidden = Matrix<Real>(steps, n_hidden);
  tr.syn_current_o = Matrix<Real>(steps, n_out);
  tr.v_out = Matrix<Real>(steps, n_out);

  for (std::size_t m = 0; m < steps; ++m) {
    for (std::size_t i = 0; i < n_hidden; ++i) {
      tr.spikes_hidden(m, i) = tr.v_hidden(m, i) >= theta ? Real{1} : Real{0};
    }
    if (m + 1 == steps) break;

    const auto active = active_inputs(input, m);
    for (std::size_t i = 0; i < n_hidden; ++i) {
      const auto w = params.w_hidden.row(i);
      Real drive{0};
      for (std::size_t j : active) drive += w[j];
      tr.syn_current_h(m + 1, i) = alpha * tr.syn_current_h(m, i) + drive;
      tr.v_hidden(m + 1, i) = beta * tr.v_hidden(m, i) + tr.syn_current_h(m, i) -
                              theta * tr.spikes_hidden(m, i);
    }
    for (std::size_t c = 0; c < n_out; ++c) {
      const auto u = params.w_out.row(c);
      Real drive{0};
      for (std::size_t i = 0; i < n_hidden; ++i) {
        if (tr.spikes_hidden(m, i) != Real{0}) drive += u[i];
      }
      tr.syn_current_o(m + 1, c) = alpha * tr.syn_current_o(m, c) + drive;
      tr.v_out(m + 1, c) = beta * tr.v_out(m, c) + tr.syn_current_o(m, c);
    }
  }

  tr.logits.assign(n_out, Real{0});
  tr.peak_step.assign(n_out, 0);
  for (std::size_t c = 0; c < n_out; ++c) {
    Real best = tr.v_out(0, c);
    std::size_t best_step = 0;
    for (std::size_t m = 1; m < steps; ++m) {
      if (tr.v_out(m, c) > best) {
        best = tr.v_out(m, c);
        best_step = m;
      }
    }
    tr.logits[c] = best;
    tr.peak_step[c] = best_step;
  }
  return tr;
}

template <typename Real>
LossResult<Real> readout_loss(const ForwardTrace<Real>& trace,
                              std::size_t label) {
  const auto& logits = trace.logits;
  if (label >= logits.size()) {
    throw InputError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const Real top = *std::max_element(logits.begin(), logits.end());
  LossResult<Real> out;
  out.probs.resize(logits.size());
  Real total{0};
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out.probs[c] = std::exp(logits[c] - top);
    total += out.probs[c];
  }
  for (auto& p : out.probs) p /= total;
  // log-sum-exp form stays finite when probs[label] underflows.
  out.loss = std::log(total) - (logits[label] - top);
  return out;
}

template <typename Real>
Real surrogate_deriv(Real u, double lambda_sg) {
  const Real denom = Real{1} + static_cast<Real>(lambda_sg) * std::abs(u);
  return Real{1} / (denom * denom);
}

template <typename Real>
Gradients<Real> backward(const SpikeView& input, const ForwardTrace<Real>& trace,
                         std::size_t label, const BasicModelParams<Real>& params,
                         const NeuronConfig& cfg) {
  const std::size_t steps = input.steps;
  const std::size_t n_hidden = params.n_hidden();
  const std::size_t n_out = params.n_output();
  if (trace.v_hidden.rows() != steps || trace.v_hidden.cols() != n_hidden ||
      trace.v_out.rows() != steps || trace.v_out.cols() != n_out ||
      trace.logits.size() != n_out || input.neurons != params.n_input()) {
    throw Error("internal: forward trace does not match input and parameters");
  }
  const Real alpha = static_cast<Real>(cfg.alpha);
  const Real beta = static_cast<Real>(cfg.beta);
  const Real theta = static_cast<Real>(cfg.theta);

  const auto loss = readout_loss(trace, label);
  std::vector<Real> dlogits = loss.probs;
  dlogits[label] -= Real{1};

  Gradients<Real> grads(params.n_input(), n_hidden, n_out);

  // Adjoints at step m+1 (next) while computing those at step m (cur).
  std::vector<Real> next_vo(n_out, Real{0}), next_io(n_out, Real{0});
  std::vector<Real> next_vh(n_hidden, Real{0}), next_ih(n_hidden, Real{0});
  std::vector<Real> cur_vo(n_out), cur_io(n_out), cur_vh(n_hidden), cur_ih(n_hidden);
  std::vector<Real> spike_adj(n_hidden);

  for (std::size_t step = steps; step-- > 0;) {
    const bool has_next = step + 1 < steps;

    // Readout layer: V_o[m+1] = beta V_o[m] + I_o[m];
    //                I_o[m+1] = alpha I_o[m] + U S[m].
    for (std::size_t c = 0; c < n_out; ++c) {
      cur_vo[c] = has_next ? beta * next_vo[c] : Real{0};
      if (trace.peak_step[c] == step) cur_vo[c] += dlogits[c];
      cur_io[c] = has_next ? alpha * next_io[c] + next_vo[c] : Real{0};
    }
    std::fill(spike_adj.begin(), spike_adj.end(), Real{0});
    if (has_next) {
      for (std::size_t c = 0; c < n_out; ++c) {
        const Real g = next_io[c];
        if (g == Real{0}) continue;
        auto gu = grads.w_out.row(c);
        const auto u = params.w_out.row(c);
        for (std::size_t i = 0; i < n_hidden; ++i) {
          gu[i] += g * trace.spikes_hidden(step, i);
          spike_adj[i] += u[i] * g;
        }
      }
    }

    // Hidden layer: S[m] = H(V[m] - theta); V[m+1] = beta V[m] + I[m] - theta S[m]
    // with the reset held constant; I[m+1] = alpha I[m] + W x[m].
    for (std::size_t i = 0; i < n_hidden; ++i) {
      cur_vh[i] = (has_next ? beta * next_vh[i] : Real{0}) +
                  spike_adj[i] *
                      surrogate_deriv(trace.v_hidden(step, i) - theta, cfg.lambda_sg);
      cur_ih[i] = has_next ? alpha * next_ih[i] + next_vh[i] : Real{0};
    }
    if (has_next) {
      const auto active = active_inputs(input, step);
      for (std::size_t i = 0; i < n_hidden; ++i) {
        const Real g = next_ih[i];
        if (g == Real{0}) continue;
        auto gw = grads.w_hidden.row(i);
        for (std::size_t j : active) gw[j] += g;
      }
    }

    std::swap(cur_vo, next_vo);
    std::swap(cur_io, next_io);
    std::swap(cur_vh, next_vh);
    std::swap(cur_ih, next_ih);
  }
  return grads;
}

namespace {

template <typename Real>
void require_finite(const Matrix<Real>& g, const char* layer) {
  const auto flat = g.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (!std::isfinite(static_cast<double>(flat[i]))) {
      throw NumericError(std::string("non-finite gradient in ") + layer +
                         " at flat index " + std::to_string(i));
    }
  }
}

template <typename Real>
void adam_layer(Matrix<Real>& w, const Matrix<Real>& g, Matrix<Real>& m1,
                Matrix<Real>& m2, double lr, double bias1, double bias2) {
  auto wf = w.flat();
  auto gf = g.flat();
  auto m1f = m1.flat();
  auto m2f = m2.flat();
  const Real b1 = static_cast<Real>(kAdamBeta1);
  const Real b2 = static_cast<Real>(kAdamBeta2);
  const Real c1 = static_cast<Real>(bias1);
  const Real c2 = static_cast<Real>(bias2);
  const Real rate = static_cast<Real>(lr);
  const Real eps = static_cast<Real>(kAdamEpsilon);
  for (std::size_t i = 0; i < gf.size(); ++i) {
    m1f[i] = b1 * m1f[i] + (Real{1} - b1) * gf[i];
    m2f[i] = b2 * m2f[i] + (Real{1} - b2) * gf[i] * gf[i];
    const Real m_hat = m1f[i] / c1;
    const Real v_hat = m2f[i] / c2;
    wf[i] -= rate * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace

template <typename Real>
void adam_step(BasicModelParams<Real>& params, const Gradients<Real>& grads,
               AdamState<Real>& state, double lr) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!params.same_shape(grads) || !state.m1_hidden.same_shape(params.w_hidden) ||
      !state.m1_out.same_shape(params.w_out)) {
    throw ConfigError("adam_step: parameter, gradient and state shapes differ");
  }
  require_finite(grads.w_hidden, "w_hidden");
  require_finite(grads.w_out, "w_out");
  const std::uint64_t t = state.step + 1;
  const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  adam_layer(params.w_hidden, grads.w_hidden, state.m1_hidden, state.m2_hidden,
             lr, bias1, bias2);
  adam_layer(params.w_out, grads.w_out, state.m1_out, state.m2_out, lr, bias1,
             bias2);
  state.step = t;
}

std::vector<std::size_t> batch_sizes(std::size_t n, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  std::vector<std::size_t> sizes;
  for (std::size_t start = 0; start < n; start += batch_size) {
    sizes.push_back(std::min(batch_size, n - start));
  }
  return sizes;
}

template <typename Real>
Gradients<Real> batch_gradient(const SpikeRaster& data,
                               std::span<const std::size_t> samples,
                               const BasicModelParams<Real>& params,
                               const NeuronConfig& cfg, Real* mean_loss) {
  if (samples.empty()) throw InputError("empty batch");
  Gradients<Real> sum(params.n_input(), params.n_hidden(), params.n_output());
  Real loss_sum{0};
  for (std::size_t idx : samples) {
    const auto input = data.sample(idx);
    const auto trace = lif_forward(input, params, cfg);
    const auto g = backward(input, trace, data.label(idx), params, cfg);
    if (mean_loss != nullptr) loss_sum += readout_loss(trace, data.label(idx)).loss;
    auto add = [](auto dst, auto src) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };
    add(sum.w_hidden.flat(), g.w_hidden.flat());
    add(sum.w_out.flat(), g.w_out.flat());
  }
  const Real n = static_cast<Real>(samples.size());
  for (auto& v : sum.w_hidden.flat()) v /= n;
  for (auto& v : sum.w_out.flat()) v /= n;
  if (mean_loss != nullptr) *mean_loss = loss_sum / n;
  return sum;
}

ModelParams train_local(const SpikeRaster& data,
                        std::span<const std::size_t> shard,
                        const ModelParams& start, const NeuronConfig& cfg,
                        const TrainOptions& opt, std::uint64_t shuffle_seed) {
  if (shard.empty()) throw InputError("train_local: empty shard");
  if (!(opt.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  const auto sizes = batch_sizes(shard.size(), opt.batch_size);

  ModelParams params = start;
  AdamState<float> adam(params);
  SplitMix64 rng(shuffle_seed);
  std::vector<std::size_t> order(shard.begin(), shard.end());
  for (std::size_t epoch = 0; epoch < opt.local_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_below(i)]);
    }
    std::size_t offset = 0;
    for (std::size_t size : sizes) {
      const auto batch = std::span(order).subspan(offset, size);
      adam_step(params, batch_gradient(data, batch, params, cfg), adam,
                opt.learning_rate);
      offset += size;
    }
  }
  return params;
}

template <typename Real>
std::size_t predict(const SpikeView& input, const BasicModelParams<Real>& params,
                    const NeuronConfig& cfg) {
  const auto trace = lif_forward(input, params, cfg);
  // max_element returns the first maximum.
  return static_cast<std::size_t>(
      std::max_element(trace.logits.begin(), trace.logits.end()) -
      trace.logits.begin());
}

double evaluate(const SpikeRaster& data, const ModelParams& params,
                const NeuronConfig& cfg) {
  if (data.n_samples() == 0) throw InputError("evaluate: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.n_samples(); ++i) {
    if (predict(data.sample(i), params, cfg) == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.n_samples());
}

ModelParams init_params(std::size_t n_input, std::size_t n_hidden,
                        std::size_t n_output, double scale, std::uint64_t seed) {
  if (n_input == 0 || n_hidden == 0 || n_output == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  ModelParams p(n_input, n_hidden, n_output);
  SplitMix64 rng(seed);
  const double std_h = scale / std::sqrt(static_cast<double>(n_input));
  const double std_o = scale / std::sqrt(static_cast<double>(n_hidden));
  for (auto& w : p.w_hidden.flat()) w = static_cast<float>(std_h * rng.normal());
  for (auto& w : p.w_out.flat()) w = static_cast<float>(std_o * rng.normal());
  return p;
}

#define FLSNN_INSTANTIATE(Real)                                                  \
  template ForwardTrace<Real> lif_forward(const SpikeView&,                      \
                                          const BasicModelParams<Real>&,         \
                                          const NeuronConfig&);                  \
  template LossResult<Real> readout_loss(const ForwardTrace<Real>&, std::size_t); \
  template Real surrogate_deriv(Real, double);                                   \
  template Gradients<Real> backward(const SpikeView&, const ForwardTrace<Real>&, \
                                    std::size_t, const BasicModelParams<Real>&,  \
                                    const NeuronConfig&);                        \
  template void adam_step(BasicModelParams<Real>&, const Gradients<Real>&,       \
                          AdamState<Real>&, double);                             \
  template Gradients<Real> batch_gradient(const SpikeRaster&,                    \
                                          std::span<const std::size_t>,          \
                                          const BasicModelParams<Real>&,         \
                                          const NeuronConfig&, Real*);           \
  template std::size_t predict(const SpikeView&, const BasicModelParams<Real>&,  \
                               const NeuronConfig&);

FLSNN_INSTANTIATE(float)
FLSNN_INSTANTIATE(double)

#undef FLSNN_INSTANTIATE

}  // namespace flsnn
