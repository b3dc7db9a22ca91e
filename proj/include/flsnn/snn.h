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
#ifndef FLSNN_SNN_H_
#define FLSNN_SNN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flsnn/dataio.h"
#include "flsnn/matrix.h"

namespace flsnn {

/// Discrete LIF neuron parameters shared by the hidden and readout layers.
struct NeuronConfig {
  double alpha = 0.0;       // synaptic current decay per step, [0, 1)
  double beta = 1.0;        // membrane decay per step, [0, 1]
  double theta = 1.0;       // firing threshold
  double lambda_sg = 100.0; // surrogate steepness

  /// Throws ConfigError if any field is out of range.
  void validate() const;
};

/// Input->hidden and hidden->output weights.
template <typename Real>
struct BasicModelParams {
  Matrix<Real> w_hidden;  // [n_hidden x n_input]
  Matrix<Real> w_out;     // [n_output x n_hidden]

  BasicModelParams() = default;
  BasicModelParams(std::size_t n_input, std::size_t n_hidden,
                   std::size_t n_output)
      : w_hidden(n_hidden, n_input), w_out(n_output, n_hidden) {}

  std::size_t n_input() const { return w_hidden.cols(); }
  std::size_t n_hidden() const { return w_hidden.rows(); }
  std::size_t n_output() const { return w_out.rows(); }

  bool same_shape(const BasicModelParams& o) const {
    return w_hidden.same_shape(o.w_hidden) && w_out.same_shape(o.w_out);
  }
  bool operator==(const BasicModelParams&) const = default;
};

using ModelParams = BasicModelParams<float>;

/// Loss gradients share the parameter layout.
template <typename Real>
using Gradients = BasicModelParams<Real>;

/// Everything the backward pass needs from one forward simulation.
/// All per-step arrays are [steps x neurons].
template <typename Real>
struct ForwardTrace {
  Matrix<Real> syn_current_h;
  Matrix<Real> v_hidden;
  Matrix<Real> spikes_hidden;
  Matrix<Real> syn_current_o;
  Matrix<Real> v_out;
  std::vector<Real> logits;            // max over time of v_out
  std::vector<std::size_t> peak_step;  // earliest step attaining each logit
};

/// Simulates the network on one sample. Step m's input spikes drive the
/// current at m+1; I[0] = V[0] = 0; hidden neurons reset by subtracting
/// theta after a spike; the readout layer never spikes.
template <typename Real>
ForwardTrace<Real> lif_forward(const SpikeView& input,
                               const BasicModelParams<Real>& params,
                               const NeuronConfig& cfg);

template <typename Real>
struct LossResult {
  Real loss;
  std::vector<Real> probs;
};

/// Softmax cross-entropy on the trace's logits.
template <typename Real>
LossResult<Real> readout_loss(const ForwardTrace<Real>& trace,
                              std::size_t label);

/// Fast-sigmoid surrogate for the Heaviside derivative: 1/(1+lambda|u|)^2.
template <typename Real>
Real surrogate_deriv(Real u, double lambda_sg);

/// BPTT gradient of readout_loss for one sample. The reset term is treated
/// as a constant and the max-over-time readout routes gradient through
/// peak_step only.
template <typename Real>
Gradients<Real> backward(const SpikeView& input, const ForwardTrace<Real>& trace,
                         std::size_t label, const BasicModelParams<Real>& params,
                         const NeuronConfig& cfg);

template <typename Real>
struct AdamState {
  Matrix<Real> m1_hidden, m1_out;
  Matrix<Real> m2_hidden, m2_out;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const BasicModelParams<Real>& like)
      : m1_hidden(like.w_hidden.rows(), like.w_hidden.cols()),
        m1_out(like.w_out.rows(), like.w_out.cols()),
        m2_hidden(like.w_hidden.rows(), like.w_hidden.cols()),
        m2_out(like.w_out.rows(), like.w_out.cols()) {}
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// One bias-corrected Adam update, in place. Throws NumericError naming the
/// layer if a gradient entry is not finite.
template <typename Real>
void adam_step(BasicModelParams<Real>& params, const Gradients<Real>& grads,
               AdamState<Real>& state, double lr);

struct TrainOptions {
  double learning_rate = 1e-4;
  std::size_t batch_size = 20;
  std::size_t local_epochs = 1;
};

/// Sizes of the mini-batches one epoch over n samples is cut into.
std::vector<std::size_t> batch_sizes(std::size_t n, std::size_t batch_size);

/// Mean loss gradient over the given samples, reduced in the given order.
template <typename Real>
Gradients<Real> batch_gradient(const SpikeRaster& data,
                               std::span<const std::size_t> samples,
                               const BasicModelParams<Real>& params,
                               const NeuronConfig& cfg, Real* mean_loss = nullptr);

/// Local epochs of mini-batch Adam from a fresh optimizer state. Each epoch
/// reshuffles the shard with a SplitMix64 stream seeded by shuffle_seed.
ModelParams train_local(const SpikeRaster& data,
                        std::span<const std::size_t> shard,
                        const ModelParams& start, const NeuronConfig& cfg,
                        const TrainOptions& opt, std::uint64_t shuffle_seed);

/// Class with the largest logit; ties go to the lowest index.
template <typename Real>
std::size_t predict(const SpikeView& input, const BasicModelParams<Real>& params,
                    const NeuronConfig& cfg);

/// Fraction of samples whose prediction equals the label.
double evaluate(const SpikeRaster& data, const ModelParams& params,
                const NeuronConfig& cfg);

/// Gaussian weights with std scale/sqrt(fan_in), drawn via Box-Muller from
/// a SplitMix64 stream. w_hidden is filled first, both row-major.
ModelParams init_params(std::size_t n_input, std::size_t n_hidden,
                        std::size_t n_output, double scale, std::uint64_t seed);

/// Converts between parameter precisions (used by the 64-bit checks).
template <typename To, typename From>
BasicModelParams<To> cast_params(const BasicModelParams<From>& p) {
  BasicModelParams<To> out(p.n_input(), p.n_hidden(), p.n_output());
  auto copy = [](auto src, auto dst) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<To>(src[i]);
  };
  copy(p.w_hidden.flat(), out.w_hidden.flat());
  copy(p.w_out.flat(), out.w_out.flat());
  return out;
}

}  // namespace flsnn

#endif  // FLSNN_SNN_H_
