#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmg/util/rng.hpp"

namespace mmg::nn {

/// Scratch buffers for forward/backward passes. One workspace per thread;
/// reusing it across calls avoids reallocation in the training loop.
struct Workspace {
  std::vector<std::vector<double>> acts;  // acts[l] = activations of layer l (acts[0] = input)
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

/// Dense feedforward network: tanh on hidden layers, linear output.
/// All parameters live in one contiguous buffer (per layer: row-major
/// weights, then biases), which keeps the optimizer, soft updates,
/// serialization and finite-difference probes trivial.
class Mlp {
public:
  Mlp() = default;

  /// Zero-initialized network with the given layer widths (>= 2 entries).
  explicit Mlp(std::vector<int> layer_sizes);

  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(std::vector<int> layer_sizes, util::Rng& rng);

  int in_dim() const { return sizes_.front(); }
  int out_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& layer_sizes() const { return sizes_; }

  std::size_t param_count() const { return theta_.size(); }
  std::span<double> params() { return theta_; }
  std::span<const double> params() const { return theta_; }

  /// Row-major (out x in) weight block of layer l.
  std::span<double> weights(int l);
  std::span<double> biases(int l);

  /// Plain forward pass; out must have out_dim() entries.
  void forward(std::span<const double> x, std::span<double> out, Workspace& ws) const;

  /// Forward pass that leaves per-layer activations in ws for backward().
  /// Returns a view of the output activations (valid until ws is reused).
  std::span<const double> forward_cached(std::span<const double> x, Workspace& ws) const;

  /// Backpropagates `upstream` (dL/d output) through the activations cached
  /// by the immediately preceding forward_cached() call on the same input.
  /// Parameter gradients are *accumulated* into grad_accum (param_count()
  /// entries). If input_grad is non-empty it receives dL/d input.
  void backward(std::span<const double> upstream, Workspace& ws,
                std::span<double> grad_accum, std::span<double> input_grad = {}) const;

  /// Elementwise check that all parameters are finite.
  bool params_finite() const;

private:
  std::vector<int> sizes_;
  std::vector<double> theta_;
  std::vector<std::size_t> w_off_, b_off_;  // per-layer offsets into theta_

  void init_offsets();
};

/// Adam optimizer state for one parameter vector.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step_count = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  static AdamState for_params(std::size_t n, double lr);
};

/// One Adam step. Throws DivergenceError if any gradient entry is non-finite.
void adam_update(AdamState& state, std::span<double> params, std::span<const double> grads);

/// Thrown when training produces non-finite numbers.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what, int episode = -1)
      : std::runtime_error(what), episode(episode) {}
  int episode;
};

}  // namespace mmg::nn
