#include "mmg/nn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "mmg/kern/kernels.hpp"

namespace mmg::nn {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");
  for (const int s : sizes_) {
    if (s <= 0) throw std::invalid_argument("Mlp layer sizes must be positive");
  }
  init_offsets();
}

void Mlp::init_offsets() {
  std::size_t total = 0;
  const int L = num_layers();
  w_off_.resize(L);
  b_off_.resize(L);
  for (int l = 0; l < L; ++l) {
    w_off_[l] = total;
    total += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
    b_off_[l] = total;
    total += sizes_[l + 1];
  }
  theta_.assign(total, 0.0);
}

Mlp Mlp::glorot(std::vector<int> layer_sizes, util::Rng& rng) {
  Mlp net(std::move(layer_sizes));
  for (int l = 0; l < net.num_layers(); ++l) {
    const int fan_in = net.sizes_[l];
    const int fan_out = net.sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : net.weights(l)) w = rng.uniform(-limit, limit);
  }
  return net;
}

std::span<double> Mlp::weights(int l) {
  return {theta_.data() + w_off_[l], static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l]};
}

std::span<double> Mlp::biases(int l) {
  return {theta_.data() + b_off_[l], static_cast<std::size_t>(sizes_[l + 1])};
}

std::span<const double> Mlp::forward_cached(std::span<const double> x, Workspace& ws) const {
  if (static_cast<int>(x.size()) != in_dim())
    throw std::invalid_argument("Mlp::forward: input size mismatch");
  const auto& K = kern::active();
  const int L = num_layers();
  ws.acts.resize(L + 1);
  ws.acts[0].assign(x.begin(), x.end());
  for (int l = 0; l < L; ++l) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    auto& out = ws.acts[l + 1];
    out.resize(rows);
    K.matvec(theta_.data() + w_off_[l], ws.acts[l].data(), out.data(), rows, cols);
    K.axpy(out.data(), theta_.data() + b_off_[l], rows, 1.0);
    if (l + 1 < L) K.tanh_fwd(out.data(), out.data(), rows);
  }
  return ws.acts[L];
}

void Mlp::forward(std::span<const double> x, std::span<double> out, Workspace& ws) const {
  const auto y = forward_cached(x, ws);
  if (out.size() != y.size()) throw std::invalid_argument("Mlp::forward: output size mismatch");
  std::copy(y.begin(), y.end(), out.begin());
}

void Mlp::backward(std::span<const double> upstream, Workspace& ws,
                   std::span<double> grad_accum, std::span<double> input_grad) const {
  const int L = num_layers();
  if (static_cast<int>(ws.acts.size()) != L + 1)
    throw std::logic_error("Mlp::backward without matching forward_cached");
  if (static_cast<int>(upstream.size()) != out_dim())
    throw std::invalid_argument("Mlp::backward: upstream size mismatch");
  if (grad_accum.size() != theta_.size())
    throw std::invalid_argument("Mlp::backward: gradient buffer size mismatch");

  const auto& K = kern::active();
  ws.delta.assign(upstream.begin(), upstream.end());
  for (int l = L - 1; l >= 0; --l) {
    const int rows = sizes_[l + 1];
    const int cols = sizes_[l];
    // dW += delta (x) acts[l];  db += delta
    K.rank1_acc(grad_accum.data() + w_off_[l], ws.delta.data(), ws.acts[l].data(), rows,
                cols);
    K.axpy(grad_accum.data() + b_off_[l], ws.delta.data(), rows, 1.0);
    if (l == 0 && input_grad.empty()) break;
    ws.delta_prev.assign(cols, 0.0);
    K.matvec_t_acc(theta_.data() + w_off_[l], ws.delta.data(), ws.delta_prev.data(), rows,
                   cols);
    if (l > 0) {
      // chain through the hidden tanh
      K.tanh_bwd(ws.acts[l].data(), ws.delta_prev.data(), ws.delta_prev.data(), cols);
      std::swap(ws.delta, ws.delta_prev);
    } else {
      if (static_cast<int>(input_grad.size()) != in_dim())
        throw std::invalid_argument("Mlp::backward: input_grad size mismatch");
      std::copy(ws.delta_prev.begin(), ws.delta_prev.end(), input_grad.begin());
    }
  }
}

bool Mlp::params_finite() const {
  return std::all_of(theta_.begin(), theta_.end(), [](double v) { return std::isfinite(v); });
}

AdamState AdamState::for_params(std::size_t n, double lr) {
  AdamState st;
  st.learning_rate = lr;
  st.first_moment.assign(n, 0.0);
  st.second_moment.assign(n, 0.0);
  return st;
}

void adam_update(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw std::invalid_argument("adam_update: size mismatch");
  if (state.learning_rate <= 0.0) throw std::invalid_argument("adam_update: learning rate");
  for (const double g : grads) {
    if (!std::isfinite(g)) throw DivergenceError("adam_update: non-finite gradient");
  }
  state.step_count += 1;
  const double bc1 = 1.0 / (1.0 - std::pow(state.beta1, static_cast<double>(state.step_count)));
  const double bc2 = 1.0 / (1.0 - std::pow(state.beta2, static_cast<double>(state.step_count)));
  kern::active().adam_step(params.data(), grads.data(), state.first_moment.data(),
                           state.second_moment.data(), params.size(), state.learning_rate,
                           state.beta1, state.beta2, state.epsilon, bc1, bc2);
}

}  // namespace mmg::nn
