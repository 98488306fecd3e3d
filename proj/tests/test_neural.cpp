#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "mmg/nn/checkpoint.hpp"
#include "mmg/nn/mlp.hpp"
#include "mmg/nn/policy.hpp"
#include "mmg/util/rng.hpp"

namespace nn = mmg::nn;
using mmg::util::Rng;

namespace {

/// L(theta) = c . forward(x); used as the scalar loss for gradient probes.
double probe_loss(const nn::Mlp& net, std::span<const double> x, std::span<const double> c) {
  nn::Workspace ws;
  const auto out = net.forward_cached(x, ws);
  double L = 0;
  for (std::size_t i = 0; i < c.size(); ++i) L += c[i] * out[i];
  return L;
}

}  // namespace

TEST_CASE("forward: zero weights yield the bias") {
  nn::Mlp net({3, 4, 2});
  auto b = net.biases(1);
  b[0] = 0.7;
  b[1] = -0.3;
  nn::Workspace ws;
  std::vector<double> out(2);
  net.forward(std::vector<double>{1.0, -2.0, 3.0}, out, ws);
  CHECK(out[0] == 0.7);
  CHECK(out[1] == -0.3);
}

TEST_CASE("forward: single linear identity layer") {
  nn::Mlp net({3, 3});
  auto w = net.weights(0);
  for (int i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  nn::Workspace ws;
  std::vector<double> out(3);
  const std::vector<double> x = {0.25, -1.5, 3.0};
  net.forward(x, out, ws);
  for (int i = 0; i < 3; ++i) CHECK(out[i] == x[i]);
}

TEST_CASE("forward: fixed 2-2-1 network matches hand evaluation") {
  // W1 = [[0.5,-0.25],[0.1,0.3]], b1 = [0.1,-0.2], W2 = [[0.7,-0.4]], b2 = [0.25],
  // input [0.3,-0.6], tanh hidden, linear output
  nn::Mlp net({2, 2, 1});
  auto w1 = net.weights(0);
  w1[0] = 0.5;
  w1[1] = -0.25;
  w1[2] = 0.1;
  w1[3] = 0.3;
  auto b1 = net.biases(0);
  b1[0] = 0.1;
  b1[1] = -0.2;
  auto w2 = net.weights(1);
  w2[0] = 0.7;
  w2[1] = -0.4;
  net.biases(1)[0] = 0.25;

  nn::Workspace ws;
  std::vector<double> out(1);
  net.forward(std::vector<double>{0.3, -0.6}, out, ws);
  CHECK(out[0] == doctest::Approx(0.6505144913131903).epsilon(1e-12));
}

TEST_CASE("forward throws on input size mismatch") {
  nn::Mlp net({3, 2});
  nn::Workspace ws;
  std::vector<double> out(2);
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}, out, ws), std::invalid_argument);
}

TEST_CASE("backward matches central finite differences on random 3-layer nets") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    auto net = nn::Mlp::glorot({4, 6, 5, 3}, rng);
    std::vector<double> x(4), c(3);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : c) v = rng.uniform(-1, 1);

    nn::Workspace ws;
    net.forward_cached(x, ws);
    std::vector<double> grad(net.param_count(), 0.0);
    std::vector<double> in_grad(4, 0.0);
    net.backward(c, ws, grad, in_grad);

    const double h = 1e-5;
    auto theta = net.params();
    for (std::size_t k = 0; k < net.param_count(); k += 7) {  // probe a spread of params
      const double saved = theta[k];
      theta[k] = saved + h;
      const double lp = probe_loss(net, x, c);
      theta[k] = saved - h;
      const double lm = probe_loss(net, x, c);
      theta[k] = saved;
      const double fd = (lp - lm) / (2 * h);
      CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-4).scale(1e-7));
    }
    // input gradient
    for (int k = 0; k < 4; ++k) {
      auto xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const double fd = (probe_loss(net, xp, c) - probe_loss(net, xm, c)) / (2 * h);
      CHECK(in_grad[k] == doctest::Approx(fd).epsilon(1e-4).scale(1e-7));
    }
  }
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  Rng rng(5);
  auto net = nn::Mlp::glorot({3, 4, 2}, rng);
  nn::Workspace ws;
  net.forward_cached(std::vector<double>{0.1, 0.2, 0.3}, ws);
  std::vector<double> grad(net.param_count(), 0.0);
  net.backward(std::vector<double>{0.0, 0.0}, ws, grad);
  for (const double g : grad) CHECK(g == 0.0);
}

TEST_CASE("backward: linear layer weight gradient is upstream (x) input") {
  nn::Mlp net({3, 2});
  nn::Workspace ws;
  const std::vector<double> x = {0.5, -1.0, 2.0};
  const std::vector<double> up = {2.0, -3.0};
  net.forward_cached(x, ws);
  std::vector<double> grad(net.param_count(), 0.0);
  net.backward(up, ws, grad);
  // weights first (2x3 row-major), then biases
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) CHECK(grad[r * 3 + c] == doctest::Approx(up[r] * x[c]));
  CHECK(grad[6] == doctest::Approx(up[0]));
  CHECK(grad[7] == doctest::Approx(up[1]));
}

TEST_CASE("adam: bias-corrected first step moves by ~ -lr*sign(g)") {
  const std::size_t n = 4;
  std::vector<double> params = {1.0, -2.0, 0.5, 3.0};
  const std::vector<double> grads = {0.3, -0.7, 0.0, 1.9};
  auto st = nn::AdamState::for_params(n, 1e-2);
  const auto before = params;
  nn::adam_update(st, params, grads);
  CHECK(st.step_count == 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double expected = before[i] - 1e-2 * grads[i] / (std::fabs(grads[i]) + st.epsilon);
    CHECK(params[i] == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("adam: zero gradient at zero moments leaves parameters unchanged") {
  std::vector<double> params = {1.0, -1.0};
  auto st = nn::AdamState::for_params(2, 1e-2);
  nn::adam_update(st, params, std::vector<double>{0.0, 0.0});
  CHECK(params[0] == 1.0);
  CHECK(params[1] == -1.0);
}

TEST_CASE("adam: repeated identical gradients move monotonically against the sign") {
  std::vector<double> params = {0.0, 0.0};
  const std::vector<double> grads = {0.5, -0.25};
  auto st = nn::AdamState::for_params(2, 1e-3);
  double prev0 = 0, prev1 = 0;
  for (int i = 0; i < 10; ++i) {
    nn::adam_update(st, params, grads);
    CHECK(params[0] < prev0);
    CHECK(params[1] > prev1);
    prev0 = params[0];
    prev1 = params[1];
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  std::vector<double> params = {1.0};
  auto st = nn::AdamState::for_params(1, 1e-3);
  CHECK_THROWS_AS(nn::adam_update(st, params, std::vector<double>{std::nan("")}),
                  nn::DivergenceError);
}

TEST_CASE("policy: vanishing std and zero mean give the zero action") {
  // log_std below the clamp floor -> std ~ 2e-9
  const std::vector<double> net_out = {0.0, -40.0};
  const std::vector<double> noise = {1.3};
  const auto s = nn::sample_policy(net_out, noise);
  CHECK(std::fabs(s.action[0]) < 1e-8);
  CHECK(std::isfinite(s.log_prob));
}

TEST_CASE("policy: identical noise reproduces the sample bit-for-bit") {
  const std::vector<double> net_out = {0.2, -0.5, -1.0, 0.1};
  Rng r1(77), r2(77);
  std::vector<double> n1 = {r1.normal(), r1.normal()};
  std::vector<double> n2 = {r2.normal(), r2.normal()};
  const auto s1 = nn::sample_policy(net_out, n1);
  const auto s2 = nn::sample_policy(net_out, n2);
  CHECK(s1.action == s2.action);
  CHECK(s1.log_prob == s2.log_prob);
}

TEST_CASE("policy: actions stay strictly inside (-1,1) even for saturating draws") {
  const std::vector<double> net_out = {50.0, 2.0};
  const std::vector<double> noise = {3.0};
  const auto s = nn::sample_policy(net_out, noise);
  CHECK(s.action[0] < 1.0);
  CHECK(s.action[0] > -1.0);
  CHECK(std::isfinite(s.log_prob));
}

TEST_CASE("policy: 1-d squashed density integrates to 1 by quadrature") {
  const double mean = 0.3;
  const double log_std = std::log(0.8);
  const std::vector<double> net_out = {mean, log_std};
  const double std_dev = 0.8;

  const int n = 400001;
  const double lo = -1.0 + 1e-12, hi = 1.0 - 1e-12;
  const double dx = (hi - lo) / (n - 1);
  double integral = 0;
  for (int i = 0; i < n; ++i) {
    const double a = lo + i * dx;
    const double u = std::atanh(a);
    const std::vector<double> noise = {(u - mean) / std_dev};
    const double p = std::exp(nn::sample_policy(net_out, noise).log_prob);
    integral += p * ((i == 0 || i == n - 1) ? 0.5 : 1.0);
  }
  integral *= dx;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("policy_backward matches finite differences of kappa*log_prob + f") {
  Rng rng(31);
  const int d = 3;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> net_out(2 * d), noise(d), df(d);
    for (int k = 0; k < d; ++k) {
      net_out[k] = rng.uniform(-1.5, 1.5);
      net_out[d + k] = rng.uniform(-3.0, 1.0);  // inside the clamp range
      noise[k] = rng.normal();
      df[k] = rng.uniform(-2, 2);
    }
    const double kappa = rng.uniform(0.0, 1.0);

    // loss(net_out) = kappa*log_prob + sum_k df[k]*action[k] (df frozen)
    const auto loss_at = [&](const std::vector<double>& po) {
      const auto s = nn::sample_policy(po, noise);
      double L = kappa * s.log_prob;
      for (int k = 0; k < d; ++k) L += df[k] * s.action[k];
      return L;
    };

    const auto sample = nn::sample_policy(net_out, noise);
    std::vector<double> g(2 * d);
    nn::policy_backward(net_out, noise, sample, kappa, df, g);

    const double h = 1e-6;
    for (int k = 0; k < 2 * d; ++k) {
      auto p = net_out, m = net_out;
      p[k] += h;
      m[k] -= h;
      const double fd = (loss_at(p) - loss_at(m)) / (2 * h);
      CHECK(g[k] == doctest::Approx(fd).epsilon(2e-4).scale(1e-7));
    }
  }
}

TEST_CASE("policy_backward: clamped log_std has zero gradient") {
  const std::vector<double> net_out = {0.1, -25.0};  // below kLogStdMin
  const std::vector<double> noise = {0.4};
  const auto s = nn::sample_policy(net_out, noise);
  std::vector<double> g(2);
  nn::policy_backward(net_out, noise, s, 0.7, {}, g);
  CHECK(g[1] == 0.0);
}

TEST_CASE("checkpoint round-trips networks and optimizer state bit-exactly") {
  Rng rng(8);
  auto net = nn::Mlp::glorot({5, 8, 3}, rng);
  auto st = nn::AdamState::for_params(net.param_count(), 3e-4);
  for (auto& m : st.first_moment) m = rng.normal();
  for (auto& v : st.second_moment) v = rng.uniform(0, 1);
  st.step_count = 12345;

  std::stringstream ss;
  nn::write_mlp(ss, net);
  nn::write_adam(ss, st);

  const auto net2 = nn::read_mlp(ss);
  const auto st2 = nn::read_adam(ss);

  REQUIRE(net2.layer_sizes() == net.layer_sizes());
  const auto p1 = net.params();
  const auto p2 = net2.params();
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i] == p2[i]);
  CHECK(st2.learning_rate == st.learning_rate);
  CHECK(st2.step_count == st.step_count);
  CHECK(st2.first_moment == st.first_moment);
  CHECK(st2.second_moment == st.second_moment);
}

TEST_CASE("checkpoint rejects corrupted streams") {
  std::stringstream ss("garbage");
  CHECK_THROWS_AS(nn::read_mlp(ss), nn::CheckpointError);
}
