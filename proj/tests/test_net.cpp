#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "loadfc/errors.hpp"
#include "loadfc/net.hpp"

using namespace loadfc;

namespace {

NetConfig small_config() {
  NetConfig c;
  c.window = 16;
  c.kernel_size = 2;
  c.dilations = {1, 2};
  c.channels = 4;
  c.dense_hidden = 8;
  c.dropout = 0.2;
  c.seed = 7;
  return c;
}

std::vector<double> random_window(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> w(n);
  for (auto& v : w) v = d(rng);
  return w;
}

// Direct-summation oracle for one-channel causal convolution.
std::vector<double> conv_oracle(const std::vector<double>& x, double w_prev, double w_cur, std::size_t dilation) {
  std::vector<double> out(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double prev = t >= dilation ? x[t - dilation] : 0.0;
    out[t] = w_prev * prev + w_cur * x[t];
  }
  return out;
}

}  // namespace

TEST_CASE("causal conv: identity kernel reproduces the input") {
  const std::vector<double> x{0.5, -1.0, 2.0, 3.5, 4.0};
  const std::vector<double> w{0.0, 1.0};
  const std::vector<double> b{0.0};
  CHECK(causal_conv_forward(x, 1, w, b, 2, 1) == x);
}

TEST_CASE("causal conv: worked examples match direct summation") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> w{1, 1};
  const std::vector<double> b{0};
  const auto d1 = causal_conv_forward(x, 1, w, b, 2, 1);
  const auto d2 = causal_conv_forward(x, 1, w, b, 2, 2);
  CHECK(d1 == conv_oracle(x, 1, 1, 1));
  CHECK(d2 == conv_oracle(x, 1, 1, 2));
  CHECK(d1 == std::vector<double>{1, 3, 5, 7});
  CHECK(d2 == std::vector<double>{1, 2, 4, 6});
}

TEST_CASE("causal conv: multi-channel output matches a brute-force sum") {
  std::mt19937_64 rng(3);
  const std::size_t T = 12, cin = 3, cout = 2, K = 3, d = 2;
  const auto x = random_window(T * cin, rng);
  const auto w = random_window(cout * K * cin, rng);
  const auto b = random_window(cout, rng);
  const auto y = causal_conv_forward(x, cin, w, b, K, d);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < cout; ++c) {
      double acc = b[c];
      for (std::size_t k = 0; k < K; ++k) {
        const long src = static_cast<long>(t) - static_cast<long>(d * (K - 1 - k));
        if (src < 0) continue;
        for (std::size_t ci = 0; ci < cin; ++ci) acc += w[(c * K + k) * cin + ci] * x[static_cast<std::size_t>(src) * cin + ci];
      }
      CHECK(y[t * cout + c] == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("config: receptive field and validation") {
  NetConfig c;
  CHECK(c.receptive_field() == 256);
  CHECK_NOTHROW(c.validate());
  c.window = 255;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = NetConfig{};
  c.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  const auto round = net_config_from_json(net_config_to_json(small_config()));
  CHECK(round.dilations == small_config().dilations);
  CHECK(round.channels == 4);
}

TEST_CASE("forward: zero network predicts zero") {
  auto net = ResidualNet::zeros(small_config());
  std::mt19937_64 rng(1);
  const auto w = random_window(16, rng);
  CHECK(forward(net, w, false) == 0.0);
  // With normalisation the zero head maps to the stored mean.
  auto shifted = ResidualNet::zeros(small_config(), 5.0, 2.0);
  CHECK(forward(shifted, w, false) == 5.0);
}

TEST_CASE("forward: inference is deterministic and shape-checked") {
  ResidualNet net(small_config(), 0.0, 1.0, 11);
  std::mt19937_64 rng(2);
  const auto w = random_window(16, rng);
  CHECK(forward(net, w, false) == forward(net, w, false));
  const std::vector<double> short_window(15, 0.0);
  CHECK_THROWS_AS(forward(net, short_window, false), ShapeError);
  CHECK_THROWS_AS(forward(net, w, true), InvalidStateError);  // dropout needs an rng
}

TEST_CASE("forward: entries older than the receptive field are inert") {
  auto cfg = small_config();  // RF = 4 inside a window of 16
  cfg.channels = 8;
  cfg.dense_hidden = 16;
  ResidualNet net(cfg, 0.0, 1.0, 5);
  std::mt19937_64 rng(9);
  auto w = random_window(16, rng);
  const double base = forward(net, w, false);
  REQUIRE(base != 0.0);
  for (std::size_t i = 0; i + cfg.receptive_field() < cfg.window; ++i) {
    auto v = w;
    v[i] += 100.0;
    CHECK(forward(net, v, false) == base);
  }
  auto v = w;
  v[15] += 1.0;
  CHECK(forward(net, v, false) != base);
}

TEST_CASE("conv stack: future inputs never change earlier outputs") {
  ResidualNet net(small_config(), 0.0, 1.0, 5);
  std::mt19937_64 rng(4);
  const auto w = random_window(16, rng);
  const auto base = conv_stack_outputs(net, w);
  for (std::size_t t = 0; t < 16; ++t) {
    auto v = w;
    v[t] -= 3.0;
    const auto out = conv_stack_outputs(net, v);
    for (std::size_t l = 0; l < out.size(); ++l) {
      for (std::size_t p = 0; p < t; ++p) {
        for (std::size_t c = 0; c < 4; ++c) CHECK(out[l][p * 4 + c] == base[l][p * 4 + c]);
      }
    }
  }
}

TEST_CASE("backward: matches central finite differences") {
  auto cfg = small_config();
  ResidualNet net(cfg, 0.3, 1.7, 21);
  std::mt19937_64 rng(8);
  const auto w = random_window(16, rng, 1.5);
  const double target = 0.4;

  ForwardCache cache;
  std::mt19937_64 drop(99);
  const double out = forward(net, w, true, &drop, &cache);
  const auto grads = backward(net, cache, 2.0 * (out - target));
  const auto masks = cache.masks;
  REQUIRE_FALSE(masks.empty());

  auto loss = [&](const ResidualNet& n) {
    const double o = forward_with_masks(n, w, masks);
    return (o - target) * (o - target);
  };
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    ResidualNet plus = net;
    ResidualNet minus = net;
    plus.mutable_params()[i] += h;
    minus.mutable_params()[i] -= h;
    const double numeric = (loss(plus) - loss(minus)) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grads[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - grads[i]) / denom);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("backward: zero loss gradient gives zero parameter gradients") {
  ResidualNet net(small_config(), 0.0, 1.0, 3);
  std::mt19937_64 rng(1);
  const auto w = random_window(16, rng);
  ForwardCache cache;
  std::mt19937_64 drop(2);
  forward(net, w, true, &drop, &cache);
  for (double g : backward(net, cache, 0.0)) CHECK(g == 0.0);
}

TEST_CASE("backward: scaling layer multiplies the gradient by the stored std") {
  ResidualNet net(small_config(), 1.0, 3.5, 3);
  CHECK(scaling_input_gradient(net, 2.0) == 7.0);
  // The head bias sees exactly that gradient.
  std::mt19937_64 rng(1);
  const auto w = random_window(16, rng);
  ForwardCache cache;
  forward(net, w, false, nullptr, &cache);
  const auto g = backward(net, cache, 2.0);
  CHECK(g[net.head().bias] == 7.0);
}

TEST_CASE("backward: rejects missing or stale caches") {
  ResidualNet net(small_config(), 0.0, 1.0, 3);
  ForwardCache empty;
  CHECK_THROWS_AS(backward(net, empty, 1.0), InvalidStateError);

  std::mt19937_64 rng(1);
  const auto w = random_window(16, rng);
  ForwardCache cache;
  forward(net, w, false, nullptr, &cache);
  net.mutable_params()[0] += 0.1;
  CHECK_THROWS_AS(backward(net, cache, 1.0), InvalidStateError);
}

TEST_CASE("dropout: inverted scaling keeps the train-mode mean near inference") {
  auto cfg = small_config();
  ResidualNet net(cfg, 0.0, 1.0, 13);
  std::mt19937_64 rng(6);
  const auto w = random_window(16, rng);
  // Only the layer feeding the dense head is linear in its mask; compare the
  // mean of its last-step output against inference.
  ForwardCache cache;
  forward(net, w, false, nullptr, &cache);
  const auto inference = cache.out.back();
  const std::size_t last = (cfg.window - 1) * cfg.channels;
  std::vector<double> sum(cfg.channels, 0.0);
  const int draws = 20000;
  std::mt19937_64 drop(77);
  for (int i = 0; i < draws; ++i) {
    ForwardCache c;
    forward(net, w, true, &drop, &c);
    // Undo the lower layers' masks by replaying them as all-keep.
    auto masks = c.masks;
    for (std::size_t l = 0; l + 1 < masks.size(); ++l) std::fill(masks[l].begin(), masks[l].end(), 1.0);
    ForwardCache r;
    forward_with_masks(net, w, masks, &r);
    for (std::size_t ch = 0; ch < cfg.channels; ++ch) sum[ch] += r.out.back()[last + ch];
  }
  for (std::size_t ch = 0; ch < cfg.channels; ++ch) {
    const double mean = sum[ch] / draws;
    const double expected = inference[last + ch];
    // Bernoulli(0.8) scaled by 1.25 has std 0.5 per draw.
    CHECK(std::abs(mean - expected) <= 5.0 * 0.5 * std::abs(expected) / std::sqrt(draws) + 1e-12);
  }
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  std::vector<double> p{1.0, -2.0, 3.0, 0.5, 7.0};
  const std::vector<double> g(5, 0.0);
  auto st = AdamState::for_params(5, NetConfig{});
  adam_step(p, g, st);
  CHECK(p == std::vector<double>{1.0, -2.0, 3.0, 0.5, 7.0});
  CHECK(st.step == 1);
}

TEST_CASE("adam: first step moves each parameter by about the learning rate") {
  for (double g0 : {1e-3, 0.5, 20.0, -4000.0}) {
    std::vector<double> p{0.0};
    const std::vector<double> g{g0};
    auto st = AdamState::for_params(1, NetConfig{});
    adam_step(p, g, st);
    // m_hat = g, v_hat = g^2 at step 1, so the step is lr * |g| / (|g| + eps).
    const double expected = -1e-3 * g0 / (std::abs(g0) + 1e-8);
    CHECK(p[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(p[0]) == doctest::Approx(1e-3).epsilon(1e-4));
  }
}

TEST_CASE("adam: deterministic and rejects non-finite gradients") {
  std::vector<double> a{1, 2, 3}, b{1, 2, 3};
  const std::vector<double> g{0.1, -0.2, 0.3};
  auto sa = AdamState::for_params(3, NetConfig{});
  auto sb = AdamState::for_params(3, NetConfig{});
  adam_step(a, g, sa);
  adam_step(b, g, sb);
  CHECK(a == b);
  CHECK(sa.m == sb.m);
  const std::vector<double> bad{0.1, NAN, 0.0};
  CHECK_THROWS_AS(adam_step(a, bad, sa), DivergenceError);
}

TEST_CASE("serialisation round trip preserves predictions") {
  ResidualNet net(small_config(), 2.0, 3.0, 17);
  const auto copy = net_from_json(net_to_json(net));
  std::mt19937_64 rng(1);
  const auto w = random_window(16, rng);
  CHECK(forward(copy, w, false) == forward(net, w, false));
  CHECK(copy.norm_std() == 3.0);
}

TEST_CASE("normalisation round trip") {
  ResidualNet net(small_config(), -123.25, 987.5, 1);
  for (double x : {-1e5, -3.0, 0.0, 42.0, 7.5e4}) {
    CHECK(net.denormalize(net.normalize(x)) == doctest::Approx(x).epsilon(1e-12));
  }
}
