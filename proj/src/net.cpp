#include "loadfc/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json_util.hpp"
#include "loadfc/csv.hpp"
#include "loadfc/errors.hpp"
#include "loadfc/kernels.hpp"

namespace loadfc {

namespace {

constexpr int kNetFormatVersion = 1;

const char* scale_name(OutputScale s) { return s == OutputScale::Standardize ? "std" : "identity"; }

OutputScale scale_from_name(const std::string& s) {
  if (s == "std") return OutputScale::Standardize;
  if (s == "identity") return OutputScale::Identity;
  throw ConfigError("output_scale must be 'std' or 'identity', got '" + s + "'");
}

// Conv layer over selected output positions, time-major buffers.
// out[p, c] = bias[c] + sum_k W[c, k, :] . in[p - d (K - 1 - k), :]
void conv_positions(const double* in, std::size_t cin, std::size_t length, const double* w, const double* b,
                    std::size_t cout, std::size_t kernel, std::size_t dilation,
                    const std::vector<std::size_t>& positions, double* out) {
  const auto& k = kernels::active();
  for (std::size_t p : positions) {
    double* o = out + p * cout;
    for (std::size_t c = 0; c < cout; ++c) {
      double acc = b[c];
      const double* wc = w + c * kernel * cin;
      for (std::size_t tap = 0; tap < kernel; ++tap) {
        const std::size_t back = dilation * (kernel - 1 - tap);
        if (back > p) continue;
        acc += k.dot(wc + tap * cin, in + (p - back) * cin, cin);
      }
      o[c] = acc;
    }
  }
  (void)length;
}

std::vector<std::size_t> all_positions(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

void check_window(const ResidualNet& net, std::span<const double> window) {
  if (window.size() != net.config().window) {
    throw ShapeError("window length " + std::to_string(window.size()) + " does not match the network's " +
                     std::to_string(net.config().window));
  }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Shared forward body. `masks` may be empty (no dropout); when `rng` is set
// masks are drawn into `cache.masks` first.
double forward_impl(const ResidualNet& net, std::span<const double> window, const DropoutMasks* masks,
                    std::mt19937_64* rng, ForwardCache& cache) {
  check_window(net, window);
  const auto& cfg = net.config();
  const auto& k = kernels::active();
  const std::size_t L = cfg.window;
  const std::size_t C = cfg.channels;
  const std::size_t layers = cfg.conv_layers();
  const auto params = net.params();

  cache.net = &net;
  cache.version = net.version();
  cache.filled = false;
  cache.input.resize(L);
  for (std::size_t i = 0; i < L; ++i) cache.input[i] = net.normalize(window[i]);
  cache.act.resize(layers);
  cache.out.resize(layers);

  const bool draw = rng != nullptr && cfg.dropout > 0.0;
  if (draw) {
    cache.masks.assign(layers, {});
  } else if (masks != nullptr && !masks->empty()) {
    if (masks->size() != layers) throw ShapeError("dropout masks do not match the layer count");
    if (&cache.masks != masks) cache.masks = *masks;
  } else {
    cache.masks.clear();
  }
  const double keep_scale = cfg.dropout > 0.0 ? 1.0 / (1.0 - cfg.dropout) : 1.0;

  const double* in = cache.input.data();
  std::size_t cin = 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& slots = net.conv(l);
    const auto& pos = net.needed_positions(l);
    auto& act = cache.act[l];
    auto& out = cache.out[l];
    act.assign(L * C, 0.0);
    out.assign(L * C, 0.0);
    conv_positions(in, cin, L, params.data() + slots.weight, params.data() + slots.bias, C, cfg.kernel_size,
                   cfg.dilations[l], pos, act.data());
    if (draw) cache.masks[l].assign(L * C, 0.0);
    const bool masked = !cache.masks.empty();
    for (std::size_t p : pos) {
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t i = p * C + c;
        act[i] = std::max(act[i], 0.0);
        if (draw) cache.masks[l][i] = uniform01(*rng) < cfg.dropout ? 0.0 : keep_scale;
        out[i] = masked ? act[i] * cache.masks[l][i] : act[i];
      }
    }
    in = out.data();
    cin = C;
  }

  const double* last = cache.out[layers - 1].data() + (L - 1) * C;
  const auto& hid = net.hidden();
  cache.hidden.resize(cfg.dense_hidden);
  for (std::size_t j = 0; j < cfg.dense_hidden; ++j) {
    const double z = params[hid.bias + j] + k.dot(params.data() + hid.weight + j * C, last, C);
    cache.hidden[j] = std::max(z, 0.0);
  }
  const auto& head = net.head();
  cache.head = params[head.bias] + k.dot(params.data() + head.weight, cache.hidden.data(), cfg.dense_hidden);
  cache.output = net.denormalize(cache.head);
  cache.filled = true;
  return cache.output;
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t NetConfig::receptive_field() const {
  const std::size_t sum = std::accumulate(dilations.begin(), dilations.end(), std::size_t{0});
  return 1 + (kernel_size - 1) * sum;
}

void NetConfig::validate() const {
  if (window < 1) throw ConfigError("net window must be >= 1");
  if (kernel_size < 1) throw ConfigError("kernel_size must be >= 1");
  if (dilations.empty()) throw ConfigError("at least one conv layer is required");
  for (auto d : dilations) {
    if (d < 1) throw ConfigError("dilations must be >= 1");
  }
  if (channels < 1 || dense_hidden < 1) throw ConfigError("layer widths must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (receptive_field() > window) {
    throw ConfigError("receptive field " + std::to_string(receptive_field()) + " exceeds window " +
                      std::to_string(window));
  }
  if (!(learning_rate > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) ||
      !(epsilon > 0.0)) {
    throw ConfigError("invalid Adam hyperparameters");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in [0, 1)");
  }
}

nlohmann::json net_config_to_json(const NetConfig& c) {
  return {{"window", c.window},
          {"kernel_size", c.kernel_size},
          {"dilations", c.dilations},
          {"channels", c.channels},
          {"dense_hidden", c.dense_hidden},
          {"dropout", c.dropout},
          {"output_scale", scale_name(c.output_scale)},
          {"learning_rate", c.learning_rate},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"epsilon", c.epsilon},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"validation_fraction", c.validation_fraction},
          {"workers", c.workers},
          {"seed", c.seed}};
}

NetConfig net_config_from_json(const nlohmann::json& j, NetConfig c) {
  if (j.is_null()) return c;
  if (!j.is_object()) throw ConfigError("net config must be an object");
  using detail::config_value;
  c.window = config_value(j, "window", c.window);
  c.kernel_size = config_value(j, "kernel_size", c.kernel_size);
  c.dilations = config_value(j, "dilations", c.dilations);
  c.channels = config_value(j, "channels", c.channels);
  c.dense_hidden = config_value(j, "dense_hidden", c.dense_hidden);
  c.dropout = config_value(j, "dropout", c.dropout);
  if (j.contains("output_scale")) c.output_scale = scale_from_name(config_value<std::string>(j, "output_scale", ""));
  c.learning_rate = config_value(j, "learning_rate", c.learning_rate);
  c.beta1 = config_value(j, "beta1", c.beta1);
  c.beta2 = config_value(j, "beta2", c.beta2);
  c.epsilon = config_value(j, "epsilon", c.epsilon);
  c.batch_size = config_value(j, "batch_size", c.batch_size);
  c.epochs = config_value(j, "epochs", c.epochs);
  c.validation_fraction = config_value(j, "validation_fraction", c.validation_fraction);
  c.workers = config_value(j, "workers", c.workers);
  c.seed = config_value(j, "seed", c.seed);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

ResidualNet::ResidualNet(NetConfig config, double norm_mean, double norm_std)
    : config_(std::move(config)), mean_(norm_mean), std_(norm_std) {
  config_.validate();
  if (config_.output_scale == OutputScale::Identity) {
    mean_ = 0.0;
    std_ = 1.0;
  }
  if (!std::isfinite(mean_) || !std::isfinite(std_) || !(std_ > 0.0)) {
    throw NumericalError("normalisation constants must be finite with std > 0");
  }
  allocate();
}

ResidualNet::ResidualNet(NetConfig config, double norm_mean, double norm_std, std::uint64_t init_seed)
    : ResidualNet(std::move(config), norm_mean, norm_std) {
  std::mt19937_64 rng(init_seed);
  auto fill = [&](const LayerSlots& s, std::size_t fan_in, double gain) {
    std::normal_distribution<double> dist(0.0, std::sqrt(gain / static_cast<double>(fan_in)));
    for (std::size_t i = 0; i < s.out * fan_in; ++i) params_[s.weight + i] = dist(rng);
  };
  for (const auto& s : conv_) fill(s, s.in * config_.kernel_size, 2.0);
  fill(dense_[0], dense_[0].in, 2.0);
  fill(dense_[1], dense_[1].in, 1.0);
}

ResidualNet ResidualNet::zeros(NetConfig config, double norm_mean, double norm_std) {
  return ResidualNet(std::move(config), norm_mean, norm_std);
}

void ResidualNet::allocate() {
  std::size_t offset = 0;
  auto slot = [&](std::size_t in, std::size_t out, std::size_t taps) {
    LayerSlots s{offset, offset + out * in * taps, in, out};
    offset = s.bias + out;
    return s;
  };
  conv_.clear();
  std::size_t cin = 1;
  for (std::size_t l = 0; l < config_.conv_layers(); ++l) {
    conv_.push_back(slot(cin, config_.channels, config_.kernel_size));
    cin = config_.channels;
  }
  dense_[0] = slot(config_.channels, config_.dense_hidden, 1);
  dense_[1] = slot(config_.dense_hidden, 1, 1);
  params_.assign(offset, 0.0);

  // Walk the dependency cone back from the last output position.
  const std::size_t layers = config_.conv_layers();
  needed_.assign(layers, {});
  std::set<std::size_t> cur{config_.window - 1};
  for (std::size_t l = layers; l-- > 0;) {
    needed_[l].assign(cur.begin(), cur.end());
    std::set<std::size_t> below;
    for (std::size_t p : cur) {
      for (std::size_t tap = 0; tap < config_.kernel_size; ++tap) {
        const std::size_t back = config_.dilations[l] * (config_.kernel_size - 1 - tap);
        if (back <= p) below.insert(p - back);
      }
    }
    cur = std::move(below);
  }
}

// ---------------------------------------------------------------------------

std::vector<double> causal_conv_forward(std::span<const double> input, std::size_t in_channels,
                                        std::span<const double> weights, std::span<const double> bias,
                                        std::size_t kernel_size, std::size_t dilation) {
  if (dilation < 1) throw ConfigError("dilation must be >= 1");
  if (in_channels < 1 || input.size() % in_channels != 0 || input.empty()) {
    throw ShapeError("input must be a non-empty T x in_channels array");
  }
  const std::size_t cout = bias.size();
  if (weights.size() != cout * kernel_size * in_channels) throw ShapeError("weights must be out x K x in");
  const std::size_t T = input.size() / in_channels;
  std::vector<double> out(T * cout, 0.0);
  conv_positions(input.data(), in_channels, T, weights.data(), bias.data(), cout, kernel_size, dilation,
                 all_positions(T), out.data());
  return out;
}

double forward(const ResidualNet& net, std::span<const double> window, bool training, std::mt19937_64* rng,
               ForwardCache* cache) {
  if (training && net.config().dropout > 0.0 && rng == nullptr) {
    throw InvalidStateError("training-mode forward needs a random generator for dropout");
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  return forward_impl(net, window, nullptr, training ? rng : nullptr, c);
}

double forward_with_masks(const ResidualNet& net, std::span<const double> window, const DropoutMasks& masks,
                          ForwardCache* cache) {
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  return forward_impl(net, window, &masks, nullptr, c);
}

std::vector<std::vector<double>> conv_stack_outputs(const ResidualNet& net, std::span<const double> window) {
  check_window(net, window);
  const auto& cfg = net.config();
  const std::size_t L = cfg.window;
  const std::size_t C = cfg.channels;
  const auto params = net.params();
  const auto every = all_positions(L);

  std::vector<double> input(L);
  for (std::size_t i = 0; i < L; ++i) input[i] = net.normalize(window[i]);
  std::vector<std::vector<double>> outs;
  const double* in = input.data();
  std::size_t cin = 1;
  for (std::size_t l = 0; l < cfg.conv_layers(); ++l) {
    std::vector<double> out(L * C);
    conv_positions(in, cin, L, params.data() + net.conv(l).weight, params.data() + net.conv(l).bias, C,
                   cfg.kernel_size, cfg.dilations[l], every, out.data());
    for (double& v : out) v = std::max(v, 0.0);
    outs.push_back(std::move(out));
    in = outs.back().data();
    cin = C;
  }
  return outs;
}

// ---------------------------------------------------------------------------

double scaling_input_gradient(const ResidualNet& net, double grad_output) { return grad_output * net.norm_std(); }

void backward_accumulate(const ResidualNet& net, const ForwardCache& cache, double grad_output,
                         std::span<double> grads) {
  if (!cache.filled || cache.net != &net) throw InvalidStateError("backward needs a forward cache from this network");
  if (cache.version != net.version()) throw InvalidStateError("forward cache is stale: parameters changed since");
  const auto params = net.params();
  if (grads.size() != params.size()) throw ShapeError("gradient buffer does not match the parameter count");
  if (grad_output == 0.0) return;

  const auto& cfg = net.config();
  const auto& k = kernels::active();
  const std::size_t L = cfg.window;
  const std::size_t C = cfg.channels;
  const std::size_t H = cfg.dense_hidden;
  const std::size_t layers = cfg.conv_layers();

  // Output scaling, then the two dense layers.
  const double g_head = scaling_input_gradient(net, grad_output);
  const auto& head = net.head();
  grads[head.bias] += g_head;
  k.axpy(g_head, cache.hidden.data(), grads.data() + head.weight, H);

  auto& gh = cache.grad_hidden;
  gh.assign(H, 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    if (cache.hidden[j] > 0.0) gh[j] = g_head * params[head.weight + j];
  }

  cache.grad_out.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    auto& buf = cache.grad_out[l];
    buf.resize(L * C);
    for (std::size_t p : net.needed_positions(l)) std::fill_n(buf.data() + p * C, C, 0.0);
  }

  const auto& hid = net.hidden();
  const double* last = cache.out[layers - 1].data() + (L - 1) * C;
  double* g_last = cache.grad_out[layers - 1].data() + (L - 1) * C;
  for (std::size_t j = 0; j < H; ++j) {
    if (gh[j] == 0.0) continue;
    grads[hid.bias + j] += gh[j];
    k.axpy(gh[j], last, grads.data() + hid.weight + j * C, C);
    k.axpy(gh[j], params.data() + hid.weight + j * C, g_last, C);
  }

  // Conv stack, top to bottom, over the same positions the forward touched.
  const bool masked = !cache.masks.empty();
  for (std::size_t l = layers; l-- > 0;) {
    const auto& slots = net.conv(l);
    const std::size_t cin = slots.in;
    const double* in = l == 0 ? cache.input.data() : cache.out[l - 1].data();
    double* g_in = l == 0 ? nullptr : cache.grad_out[l - 1].data();
    const auto& act = cache.act[l];
    const auto& g_out = cache.grad_out[l];
    const std::size_t d = cfg.dilations[l];
    for (std::size_t p : net.needed_positions(l)) {
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t i = p * C + c;
        if (act[i] <= 0.0) continue;
        const double g = masked ? g_out[i] * cache.masks[l][i] : g_out[i];
        if (g == 0.0) continue;
        grads[slots.bias + c] += g;
        const std::size_t wc = slots.weight + c * cfg.kernel_size * cin;
        for (std::size_t tap = 0; tap < cfg.kernel_size; ++tap) {
          const std::size_t back = d * (cfg.kernel_size - 1 - tap);
          if (back > p) continue;
          const std::size_t src = p - back;
          k.axpy(g, in + src * cin, grads.data() + wc + tap * cin, cin);
          if (g_in) k.axpy(g, params.data() + wc + tap * cin, g_in + src * cin, cin);
        }
      }
    }
  }
}

std::vector<double> backward(const ResidualNet& net, const ForwardCache& cache, double grad_output) {
  std::vector<double> grads(net.params().size(), 0.0);
  backward_accumulate(net, cache, grad_output, grads);
  return grads;
}

// ---------------------------------------------------------------------------

AdamState AdamState::for_params(std::size_t count, const NetConfig& cfg) {
  AdamState s;
  s.m.assign(count, 0.0);
  s.v.assign(count, 0.0);
  s.learning_rate = cfg.learning_rate;
  s.beta1 = cfg.beta1;
  s.beta2 = cfg.beta2;
  s.epsilon = cfg.epsilon;
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("Adam state, gradients and parameters must have the same length");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw DivergenceError("non-finite gradient during training");
  }
  ++state.step;
  const auto t = static_cast<double>(state.step);
  const kernels::AdamCoeffs c{state.learning_rate,
                              state.beta1,
                              state.beta2,
                              state.epsilon,
                              1.0 - std::pow(state.beta1, t),
                              1.0 - std::pow(state.beta2, t)};
  kernels::active().adam_update(params.data(), grads.data(), state.m.data(), state.v.data(), params.size(), c);
}

// ---------------------------------------------------------------------------

nlohmann::json net_to_json(const ResidualNet& net) {
  nlohmann::json j;
  j["format"] = "loadfc-net";
  j["version"] = kNetFormatVersion;
  j["config"] = net_config_to_json(net.config());
  j["norm_mean"] = net.norm_mean();
  j["norm_std"] = net.norm_std();
  j["params"] = std::vector<double>(net.params().begin(), net.params().end());
  return j;
}

ResidualNet net_from_json(const nlohmann::json& j) {
  if (detail::config_value<std::string>(j, "format", "") != "loadfc-net") throw ConfigError("not a loadfc net artifact");
  if (detail::config_required<int>(j, "version") != kNetFormatVersion) {
    throw ConfigError("unsupported net artifact version");
  }
  auto net = ResidualNet::zeros(net_config_from_json(j.at("config")), detail::config_required<double>(j, "norm_mean"),
                                detail::config_required<double>(j, "norm_std"));
  const auto values = detail::config_required<std::vector<double>>(j, "params");
  auto params = net.mutable_params();
  if (values.size() != params.size()) throw ConfigError("net artifact parameter count does not match its config");
  for (double v : values) {
    if (!std::isfinite(v)) throw ConfigError("net artifact holds a non-finite parameter");
  }
  std::copy(values.begin(), values.end(), params.begin());
  return net;
}

void save_net(const ResidualNet& net, const std::filesystem::path& path) {
  write_text_file(path, net_to_json(net).dump() + "\n");
}

ResidualNet load_net(const std::filesystem::path& path) {
  return net_from_json(detail::parse_json(read_text_file(path), path.string()));
}

}  // namespace loadfc
