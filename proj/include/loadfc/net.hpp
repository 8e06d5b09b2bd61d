#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "loadfc/series.hpp"

namespace loadfc {

enum class OutputScale {
  Standardize,  // z-score inputs, final layer maps back: mean + std * y
  Identity,     // raw inputs, raw outputs
};

/// Architecture and training hyperparameters of the residual network.
struct NetConfig {
  std::size_t window = 256;
  std::size_t kernel_size = 2;
  std::vector<std::size_t> dilations{1, 2, 4, 8, 16, 32, 64, 128};
  std::size_t channels = 16;
  std::size_t dense_hidden = 64;
  double dropout = 0.2;
  OutputScale output_scale = OutputScale::Standardize;

  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 200;
  double validation_fraction = 0.1;
  std::size_t workers = 1;
  std::uint64_t seed = 42;

  std::size_t conv_layers() const { return dilations.size(); }
  /// 1 + (K - 1) * sum(dilations)
  std::size_t receptive_field() const;
  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

nlohmann::json net_config_to_json(const NetConfig& cfg);
/// Starts from `base` and applies the fields present in `j`.
NetConfig net_config_from_json(const nlohmann::json& j, NetConfig base = {});

/// Dilated causal CNN: conv stack -> last step -> dense(ReLU) -> dense -> output scaling.
///
/// Parameters live in one flat vector. Conv layer weights are laid out
/// [out_channel][tap][in_channel]; dense weights [out][in].
class ResidualNet {
 public:
  struct LayerSlots {
    std::size_t weight;
    std::size_t bias;
    std::size_t in;
    std::size_t out;
  };

  /// He-initialised network drawn from `init_seed`.
  ResidualNet(NetConfig config, double norm_mean, double norm_std, std::uint64_t init_seed);
  /// All-zero parameters.
  static ResidualNet zeros(NetConfig config, double norm_mean = 0.0, double norm_std = 1.0);

  const NetConfig& config() const { return config_; }
  double norm_mean() const { return mean_; }
  double norm_std() const { return std_; }
  double normalize(double x) const { return (x - mean_) / std_; }
  double denormalize(double z) const { return mean_ + std_ * z; }

  std::span<const double> params() const { return params_; }
  /// Mutable access; bumps the version so stale forward caches are detected.
  std::span<double> mutable_params() {
    ++version_;
    return params_;
  }
  std::uint64_t version() const { return version_; }

  const LayerSlots& conv(std::size_t layer) const { return conv_.at(layer); }
  const LayerSlots& hidden() const { return dense_[0]; }
  const LayerSlots& head() const { return dense_[1]; }

  /// Output positions each conv layer must compute for the last-step output.
  const std::vector<std::size_t>& needed_positions(std::size_t layer) const { return needed_.at(layer); }

 private:
  ResidualNet(NetConfig config, double norm_mean, double norm_std);
  void allocate();

  NetConfig config_;
  double mean_;
  double std_;
  std::vector<double> params_;
  std::vector<LayerSlots> conv_;
  LayerSlots dense_[2]{};
  std::vector<std::vector<std::size_t>> needed_;
  std::uint64_t version_ = 0;
};

using DropoutMasks = std::vector<std::vector<double>>;

/// Activations kept by a forward pass for the matching backward pass.
struct ForwardCache {
  const ResidualNet* net = nullptr;
  std::uint64_t version = 0;
  bool filled = false;

  std::vector<double> input;                  // normalised window, length L
  std::vector<std::vector<double>> act;       // per conv layer, L x C time-major, post-ReLU
  std::vector<std::vector<double>> out;       // act * dropout mask
  DropoutMasks masks;                         // empty when no dropout was applied
  std::vector<double> hidden;                 // dense hidden, post-ReLU
  double head = 0.0;                          // pre-scaling output
  double output = 0.0;

  mutable std::vector<std::vector<double>> grad_out;  // backward scratch
  mutable std::vector<double> grad_hidden;
};

/// Full-length dilated causal convolution with left zero padding.
///
/// `input` is time-major (T x in_channels); returns T x out_channels.
std::vector<double> causal_conv_forward(std::span<const double> input, std::size_t in_channels,
                                        std::span<const double> weights, std::span<const double> bias,
                                        std::size_t kernel_size, std::size_t dilation);

/// Prediction for the value following `window` (raw units, length L).
///
/// In training mode dropout masks are drawn from `rng`; inference is
/// deterministic. Throws ShapeError on a wrong window length.
double forward(const ResidualNet& net, std::span<const double> window, bool training,
               std::mt19937_64* rng = nullptr, ForwardCache* cache = nullptr);

/// Forward pass with fixed dropout masks (as stored in a training cache).
double forward_with_masks(const ResidualNet& net, std::span<const double> window, const DropoutMasks& masks,
                          ForwardCache* cache = nullptr);

/// Every conv layer's inference output over all positions (L x C each).
std::vector<std::vector<double>> conv_stack_outputs(const ResidualNet& net, std::span<const double> window);

/// Gradient of the loss w.r.t. every parameter, given dLoss/dOutput.
/// Throws InvalidStateError when the cache is empty or from another net state.
std::vector<double> backward(const ResidualNet& net, const ForwardCache& cache, double grad_output);
/// Same, accumulated into `grads`.
void backward_accumulate(const ResidualNet& net, const ForwardCache& cache, double grad_output,
                         std::span<double> grads);
/// dLoss/dHead for the last backward pass's output gradient (scaling layer input).
double scaling_input_gradient(const ResidualNet& net, double grad_output);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(std::size_t count, const NetConfig& cfg);
};

/// One bias-corrected Adam update. Throws DivergenceError on non-finite gradients.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

// --- training -------------------------------------------------------------

struct Window {
  std::vector<double> input;
  double target;
  long target_index;
};

/// Windows [e_{t-L} .. e_{t-1}] -> e_t over gap-free stretches only.
std::vector<Window> make_windows(const ResidualSeries& residuals, std::size_t window);

struct EpochLog {
  std::size_t epoch;
  double train_mse;
  double val_mse;  // NaN when there is no validation split
};

struct TrainingLog {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
};

struct TrainedNet {
  ResidualNet net;
  TrainingLog log;
};

/// Mini-batch Adam on MSE with dropout, keeping the best validation checkpoint.
/// The last `validation_fraction` of windows (time order) is held out.
TrainedNet train(const ResidualSeries& residuals, const NetConfig& config);

/// Recursive multi-step forecast from the last L history values.
std::vector<double> predict_residuals(const ResidualNet& net, const ResidualSeries& history,
                                      std::size_t horizon);

std::string training_log_csv(const TrainingLog& log);

nlohmann::json net_to_json(const ResidualNet& net);
ResidualNet net_from_json(const nlohmann::json& j);
void save_net(const ResidualNet& net, const std::filesystem::path& path);
ResidualNet load_net(const std::filesystem::path& path);

}  // namespace loadfc
