#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "rasterfusion/conv3d.hpp"
#include "rasterfusion/tensor.hpp"

namespace rasterfusion {

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1 };

struct LayerSpec {
  std::size_t kt = 1, kh = 1, kw = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  Padding3 pad;
  Activation activation = Activation::Identity;

  std::size_t fan_in() const { return kt * kh * kw * in_channels; }
  bool operator==(const LayerSpec&) const = default;
};

struct ConvLayer {
  LayerSpec spec;
  Tensor kernel;             // (out_c, kt, kh, kw, in_c)
  std::vector<double> bias;  // out_c

  bool operator==(const ConvLayer&) const = default;
};

/// Parameter gradients, one entry per layer.
struct NetworkGrads {
  std::vector<Tensor> kernels;
  std::vector<std::vector<double>> biases;
};

/// Stack of stride-1 3D convolutions mapping a (T, H, W, C) clip to a
/// (T', H', W', C') volume.
class Network {
 public:
  Network() = default;

  /// Zero-initialized parameters. Throws std::invalid_argument when adjacent
  /// layers disagree on channel counts.
  explicit Network(std::vector<LayerSpec> specs);

  /// conv(3x3x3, C->hidden, pad 1,1,1, ReLU)
  ///   -> conv((t_in-t_out+1)x3x3, hidden->hidden, pad 0,1,1, ReLU)
  ///   -> conv(1x1x1, hidden->1, identity)
  /// Spatial extents are preserved and time shrinks from t_in to t_out.
  static std::vector<LayerSpec> default_architecture(std::size_t t_in, std::size_t t_out,
                                                     std::size_t channels = 3,
                                                     std::size_t hidden = 8,
                                                     Activation hidden_activation = Activation::ReLU);

  const std::vector<ConvLayer>& layers() const { return layers_; }
  std::vector<ConvLayer>& layers() { return layers_; }
  std::size_t parameter_count() const;

  std::vector<std::size_t> output_shape(const std::vector<std::size_t>& input_shape) const;

  /// Every kernel weight and bias drawn uniformly from [-s, s] with
  /// s = 1/sqrt(fan_in) of its layer, in layer order.
  void init_uniform(std::uint64_t seed);

  Tensor forward(const Tensor& clip) const;

  /// Forward pass that also keeps every layer input for backward().
  /// activations[0] is the clip, activations.back() the network output.
  Tensor forward(const Tensor& clip, std::vector<Tensor>& activations) const;

  NetworkGrads backward(const std::vector<Tensor>& activations, const Tensor& grad_output) const;

  void apply_sgd(const NetworkGrads& grads, double lr);

  /// Visits every parameter as (layer, is_bias, flat index, value reference).
  template <typename F>
  void for_each_parameter(F&& fn) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      auto& k = layers_[l].kernel.values();
      for (std::size_t i = 0; i < k.size(); ++i) fn(l, false, i, k[i]);
      auto& b = layers_[l].bias;
      for (std::size_t i = 0; i < b.size(); ++i) fn(l, true, i, b[i]);
    }
  }

  bool operator==(const Network&) const = default;

 private:
  std::vector<ConvLayer> layers_;
};

struct MaeLoss {
  double loss = 0.0;
  Tensor grad;  // d loss / d pred
};

/// Mean absolute error with gradient sign(pred - target)/N, sign(0) = 0.
MaeLoss mae_loss(const Tensor& pred, const Tensor& target);

struct TrainingPair {
  Tensor clip;    // (T_in, H, W, C)
  Tensor target;  // (T_out, H, W, 1)
};

struct TrainConfig {
  double lr = 0.05;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  bool initialize = true;  // run init_uniform(seed) before the first epoch
};

struct TrainResult {
  Network net;
  std::vector<double> loss_history;  // mean per-pair loss of each epoch
};

/// In-order SGD with minibatches of one pair. Throws DataError naming the
/// epoch when a loss becomes non-finite.
TrainResult sgd_fit(Network net, std::span<const TrainingPair> data, const TrainConfig& config);

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_kernel_error = 0.0;
  double max_bias_error = 0.0;
  std::size_t parameters = 0;
};

/// Compares backprop gradients of mae_loss against central differences over
/// every parameter. Relative error is |a - n| / max(|a|, |n|, 1e-12).
GradCheckResult grad_check(Network net, const Tensor& clip, const Tensor& target, double eps);

/// Length-prefixed little-endian blob: u64 body length, then
/// "RFNN", u16 version, u32 layer count, and per layer
/// u32 kt kh kw in_c out_c pad_t pad_h pad_w, u8 activation,
/// u64 n + n f64 kernel, u64 n + n f64 bias.
void write_network(const Network& net, std::ostream& sink);
Network read_network(std::istream& source);

Activation parse_activation(std::string_view name);

}  // namespace rasterfusion
