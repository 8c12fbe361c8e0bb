#include "rasterfusion/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rasterfusion/binio.hpp"
#include "rasterfusion/errors.hpp"
#include "rasterfusion/random.hpp"

namespace rasterfusion {

Network::Network(std::vector<LayerSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("network needs at least one layer");
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const auto& s = specs[l];
    if (s.kt == 0 || s.kh == 0 || s.kw == 0 || s.in_channels == 0 || s.out_channels == 0) {
      throw std::invalid_argument("layer " + std::to_string(l) + " has a zero extent");
    }
    if (l > 0 && specs[l - 1].out_channels != s.in_channels) {
      throw std::invalid_argument("layer " + std::to_string(l) + " expects " +
                                  std::to_string(s.in_channels) + " input channels but layer " +
                                  std::to_string(l - 1) + " emits " +
                                  std::to_string(specs[l - 1].out_channels));
    }
    ConvLayer layer;
    layer.spec = s;
    layer.kernel = Tensor({s.out_channels, s.kt, s.kh, s.kw, s.in_channels});
    layer.bias.assign(s.out_channels, 0.0);
    layers_.push_back(std::move(layer));
  }
}

std::vector<LayerSpec> Network::default_architecture(std::size_t t_in, std::size_t t_out,
                                                     std::size_t channels, std::size_t hidden,
                                                     Activation hidden_activation) {
  if (t_out == 0 || t_out > t_in) {
    throw std::invalid_argument("default architecture needs 1 <= t_out <= t_in");
  }
  LayerSpec first{3, 3, 3, channels, hidden, {1, 1, 1}, hidden_activation};
  LayerSpec second{t_in - t_out + 1, 3, 3, hidden, hidden, {0, 1, 1}, hidden_activation};
  LayerSpec head{1, 1, 1, hidden, 1, {0, 0, 0}, Activation::Identity};
  return {first, second, head};
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.kernel.size() + l.bias.size();
  return n;
}

std::vector<std::size_t> Network::output_shape(const std::vector<std::size_t>& input_shape) const {
  auto shape = input_shape;
  for (const auto& l : layers_) shape = conv3d_output_shape(shape, l.kernel.shape(), l.spec.pad);
  return shape;
}

void Network::init_uniform(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& l : layers_) {
    const double s = 1.0 / std::sqrt(static_cast<double>(l.spec.fan_in()));
    for (auto& w : l.kernel.values()) w = rng.uniform(-s, s);
    for (auto& b : l.bias) b = rng.uniform(-s, s);
  }
}

namespace {

void relu_inplace(Tensor& t) {
  for (auto& v : t.values()) v = v > 0.0 ? v : 0.0;
}

}  // namespace

Tensor Network::forward(const Tensor& clip) const {
  if (layers_.empty()) throw std::invalid_argument("forward on an empty network");
  Tensor x = clip;
  for (const auto& l : layers_) {
    x = conv3d_forward(x, l.kernel, l.bias, l.spec.pad);
    if (l.spec.activation == Activation::ReLU) relu_inplace(x);
  }
  return x;
}

Tensor Network::forward(const Tensor& clip, std::vector<Tensor>& activations) const {
  if (layers_.empty()) throw std::invalid_argument("forward on an empty network");
  activations.clear();
  activations.reserve(layers_.size() + 1);
  activations.push_back(clip);
  for (const auto& l : layers_) {
    Tensor y = conv3d_forward(activations.back(), l.kernel, l.bias, l.spec.pad);
    if (l.spec.activation == Activation::ReLU) relu_inplace(y);
    activations.push_back(std::move(y));
  }
  return activations.back();
}

NetworkGrads Network::backward(const std::vector<Tensor>& activations,
                               const Tensor& grad_output) const {
  if (activations.size() != layers_.size() + 1) {
    throw std::invalid_argument("backward: activation trace does not match the network");
  }
  NetworkGrads grads;
  grads.kernels.resize(layers_.size());
  grads.biases.resize(layers_.size());
  Tensor g = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    if (layer.spec.activation == Activation::ReLU) {
      const auto& out = activations[l + 1].values();
      auto& gv = g.values();
      for (std::size_t i = 0; i < gv.size(); ++i) {
        if (!(out[i] > 0.0)) gv[i] = 0.0;
      }
    }
    auto cg = conv3d_backward(activations[l], layer.kernel, g, layer.spec.pad, l > 0);
    grads.kernels[l] = std::move(cg.kernel);
    grads.biases[l] = std::move(cg.bias);
    g = std::move(cg.input);
  }
  return grads;
}

void Network::apply_sgd(const NetworkGrads& grads, double lr) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    auto& k = layers_[l].kernel.values();
    const auto& gk = grads.kernels[l].values();
    for (std::size_t i = 0; i < k.size(); ++i) k[i] -= lr * gk[i];
    auto& b = layers_[l].bias;
    const auto& gb = grads.biases[l];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }
}

MaeLoss mae_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) {
    throw std::invalid_argument("mae_loss: prediction and target shapes differ");
  }
  MaeLoss out;
  out.grad = Tensor(pred.shape());
  const double n = static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    sum += std::abs(d);
    out.grad[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
  }
  out.loss = sum / n;
  return out;
}

TrainResult sgd_fit(Network net, std::span<const TrainingPair> data, const TrainConfig& config) {
  if (!(config.lr >= 0.0) || !std::isfinite(config.lr)) {
    throw std::invalid_argument("sgd_fit: learning rate must be finite and >= 0");
  }
  if (data.empty()) throw std::invalid_argument("sgd_fit: empty dataset");
  if (config.initialize) net.init_uniform(config.seed);

  TrainResult result;
  result.loss_history.reserve(config.epochs);
  std::vector<Tensor> trace;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double total = 0.0;
    for (const auto& pair : data) {
      const Tensor pred = net.forward(pair.clip, trace);
      const MaeLoss loss = mae_loss(pred, pair.target);
      if (!std::isfinite(loss.loss)) {
        throw DataError("sgd_fit: non-finite loss at epoch " + std::to_string(epoch));
      }
      total += loss.loss;
      if (config.lr > 0.0) net.apply_sgd(net.backward(trace, loss.grad), config.lr);
    }
    result.loss_history.push_back(total / static_cast<double>(data.size()));
  }
  result.net = std::move(net);
  return result;
}

namespace {

// L(up) - L(down) for the MAE loss, summed element by element so that the
// common magnitude of the two losses never has to cancel.
double mae_difference(const Tensor& up, const Tensor& down, const Tensor& target) {
  double sum = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double ru = up[i] - target[i];
    const double rd = down[i] - target[i];
    if (ru >= 0.0 && rd >= 0.0) {
      sum += up[i] - down[i];
    } else if (ru <= 0.0 && rd <= 0.0) {
      sum += down[i] - up[i];
    } else {
      sum += std::abs(ru) - std::abs(rd);
    }
  }
  return sum / static_cast<double>(target.size());
}

}  // namespace

GradCheckResult grad_check(Network net, const Tensor& clip, const Tensor& target, double eps) {
  std::vector<Tensor> trace;
  const Tensor pred = net.forward(clip, trace);
  const NetworkGrads analytic = net.backward(trace, mae_loss(pred, target).grad);

  GradCheckResult result;
  net.for_each_parameter([&](std::size_t l, bool is_bias, std::size_t i, double& p) {
    const double saved = p;
    p = saved + eps;
    const Tensor up = net.forward(clip);
    p = saved - eps;
    const Tensor down = net.forward(clip);
    p = saved;
    const double numeric = mae_difference(up, down, target) / (2.0 * eps);
    const double a = is_bias ? analytic.biases[l][i] : analytic.kernels[l][i];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
    result.max_relative_error = std::max(result.max_relative_error, err);
    auto& slot = is_bias ? result.max_bias_error : result.max_kernel_error;
    slot = std::max(slot, err);
    ++result.parameters;
  });
  return result;
}

namespace {

constexpr char kNetMagic[4] = {'R', 'F', 'N', 'N'};
constexpr std::uint16_t kNetVersion = 1;

void put_doubles(std::ostream& out, const std::vector<double>& v) {
  binio::put<std::uint64_t>(out, v.size());
  for (double d : v) binio::put<double>(out, d);
}

std::vector<double> get_doubles(std::istream& in, std::size_t expected, const char* what) {
  const auto n = binio::get<std::uint64_t>(in, what);
  if (n != expected) {
    throw DataError(std::string("network blob: ") + what + " holds " + std::to_string(n) +
                    " values, layer spec implies " + std::to_string(expected));
  }
  std::vector<double> v(n);
  for (auto& d : v) d = binio::get<double>(in, what);
  return v;
}

}  // namespace

void write_network(const Network& net, std::ostream& sink) {
  std::ostringstream body;
  body.write(kNetMagic, 4);
  binio::put<std::uint16_t>(body, kNetVersion);
  binio::put<std::uint32_t>(body, static_cast<std::uint32_t>(net.layers().size()));
  for (const auto& l : net.layers()) {
    const auto& s = l.spec;
    for (std::size_t v : {s.kt, s.kh, s.kw, s.in_channels, s.out_channels, s.pad.t, s.pad.h,
                          s.pad.w}) {
      binio::put<std::uint32_t>(body, static_cast<std::uint32_t>(v));
    }
    binio::put<std::uint8_t>(body, static_cast<std::uint8_t>(s.activation));
    put_doubles(body, l.kernel.values());
    put_doubles(body, l.bias);
  }
  const std::string bytes = body.str();
  binio::put<std::uint64_t>(sink, bytes.size());
  sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw DataError("network blob: write failed");
}

Network read_network(std::istream& source) {
  const auto length = binio::get<std::uint64_t>(source, "network blob length");
  if (length > (std::uint64_t{1} << 32)) throw DataError("network blob: implausible length");
  std::string bytes(length, '\0');
  source.read(bytes.data(), static_cast<std::streamsize>(length));
  if (static_cast<std::uint64_t>(source.gcount()) != length) {
    throw DataError("network blob: truncated, expected " + std::to_string(length) + " bytes");
  }
  std::istringstream body(bytes);
  char magic[4] = {};
  body.read(magic, 4);
  if (body.gcount() != 4 || std::string_view(magic, 4) != std::string_view(kNetMagic, 4)) {
    throw DataError("network blob: bad magic");
  }
  const auto version = binio::get<std::uint16_t>(body, "version");
  if (version != kNetVersion) throw DataError("network blob: unsupported version");
  const auto n_layers = binio::get<std::uint32_t>(body, "layer count");
  if (n_layers == 0 || n_layers > 1024) throw DataError("network blob: implausible layer count");

  std::vector<LayerSpec> specs(n_layers);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> params;
  for (auto& s : specs) {
    std::size_t* fields[] = {&s.kt, &s.kh, &s.kw, &s.in_channels, &s.out_channels,
                             &s.pad.t, &s.pad.h, &s.pad.w};
    for (auto* f : fields) *f = binio::get<std::uint32_t>(body, "layer spec");
    const auto act = binio::get<std::uint8_t>(body, "activation");
    if (act > 1) throw DataError("network blob: unknown activation code");
    s.activation = static_cast<Activation>(act);
    auto kernel = get_doubles(body, s.fan_in() * s.out_channels, "kernel");
    auto bias = get_doubles(body, s.out_channels, "bias");
    params.emplace_back(std::move(kernel), std::move(bias));
  }
  Network net;
  try {
    net = Network(specs);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("network blob: ") + e.what());
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    net.layers()[l].kernel.values() = std::move(params[l].first);
    net.layers()[l].bias = std::move(params[l].second);
  }
  return net;
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "identity") return Activation::Identity;
  throw UsageError("unknown activation '" + std::string(name) + "' (relu|identity)");
}

}  // namespace rasterfusion
