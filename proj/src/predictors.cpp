#include "rasterfusion/predictors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rasterfusion/binio.hpp"
#include "rasterfusion/errors.hpp"

namespace rasterfusion {

HAModel fit_ha(const ModalitySeries& train, std::size_t period) {
  train.validate();
  if (period == 0) throw DataError("fit_ha: period must be >= 1");
  if (train.length() < period) {
    throw DataError("fit_ha: need at least one full period (" + std::to_string(period) +
                    " frames), got " + std::to_string(train.length()));
  }
  HAModel model;
  model.grid = train.grid;
  model.period = period;
  const std::size_t cells = train.grid.cell_count();
  model.slot_means.assign(period, Frame(cells, 0.0));
  std::vector<std::size_t> counts(period, 0);
  for (std::size_t t = 0; t < train.length(); ++t) {
    auto& acc = model.slot_means[t % period];
    for (std::size_t k = 0; k < cells; ++k) acc[k] += train.frames[t][k];
    ++counts[t % period];
  }
  for (std::size_t s = 0; s < period; ++s) {
    for (auto& v : model.slot_means[s]) v /= static_cast<double>(counts[s]);
  }
  return model;
}

Frame predict_ha(const HAModel& model, std::size_t slot) {
  if (model.slot_means.empty()) throw std::invalid_argument("predict_ha: model is not fitted");
  return model.slot_means[slot % model.period];
}

VARModel fit_var(const ModalitySeries& train, std::size_t lag, const VarOptions& options) {
  train.validate();
  if (lag == 0) throw DataError("fit_var: lag must be >= 1");
  if (train.length() < 2 * lag + 1) {
    throw DataError("fit_var: need at least " + std::to_string(2 * lag + 1) +
                    " frames for lag " + std::to_string(lag) + ", got " +
                    std::to_string(train.length()));
  }
  const std::size_t n_cells = train.grid.cell_count();
  VARModel model;
  model.grid = train.grid;
  model.lag = lag;
  model.has_intercept = options.intercept;
  model.bounds = options.bounds;
  if (options.cells.empty()) {
    if (n_cells > kVarMaxCells) {
      throw DataError("fit_var: " + std::to_string(n_cells) + " cells exceed the unmasked limit of " +
                      std::to_string(kVarMaxCells) + "; supply a cell mask");
    }
    model.cells.resize(n_cells);
    for (std::size_t k = 0; k < n_cells; ++k) model.cells[k] = k;
  } else {
    model.cells = options.cells;
    for (auto k : model.cells) {
      if (k >= n_cells) throw DataError("fit_var: mask cell index out of range");
    }
  }

  const std::size_t d = model.cells.size();
  const std::size_t offset = options.intercept ? 1 : 0;
  const std::size_t k = offset + d * lag;
  const std::size_t n = train.length() - lag;

  Eigen::MatrixXd X(n, k);
  Eigen::MatrixXd Y(n, d);
  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t t = row + lag;
    if (options.intercept) X(row, 0) = 1.0;
    for (std::size_t i = 1; i <= lag; ++i) {
      const auto& past = train.frames[t - i];
      for (std::size_t m = 0; m < d; ++m) X(row, offset + (i - 1) * d + m) = past[model.cells[m]];
    }
    for (std::size_t j = 0; j < d; ++j) Y(row, j) = train.frames[t][model.cells[j]];
  }

  Eigen::MatrixXd gram = X.transpose() * X;
  gram.diagonal().array() += options.ridge;
  const Eigen::MatrixXd rhs = X.transpose() * Y;
  Eigen::MatrixXd B;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success) {
    B = llt.solve(rhs);
  } else {
    B = gram.ldlt().solve(rhs);
  }
  if (!B.allFinite()) throw DataError("fit_var: normal equations produced non-finite coefficients");

  model.intercept.assign(d, 0.0);
  if (options.intercept) {
    for (std::size_t j = 0; j < d; ++j) model.intercept[j] = B(0, j);
  }
  model.coefficients.assign(lag, std::vector<double>(d * d, 0.0));
  for (std::size_t i = 0; i < lag; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t m = 0; m < d; ++m) {
        model.coefficients[i][j * d + m] = B(offset + i * d + m, j);
      }
    }
  }
  return model;
}

Frame predict_var(const VARModel& model, std::span<const Frame> history, bool clip) {
  if (history.size() != model.lag) {
    throw DataError("predict_var: expected " + std::to_string(model.lag) +
                    " history frames, got " + std::to_string(history.size()));
  }
  const std::size_t cells = model.grid.cell_count();
  for (const auto& f : history) {
    if (f.size() != cells) throw DataError("predict_var: history frame does not match the grid");
  }
  const std::size_t d = model.dimension();
  Frame out(cells, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double y = model.intercept[j];
    for (std::size_t i = 1; i <= model.lag; ++i) {
      const auto& past = history[model.lag - i];
      const auto& A = model.coefficients[i - 1];
      for (std::size_t m = 0; m < d; ++m) y += A[j * d + m] * past[model.cells[m]];
    }
    if (clip && model.bounds) y = std::clamp(y, model.bounds->vmin, model.bounds->vmax);
    out[model.cells[j]] = y;
  }
  return out;
}

Tensor clip_tensor(const RasterVideo& video, std::size_t begin, std::size_t count) {
  if (begin + count > video.length()) throw DataError("clip_tensor: frame range out of bounds");
  const auto& g = video.grid;
  Tensor t({count, g.rows, g.cols, 3});
  auto& v = t.values();
  const std::size_t frame_bytes = g.cell_count() * 3;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& px = video.frames[begin + i].pixels;
    for (std::size_t k = 0; k < frame_bytes; ++k) v[i * frame_bytes + k] = px[k] / 255.0;
  }
  return t;
}

Tensor target_tensor(const RasterVideo& video, Channel channel, std::size_t begin,
                     std::size_t count) {
  if (begin + count > video.length()) throw DataError("target_tensor: frame range out of bounds");
  const auto& g = video.grid;
  const std::size_t cells = g.cell_count();
  const auto ch = static_cast<std::size_t>(channel);
  Tensor t({count, g.rows, g.cols, 1});
  auto& v = t.values();
  for (std::size_t i = 0; i < count; ++i) {
    const auto& px = video.frames[begin + i].pixels;
    for (std::size_t k = 0; k < cells; ++k) v[i * cells + k] = px[k * 3 + ch] / 255.0;
  }
  return t;
}

std::vector<TrainingPair> make_training_pairs(const RasterVideo& video, Channel target,
                                              std::size_t t_in, std::size_t t_out) {
  if (t_in == 0 || t_out == 0) throw DataError("training pairs need t_in, t_out >= 1");
  if (video.length() < t_in + t_out) {
    throw DataError("training video has " + std::to_string(video.length()) +
                    " frames, needs at least t_in + t_out = " + std::to_string(t_in + t_out));
  }
  std::vector<TrainingPair> pairs;
  const std::size_t n = video.length() - t_in - t_out + 1;
  pairs.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    pairs.push_back({clip_tensor(video, s, t_in), target_tensor(video, target, s + t_in, t_out)});
  }
  return pairs;
}

CNNPredictor train_cnn(const RasterVideo& train_video, Channel target, std::size_t t_in,
                       std::size_t t_out, const CnnTrainConfig& config,
                       std::vector<double>* loss_history) {
  train_video.validate();
  const auto pairs = make_training_pairs(train_video, target, t_in, t_out);
  Network net(Network::default_architecture(t_in, t_out, 3, config.hidden, config.activation));
  auto fitted = sgd_fit(std::move(net), pairs, config.train);
  if (loss_history) *loss_history = std::move(fitted.loss_history);

  CNNPredictor model;
  model.net = std::move(fitted.net);
  model.grid = train_video.grid;
  model.target = target;
  model.meta = train_video.channel_meta(target);
  model.t_in = t_in;
  model.t_out = t_out;
  return model;
}

ModalitySeries predict_cnn(const CNNPredictor& model, const RasterVideo& history) {
  if (history.length() != model.t_in) {
    throw DataError("predict_cnn: expected " + std::to_string(model.t_in) +
                    " history frames, got " + std::to_string(history.length()));
  }
  if (history.grid.rows != model.grid.rows || history.grid.cols != model.grid.cols) {
    throw DataError("predict_cnn: history grid " + std::to_string(history.grid.rows) + "x" +
                    std::to_string(history.grid.cols) + " does not match model grid " +
                    std::to_string(model.grid.rows) + "x" + std::to_string(model.grid.cols));
  }
  const Tensor out = model.net.forward(clip_tensor(history, 0, model.t_in));
  const std::vector<std::size_t> expected{model.t_out, model.grid.rows, model.grid.cols, 1};
  if (out.shape() != expected) throw DataError("predict_cnn: network output has unexpected shape");

  const EpochSeconds start = history.window_start +
                             static_cast<EpochSeconds>(model.t_in) * history.window_length;
  ModalitySeries s = ModalitySeries::zeros(model.meta.name, history.grid, start,
                                           history.window_length, model.t_out);
  const std::size_t cells = model.grid.cell_count();
  const double lo = model.meta.vmin, hi = model.meta.vmax;
  for (std::size_t t = 0; t < model.t_out; ++t) {
    for (std::size_t k = 0; k < cells; ++k) {
      s.frames[t][k] = std::clamp(lo + out[t * cells + k] * (hi - lo), lo, hi);
    }
  }
  return s;
}

// ---- persistence ----------------------------------------------------------

namespace {

constexpr char kPredMagic[4] = {'R', 'F', 'P', 'M'};
constexpr std::uint16_t kPredVersion = 1;

void put_grid(std::ostream& out, const GridSpec& g) {
  binio::put<double>(out, g.lon_min);
  binio::put<double>(out, g.lon_max);
  binio::put<double>(out, g.lat_min);
  binio::put<double>(out, g.lat_max);
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(g.rows));
  binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(g.cols));
}

GridSpec get_grid(std::istream& in) {
  GridSpec g;
  g.lon_min = binio::get<double>(in, "grid");
  g.lon_max = binio::get<double>(in, "grid");
  g.lat_min = binio::get<double>(in, "grid");
  g.lat_max = binio::get<double>(in, "grid");
  g.rows = binio::get<std::uint32_t>(in, "grid");
  g.cols = binio::get<std::uint32_t>(in, "grid");
  g.validate();
  return g;
}

void put_meta(std::ostream& out, const ChannelMeta& m) {
  binio::put_string(out, m.name);
  binio::put<double>(out, m.vmin);
  binio::put<double>(out, m.vmax);
}

ChannelMeta get_meta(std::istream& in) {
  ChannelMeta m;
  m.name = binio::get_string(in, "channel name");
  m.vmin = binio::get<double>(in, "vmin");
  m.vmax = binio::get<double>(in, "vmax");
  return m;
}

void put_values(std::ostream& out, const std::vector<double>& v) {
  binio::put<std::uint64_t>(out, v.size());
  for (double d : v) binio::put<double>(out, d);
}

std::vector<double> get_values(std::istream& in, std::size_t expected, const char* what) {
  const auto n = binio::get<std::uint64_t>(in, what);
  if (n != expected) throw DataError(std::string("predictor file: bad length for ") + what);
  std::vector<double> v(n);
  for (auto& d : v) d = binio::get<double>(in, what);
  return v;
}

}  // namespace

void write_predictor(const Predictor& model, std::ostream& sink) {
  sink.write(kPredMagic, 4);
  binio::put<std::uint16_t>(sink, kPredVersion);
  if (const auto* ha = std::get_if<HAModel>(&model)) {
    binio::put<std::uint8_t>(sink, 1);
    put_grid(sink, ha->grid);
    binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(ha->period));
    for (const auto& f : ha->slot_means) put_values(sink, f);
  } else if (const auto* var = std::get_if<VARModel>(&model)) {
    binio::put<std::uint8_t>(sink, 2);
    put_grid(sink, var->grid);
    binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(var->lag));
    binio::put<std::uint8_t>(sink, var->has_intercept ? 1 : 0);
    binio::put<std::uint64_t>(sink, var->cells.size());
    for (auto c : var->cells) binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(c));
    for (const auto& A : var->coefficients) put_values(sink, A);
    put_values(sink, var->intercept);
    binio::put<std::uint8_t>(sink, var->bounds ? 1 : 0);
    if (var->bounds) put_meta(sink, *var->bounds);
  } else {
    const auto& cnn = std::get<CNNPredictor>(model);
    binio::put<std::uint8_t>(sink, 3);
    put_grid(sink, cnn.grid);
    binio::put<std::uint8_t>(sink, static_cast<std::uint8_t>(cnn.target));
    put_meta(sink, cnn.meta);
    binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(cnn.t_in));
    binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(cnn.t_out));
    write_network(cnn.net, sink);
  }
  if (!sink) throw DataError("predictor file: write failed");
}

Predictor read_predictor(std::istream& source) {
  char magic[4] = {};
  source.read(magic, 4);
  if (source.gcount() != 4 || std::string_view(magic, 4) != std::string_view(kPredMagic, 4)) {
    throw DataError("not a predictor file (bad magic)");
  }
  if (binio::get<std::uint16_t>(source, "version") != kPredVersion) {
    throw DataError("predictor file: unsupported version");
  }
  const auto kind = binio::get<std::uint8_t>(source, "kind");
  switch (kind) {
    case 1: {
      HAModel ha;
      ha.grid = get_grid(source);
      ha.period = binio::get<std::uint32_t>(source, "period");
      if (ha.period == 0) throw DataError("predictor file: zero HA period");
      for (std::size_t s = 0; s < ha.period; ++s) {
        ha.slot_means.push_back(get_values(source, ha.grid.cell_count(), "slot mean"));
      }
      return ha;
    }
    case 2: {
      VARModel var;
      var.grid = get_grid(source);
      var.lag = binio::get<std::uint32_t>(source, "lag");
      var.has_intercept = binio::get<std::uint8_t>(source, "intercept flag") != 0;
      const auto d = binio::get<std::uint64_t>(source, "cell count");
      if (d == 0 || d > var.grid.cell_count()) throw DataError("predictor file: bad VAR cell count");
      for (std::uint64_t i = 0; i < d; ++i) {
        const std::size_t c = binio::get<std::uint32_t>(source, "cell");
        if (c >= var.grid.cell_count()) throw DataError("predictor file: VAR cell out of range");
        var.cells.push_back(c);
      }
      for (std::size_t i = 0; i < var.lag; ++i) {
        var.coefficients.push_back(get_values(source, d * d, "VAR coefficients"));
      }
      var.intercept = get_values(source, d, "VAR intercept");
      if (binio::get<std::uint8_t>(source, "bounds flag") != 0) var.bounds = get_meta(source);
      return var;
    }
    case 3: {
      CNNPredictor cnn;
      cnn.grid = get_grid(source);
      const auto ch = binio::get<std::uint8_t>(source, "target channel");
      if (ch > 2) throw DataError("predictor file: bad target channel");
      cnn.target = static_cast<Channel>(ch);
      cnn.meta = get_meta(source);
      cnn.t_in = binio::get<std::uint32_t>(source, "t_in");
      cnn.t_out = binio::get<std::uint32_t>(source, "t_out");
      cnn.net = read_network(source);
      return cnn;
    }
    default:
      throw DataError("predictor file: unknown kind " + std::to_string(kind));
  }
}

}  // namespace rasterfusion
