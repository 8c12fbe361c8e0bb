#include "rasterfusion/evalharness.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "rasterfusion/errors.hpp"

namespace rasterfusion {

std::pair<std::size_t, std::size_t> split_sizes(std::size_t T, double train_fraction,
                                                std::size_t min_side) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw DataError("split: train fraction must lie in (0, 1)");
  }
  const auto train = static_cast<std::size_t>(std::floor(static_cast<double>(T) * train_fraction));
  const std::size_t test = T - train;
  const std::size_t need = std::max<std::size_t>(min_side, 1);
  if (train < need) {
    throw DataError("split: train side has " + std::to_string(train) + " frames, needs at least " +
                    std::to_string(need));
  }
  if (test < need) {
    throw DataError("split: test side has " + std::to_string(test) + " frames, needs at least " +
                    std::to_string(need));
  }
  return {train, test};
}

std::pair<ModalitySeries, ModalitySeries> split(const ModalitySeries& series, double train_fraction,
                                                std::size_t min_side) {
  const auto [n_train, n_test] = split_sizes(series.length(), train_fraction, min_side);
  ModalitySeries train = series, test = series;
  train.frames.assign(series.frames.begin(),
                      series.frames.begin() + static_cast<std::ptrdiff_t>(n_train));
  test.frames.assign(series.frames.begin() + static_cast<std::ptrdiff_t>(n_train),
                     series.frames.end());
  test.window_start = series.window_start + static_cast<EpochSeconds>(n_train) * series.window_length;
  return {std::move(train), std::move(test)};
}

std::pair<RasterVideo, RasterVideo> split(const RasterVideo& video, double train_fraction,
                                          std::size_t min_side) {
  const auto [n_train, n_test] = split_sizes(video.length(), train_fraction, min_side);
  return {video.slice(0, n_train), video.slice(n_train, video.length())};
}

double mae(std::span<const Frame> pred, std::span<const Frame> truth,
           std::optional<std::span<const std::size_t>> cells) {
  if (pred.size() != truth.size()) {
    throw DataError("mae: " + std::to_string(pred.size()) + " predicted frames vs " +
                    std::to_string(truth.size()) + " truth frames");
  }
  if (pred.empty()) throw DataError("mae: no frames to score");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].size() != truth[t].size()) throw DataError("mae: frame sizes differ");
    if (cells && !cells->empty()) {
      for (auto k : *cells) {
        if (k >= pred[t].size()) throw DataError("mae: mask cell out of range");
        sum += std::abs(pred[t][k] - truth[t][k]);
      }
      n += cells->size();
    } else {
      for (std::size_t k = 0; k < pred[t].size(); ++k) sum += std::abs(pred[t][k] - truth[t][k]);
      n += pred[t].size();
    }
  }
  return sum / static_cast<double>(n);
}

const std::vector<ReferenceScore>& reference_scores() {
  static const std::vector<ReferenceScore> kScores = {
      {"Historical Average", 10.24},
      {"Vector Autoregression", 9.44},
      {"Seq2Seq AT+NB", 8.75},
      {"Fusion-3DCNN", 8.13},
  };
  return kScores;
}

const ModelScore& EvalReport::score(const std::string& model) const {
  for (const auto& s : models) {
    if (s.model == model) return s;
  }
  throw std::out_of_range("no score for model '" + model + "'");
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DataError& e) {
    throw DataError(std::string("stage '") + name + "': " + e.what());
  } catch (const UsageError& e) {
    throw UsageError(std::string("stage '") + name + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("stage '") + name + "': " + e.what());
  }
}

}  // namespace

std::string format_report_text(const EvalReport& r) {
  std::ostringstream os;
  os << "Traffic congestion prediction comparison (MAE, lower is better)\n";
  os << "grid        " << r.grid.rows << "x" << r.grid.cols << " cells, lon [" << r.grid.lon_min
     << ", " << r.grid.lon_max << "], lat [" << r.grid.lat_min << ", " << r.grid.lat_max << "]\n";
  os << "windows     " << r.windows << " x " << r.window_length << " s from "
     << format_iso8601_utc(r.window_start) << "\n";
  os << "split       " << r.train_frames << " train / " << r.test_frames << " test frames\n";
  os << "target      " << r.target << ", t_in " << r.t_in << ", horizon " << r.horizon << ", "
     << r.anchors << " test anchors\n";
  os << "mask        " << r.mask_policy << " (" << r.mask_cells << " cells)\n";
  os << "seed        " << r.seed << "\n\n";

  os << pad("model", 26) << pad("MAE (physical)", 16) << "MAE (bytes)\n";
  for (const auto& s : r.models) {
    os << pad(s.model, 26) << pad(fixed(s.mae_physical), 16) << fixed(s.mae_bytes) << "\n";
  }
  os << "\npublished reference (not reproduced)\n";
  for (const auto& s : r.reference) os << pad(s.model, 26) << fixed(s.mae, 2) << "\n";
  return os.str();
}

std::string format_report_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "model,mae_physical,mae_bytes,is_paper_reference\n";
  for (const auto& s : r.models) {
    os << s.model << ',' << fixed(s.mae_physical, 6) << ',' << fixed(s.mae_bytes, 6) << ",0\n";
  }
  for (const auto& s : r.reference) os << s.model << ',' << fixed(s.mae, 2) << ",,1\n";
  return os.str();
}

std::array<ModalitySeries, 3> load_modalities(const RunConfig& config) {
  std::optional<SyntheticData> synthetic;
  std::array<ModalitySeries, 3> out;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& m = config.modalities[i];
    if (m.synthetic()) {
      if (!synthetic) {
        SyntheticParams params;
        params.window_start = config.window_start;
        params.window_length = config.window_length;
        synthetic = gen_synthetic(config.grid, config.window_count, config.seed, params);
      }
      if (m.name == "precipitation") {
        out[i] = synthetic->precipitation;
      } else if (m.name == "congestion") {
        out[i] = synthetic->congestion;
      } else {
        out[i] = synthetic->tweets;
      }
      continue;
    }
    const auto path = config.resolve(m.source);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "' for modality '" + m.name + "'");
    std::vector<ModalityRecord> records;
    try {
      records = parse_records(in);
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    auto agg = aggregate(records, config.grid, config.window_start, config.window_length,
                         config.window_count, m.aggregator, m.name);
    spdlog::info("{}: {} records, {} skipped", m.name, records.size(), agg.skipped);
    out[i] = std::move(agg.series);
  }
  return out;
}

RasterVideo build_video(const RunConfig& config) {
  auto series = stage("ingest", [&] { return load_modalities(config); });
  return stage("fuse", [&] { return fuse(series[0], series[1], series[2]); });
}

std::vector<std::size_t> road_cells(const RasterVideo& train, Channel target) {
  const std::size_t cells = train.grid.cell_count();
  const auto ch = static_cast<std::size_t>(target);
  std::vector<bool> seen(cells, false);
  for (const auto& f : train.frames) {
    for (std::size_t k = 0; k < cells; ++k) seen[k] = seen[k] || f.pixels[k * 3 + ch] != 0;
  }
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < cells; ++k) {
    if (seen[k]) out.push_back(k);
  }
  return out;
}

EvalReport run_experiment(const RunConfig& config, EvalPredictions* predictions) {
  const auto& mc = config.model;
  const RasterVideo video = build_video(config);
  const Channel target = config.target_channel();

  const auto halves = stage("split", [&] {
    return split(video, config.train_fraction, mc.t_in + mc.t_out);
  });
  const RasterVideo& train_video = halves.first;
  const RasterVideo& test_video = halves.second;
  const ModalitySeries train = extract_channel(train_video, target);
  const ModalitySeries test = extract_channel(test_video, target);
  const ChannelMeta& meta = video.channel_meta(target);

  std::vector<std::size_t> cells;
  if (config.mask == MaskPolicy::Road) cells = road_cells(train_video, target);
  if (cells.empty()) {
    if (config.mask == MaskPolicy::Road) spdlog::warn("road mask is empty, scoring all cells");
    cells.resize(video.grid.cell_count());
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = k;
  }
  const bool masked = cells.size() < video.grid.cell_count();

  const std::size_t period = config.ha_period();
  const HAModel ha = stage("fit HA", [&] { return fit_ha(train, period); });
  spdlog::info("HA fitted, period {} windows", period);

  VarOptions var_opts;
  var_opts.bounds = meta;
  if (masked) var_opts.cells = cells;
  const VARModel var = stage("fit VAR", [&] { return fit_var(train, mc.var_lag, var_opts); });
  spdlog::info("VAR fitted, lag {}, {} cells", mc.var_lag, var.dimension());

  CnnTrainConfig cnn_cfg;
  cnn_cfg.train.lr = mc.lr;
  cnn_cfg.train.epochs = mc.epochs;
  cnn_cfg.train.seed = config.seed;
  cnn_cfg.hidden = mc.hidden;
  std::vector<double> history;
  const CNNPredictor cnn = stage("train CNN", [&] {
    return train_cnn(train_video, target, mc.t_in, mc.t_out, cnn_cfg, &history);
  });
  for (std::size_t e = 0; e < history.size(); ++e) {
    spdlog::debug("CNN epoch {} loss {:.6f}", e, history[e]);
  }

  EvalPredictions local;
  EvalPredictions& p = predictions ? *predictions : local;
  p = EvalPredictions{};
  p.cells = cells;
  p.meta = meta;
  const std::size_t horizon = mc.t_out;
  std::size_t anchors = 0;
  stage("evaluate", [&] {
    for (std::size_t a = mc.t_in; a + horizon <= test.length(); ++a) {
      ++anchors;
      const ModalitySeries cnn_out = predict_cnn(cnn, test_video.slice(a - mc.t_in, a));
      std::vector<Frame> var_hist(test.frames.begin() + static_cast<std::ptrdiff_t>(a - mc.var_lag),
                                  test.frames.begin() + static_cast<std::ptrdiff_t>(a));
      for (std::size_t lead = 0; lead < horizon; ++lead) {
        p.truth.push_back(test.frames[a + lead]);
        p.ha.push_back(predict_ha(ha, train.length() + a + lead));
        Frame next = predict_var(var, var_hist);
        var_hist.erase(var_hist.begin());
        var_hist.push_back(next);
        p.var.push_back(std::move(next));
        p.cnn.push_back(cnn_out.frames[lead]);
      }
    }
    return 0;
  });

  auto to_bytes = [&](const std::vector<Frame>& frames) {
    std::vector<Frame> out;
    out.reserve(frames.size());
    for (const auto& f : frames) {
      Frame b(f.size());
      for (std::size_t k = 0; k < f.size(); ++k) b[k] = encode_value(f[k], meta);
      out.push_back(std::move(b));
    }
    return out;
  };
  const auto truth_bytes = to_bytes(p.truth);
  auto score = [&](const char* name, const std::vector<Frame>& pred) {
    return ModelScore{name, mae(pred, p.truth, cells), mae(to_bytes(pred), truth_bytes, cells)};
  };

  EvalReport report;
  report.models = {score("Historical Average", p.ha), score("Vector Autoregression", p.var),
                   score("Fusion-3DCNN", p.cnn)};
  report.reference = reference_scores();
  report.grid = video.grid;
  report.window_start = video.window_start;
  report.window_length = video.window_length;
  report.windows = video.length();
  report.train_frames = train.length();
  report.test_frames = test.length();
  report.seed = config.seed;
  report.t_in = mc.t_in;
  report.horizon = horizon;
  report.anchors = anchors;
  report.target = config.target;
  report.mask_policy = config.mask == MaskPolicy::Road ? "road" : "all";
  report.mask_cells = cells.size();
  report.cnn_loss_history = std::move(history);
  return report;
}

}  // namespace rasterfusion
