#include "rasterfusion/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include "rasterfusion/config.hpp"
#include "rasterfusion/errors.hpp"
#include "rasterfusion/evalharness.hpp"
#include "rasterfusion/log.hpp"
#include "rasterfusion/predictors.hpp"
#include "rasterfusion/rvstore.hpp"

namespace rasterfusion {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path.string() + "' for writing");
  return f;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path.string() + "'");
  return f;
}

RunConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
  RunConfig cfg = load_config(path);
  if (seed) cfg.seed = *seed;
  return cfg;
}

RasterVideo load_video(const std::string& path) {
  auto in = open_in(path);
  try {
    return read_rv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
  if (!f) throw DataError("write to '" + path.string() + "' failed");
}

void write_prediction_pgm(const std::string& path, const Frame& frame, const GridSpec& grid,
                          const ChannelMeta& meta) {
  std::vector<std::uint8_t> plane(frame.size());
  for (std::size_t k = 0; k < frame.size(); ++k) plane[k] = encode_value(frame[k], meta);
  auto f = open_out(path);
  write_pgm(grid.rows, grid.cols, plane, f);
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string in;
  std::string out;
  std::string out_dir;
  std::string csv;
  std::string channel = "R";
  std::size_t frame = 0;
  std::string model_kind = "cnn";
  std::string model_path;
  std::string pgm_prefix;
  std::size_t horizon = 0;
};

int cmd_synth(const Options& o, std::ostream& out) {
  const RunConfig cfg = load(o.config, o.seed);
  SyntheticParams params;
  params.window_start = cfg.window_start;
  params.window_length = cfg.window_length;
  const SyntheticData data = gen_synthetic(cfg.grid, cfg.window_count, cfg.seed, params);
  const fs::path dir = o.out_dir.empty() ? fs::path(".") : fs::path(o.out_dir);
  for (const auto* s : {&data.precipitation, &data.congestion, &data.tweets}) {
    const auto path = dir / (s->name + ".csv");
    auto f = open_out(path);
    write_records(f, series_to_records(*s));
    out << path.string() << "\n";
  }
  return kExitOk;
}

int cmd_fuse(const Options& o, std::ostream& out) {
  const RunConfig cfg = load(o.config, o.seed);
  const RasterVideo video = build_video(cfg);
  auto f = open_out(o.out);
  const std::size_t bytes = write_rv(video, f);
  out << o.out << ": " << video.length() << " frames, " << bytes << " bytes\n";
  return kExitOk;
}

int cmd_render(const Options& o, std::ostream& out) {
  const RasterVideo video = load_video(o.in);
  const bool color = o.channel == "RGB" || o.channel == "rgb";
  std::string path = o.out;
  if (path.empty()) {
    path = fs::path(o.in).stem().string() + "_t" + std::to_string(o.frame) + "_" +
           (color ? std::string("RGB.ppm") : o.channel + ".pgm");
  }
  if (o.frame >= video.length()) {
    throw UsageError("--t " + std::to_string(o.frame) + " out of range (video has " +
                     std::to_string(video.length()) + " frames)");
  }
  auto f = open_out(path);
  if (color) {
    export_ppm(video, o.frame, f);
  } else {
    export_pgm(video, o.frame, parse_channel(o.channel), f);
  }
  out << path << "\n";
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const RunConfig cfg = load(o.config, o.seed);
  const RasterVideo video = load_video(o.in);
  const Channel target = cfg.target_channel();
  const ModalitySeries series = extract_channel(video, target);
  Predictor model;
  if (o.model_kind == "ha") {
    model = fit_ha(series, cfg.ha_period());
  } else if (o.model_kind == "var") {
    VarOptions opts;
    opts.bounds = video.channel_meta(target);
    if (cfg.mask == MaskPolicy::Road) opts.cells = road_cells(video, target);
    model = fit_var(series, cfg.model.var_lag, opts);
  } else if (o.model_kind == "cnn") {
    CnnTrainConfig tc;
    tc.train.lr = cfg.model.lr;
    tc.train.epochs = cfg.model.epochs;
    tc.train.seed = cfg.seed;
    tc.hidden = cfg.model.hidden;
    std::vector<double> history;
    model = train_cnn(video, target, cfg.model.t_in, cfg.model.t_out, tc, &history);
    for (std::size_t e = 0; e < history.size(); ++e) {
      spdlog::info("epoch {} loss {:.6f}", e, history[e]);
    }
  } else {
    throw UsageError("unknown --model '" + o.model_kind + "' (cnn|ha|var)");
  }
  auto f = open_out(o.out);
  write_predictor(model, f);
  out << o.out << "\n";
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  auto min = open_in(o.model_path);
  const Predictor model = read_predictor(min);
  const RasterVideo video = load_video(o.in);

  std::vector<Frame> frames;
  ChannelMeta meta;
  std::string name;
  if (const auto* cnn = std::get_if<CNNPredictor>(&model)) {
    if (video.length() < cnn->t_in) throw DataError("video shorter than the model's t_in");
    const auto pred = predict_cnn(*cnn, video.slice(video.length() - cnn->t_in, video.length()));
    frames = pred.frames;
    meta = cnn->meta;
  } else if (const auto* ha = std::get_if<HAModel>(&model)) {
    if (ha->grid != video.grid) throw DataError("video grid does not match the model");
    const std::size_t h = o.horizon == 0 ? 1 : o.horizon;
    for (std::size_t lead = 0; lead < h; ++lead) frames.push_back(predict_ha(*ha, video.length() + lead));
    meta = channel_stats(ModalitySeries{"", ha->grid, 0, 1, ha->slot_means});
  } else {
    const auto& var = std::get<VARModel>(model);
    if (var.grid != video.grid) throw DataError("video grid does not match the model");
    if (!var.bounds) throw DataError("VAR model carries no channel bounds");
    meta = *var.bounds;
    Channel target = Channel::R;
    bool found = false;
    for (Channel ch : {Channel::R, Channel::G, Channel::B}) {
      if (!found && video.channel_meta(ch).name == meta.name) {
        target = ch;
        found = true;
      }
    }
    if (!found) throw DataError("video has no channel named '" + meta.name + "'");
    const ModalitySeries series = extract_channel(video, target);
    if (series.length() < var.lag) throw DataError("video shorter than the VAR lag");
    std::vector<Frame> hist(series.frames.end() - static_cast<std::ptrdiff_t>(var.lag),
                            series.frames.end());
    const std::size_t h = o.horizon == 0 ? 1 : o.horizon;
    for (std::size_t lead = 0; lead < h; ++lead) {
      Frame next = predict_var(var, hist);
      hist.erase(hist.begin());
      hist.push_back(next);
      frames.push_back(std::move(next));
    }
  }

  std::vector<ModalityRecord> records;
  for (std::size_t lead = 0; lead < frames.size(); ++lead) {
    const EpochSeconds ts = video.window_start +
                            static_cast<EpochSeconds>(video.length() + lead) * video.window_length;
    for (std::size_t r = 0; r < video.grid.rows; ++r) {
      for (std::size_t c = 0; c < video.grid.cols; ++c) {
        const auto p = cell_center({r, c}, video.grid);
        records.push_back({ts, p.lon, p.lat, frames[lead][r * video.grid.cols + c]});
      }
    }
  }
  {
    auto f = open_out(o.out);
    write_records(f, records);
  }
  out << o.out << "\n";
  if (!o.pgm_prefix.empty()) {
    for (std::size_t lead = 0; lead < frames.size(); ++lead) {
      const std::string path = o.pgm_prefix + "_lead" + std::to_string(lead + 1) + ".pgm";
      write_prediction_pgm(path, frames[lead], video.grid, meta);
      out << path << "\n";
    }
  }
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RunConfig cfg = load(o.config, o.seed);
  const EvalReport report = run_experiment(cfg);
  const std::string text = format_report_text(report);
  if (o.out.empty()) {
    out << text;
  } else {
    write_text(o.out, text);
    out << o.out << "\n";
  }
  if (!o.csv.empty()) {
    write_text(o.csv, format_report_csv(report));
    out << o.csv << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging();
  CLI::App app{"Raster-video fusion and congestion forecasting toolkit", "rasterfusion"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Seed for synthetic data and weight initialization");
  };

  auto* synth = app.add_subcommand("synth", "Write synthetic modality CSVs");
  synth->add_option("--config", o.config, "Run configuration")->required();
  synth->add_option("--out-dir", o.out_dir, "Output directory");
  add_seed(synth);

  auto* fuse_cmd = app.add_subcommand("fuse", "Ingest modalities and write a raster video");
  fuse_cmd->add_option("--config", o.config, "Run configuration")->required();
  fuse_cmd->add_option("--out", o.out, "Output .rvid path")->required();
  add_seed(fuse_cmd);

  auto* render = app.add_subcommand("render", "Export one frame as PGM (one channel) or PPM (RGB)");
  render->add_option("--in", o.in, "Input .rvid")->required();
  render->add_option("--t", o.frame, "Frame index");
  render->add_option("--channel", o.channel, "R, G, B or RGB");
  render->add_option("--out", o.out, "Output image path");

  auto* train = app.add_subcommand("train", "Fit a predictor on a raster video");
  train->add_option("--config", o.config, "Run configuration")->required();
  train->add_option("--in", o.in, "Training .rvid")->required();
  train->add_option("--out", o.out, "Output model path")->required();
  train->add_option("--model", o.model_kind, "cnn, ha or var");
  add_seed(train);

  auto* predict = app.add_subcommand("predict", "Forecast the windows after a raster video");
  predict->add_option("--model", o.model_path, "Model file from train")->required();
  predict->add_option("--in", o.in, "History .rvid (its last frames are used)")->required();
  predict->add_option("--out", o.out, "Output CSV of predicted values")->required();
  predict->add_option("--pgm-prefix", o.pgm_prefix, "Also write one PGM per predicted window");
  predict->add_option("--horizon", o.horizon, "Windows to forecast for HA and VAR models");

  auto* eval = app.add_subcommand("eval", "Run the full comparison and print the report");
  eval->add_option("--config", o.config, "Run configuration")->required();
  eval->add_option("--out", o.out, "Write the text report here instead of stdout");
  eval->add_option("--csv", o.csv, "Also write the CSV report here");
  add_seed(eval);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*fuse_cmd) return cmd_fuse(o, out);
    if (*render) return cmd_render(o, out);
    if (*train) return cmd_train(o, out);
    if (*predict) return cmd_predict(o, out);
    if (*eval) return cmd_eval(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace rasterfusion
