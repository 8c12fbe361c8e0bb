#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rasterfusion/config.hpp"
#include "rasterfusion/fusion.hpp"
#include "rasterfusion/ingest.hpp"
#include "rasterfusion/predictors.hpp"

namespace rasterfusion {

/// Frame counts of a temporal prefix/suffix split at floor(T * fraction).
/// Throws DataError when either side ends up with fewer than min_side frames.
std::pair<std::size_t, std::size_t> split_sizes(std::size_t T, double train_fraction,
                                                std::size_t min_side = 1);

std::pair<ModalitySeries, ModalitySeries> split(const ModalitySeries& series, double train_fraction,
                                                std::size_t min_side = 1);
std::pair<RasterVideo, RasterVideo> split(const RasterVideo& video, double train_fraction,
                                          std::size_t min_side = 1);

/// Mean absolute difference over every frame and every selected cell (all
/// cells when `cells` is empty).
double mae(std::span<const Frame> pred, std::span<const Frame> truth,
           std::optional<std::span<const std::size_t>> cells = std::nullopt);

struct ModelScore {
  std::string model;
  double mae_physical = 0.0;
  double mae_bytes = 0.0;
};

struct ReferenceScore {
  std::string model;
  double mae = 0.0;
};

/// Published reference MAEs from a city-scale dataset. Carried in every report
/// for comparison; they are not reproduced by this toolkit.
const std::vector<ReferenceScore>& reference_scores();

struct EvalReport {
  std::vector<ModelScore> models;
  std::vector<ReferenceScore> reference;

  GridSpec grid;
  EpochSeconds window_start = 0;
  std::int64_t window_length = 0;
  std::size_t windows = 0;
  std::size_t train_frames = 0;
  std::size_t test_frames = 0;
  std::uint64_t seed = 0;
  std::size_t t_in = 0;
  std::size_t horizon = 0;
  std::size_t anchors = 0;
  std::string target;
  std::string mask_policy;
  std::size_t mask_cells = 0;
  std::vector<double> cnn_loss_history;

  const ModelScore& score(const std::string& model) const;
};

std::string format_report_text(const EvalReport& report);

/// `model,mae_physical,mae_bytes,is_paper_reference`
std::string format_report_csv(const EvalReport& report);

/// Every model's predictions and the shared truth, aligned anchor by anchor
/// and lead by lead. Exposed so scores can be recomputed independently.
struct EvalPredictions {
  std::vector<Frame> truth;
  std::vector<Frame> ha;
  std::vector<Frame> var;
  std::vector<Frame> cnn;
  std::vector<std::size_t> cells;
  ChannelMeta meta;
};

/// Series for channels R, G, B from the configured sources.
std::array<ModalitySeries, 3> load_modalities(const RunConfig& config);

/// Ingests or generates the three modalities and fuses them.
RasterVideo build_video(const RunConfig& config);

/// Cells whose target channel is non-zero in at least one training frame.
std::vector<std::size_t> road_cells(const RasterVideo& train, Channel target);

/// build -> split -> fit HA, VAR, CNN on the training prefix -> score every
/// model on the same test (window, cell) pairs. Errors are rethrown with the
/// failing stage named.
EvalReport run_experiment(const RunConfig& config, EvalPredictions* predictions = nullptr);

}  // namespace rasterfusion
