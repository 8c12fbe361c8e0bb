#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <variant>
#include <vector>

#include "rasterfusion/fusion.hpp"
#include "rasterfusion/ingest.hpp"
#include "rasterfusion/network.hpp"

namespace rasterfusion {

using Frame = std::vector<double>;  // rows*cols, row-major

// ---- Historical Average ---------------------------------------------------

struct HAModel {
  GridSpec grid;
  std::size_t period = 1;
  std::vector<Frame> slot_means;  // one frame per slot

  bool operator==(const HAModel&) const = default;
};

/// Mean of each cell over the training frames sharing slot t mod period.
/// Training frame 0 is slot 0.
HAModel fit_ha(const ModalitySeries& train, std::size_t period);

Frame predict_ha(const HAModel& model, std::size_t slot);

// ---- Vector Autoregression ------------------------------------------------

/// Largest cell vector fitted when no mask is given (a 32x32 grid).
inline constexpr std::size_t kVarMaxCells = 1024;

struct VarOptions {
  bool intercept = true;
  std::vector<std::size_t> cells;  // flattened cell indices; empty means all cells
  std::optional<ChannelMeta> bounds;  // predictions are clipped into [vmin, vmax]
  double ridge = 1e-8;
};

/// y_t = c + sum_i A_i y_{t-i} over the selected cells.
struct VARModel {
  GridSpec grid;
  std::size_t lag = 1;
  bool has_intercept = true;
  std::vector<std::size_t> cells;
  std::vector<std::vector<double>> coefficients;  // lag matrices A_1..A_p, each d*d row-major
  std::vector<double> intercept;                  // d
  std::optional<ChannelMeta> bounds;

  std::size_t dimension() const { return cells.size(); }
  bool operator==(const VARModel&) const = default;
};

/// Ridge-stabilized least squares through the normal equations. Requires
/// train.T >= 2*lag + 1.
VARModel fit_var(const ModalitySeries& train, std::size_t lag, const VarOptions& options = {});

/// history holds exactly `lag` frames, oldest first. Cells outside the
/// model's cell set are 0. Clipping applies only when the model has bounds
/// and `clip` is true.
Frame predict_var(const VARModel& model, std::span<const Frame> history, bool clip = true);

// ---- 3D CNN ---------------------------------------------------------------

struct CNNPredictor {
  Network net;
  GridSpec grid;
  Channel target = Channel::R;
  ChannelMeta meta;
  std::size_t t_in = 4;
  std::size_t t_out = 2;

  bool operator==(const CNNPredictor&) const = default;
};

struct CnnTrainConfig {
  TrainConfig train;
  std::size_t hidden = 8;
  Activation activation = Activation::ReLU;
};

/// Frames [begin, begin+count) of all three channels scaled to [0, 1], shaped
/// (count, rows, cols, 3).
Tensor clip_tensor(const RasterVideo& video, std::size_t begin, std::size_t count);

/// One channel of frames [begin, begin+count) scaled to [0, 1], shaped
/// (count, rows, cols, 1).
Tensor target_tensor(const RasterVideo& video, Channel channel, std::size_t begin,
                     std::size_t count);

/// Every sliding (t_in input frames -> next t_out target frames) pair, in
/// time order: T - t_in - t_out + 1 of them.
std::vector<TrainingPair> make_training_pairs(const RasterVideo& video, Channel target,
                                              std::size_t t_in, std::size_t t_out);

CNNPredictor train_cnn(const RasterVideo& train_video, Channel target, std::size_t t_in,
                       std::size_t t_out, const CnnTrainConfig& config,
                       std::vector<double>* loss_history = nullptr);

/// `history` must hold exactly t_in frames on the predictor's grid. Returns
/// t_out frames in physical units, clamped into the target channel bounds,
/// starting at the window after the history.
ModalitySeries predict_cnn(const CNNPredictor& model, const RasterVideo& history);

// ---- persistence ----------------------------------------------------------

using Predictor = std::variant<HAModel, VARModel, CNNPredictor>;

/// "RFPM", u16 version, u8 kind (1 = HA, 2 = VAR, 3 = CNN), kind payload.
void write_predictor(const Predictor& model, std::ostream& sink);
Predictor read_predictor(std::istream& source);

}  // namespace rasterfusion
