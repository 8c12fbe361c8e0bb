#include "rasterfusion/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "rasterfusion/errors.hpp"

namespace rasterfusion {

Channel parse_channel(std::string_view tag) {
  if (tag == "R" || tag == "r") return Channel::R;
  if (tag == "G" || tag == "g") return Channel::G;
  if (tag == "B" || tag == "b") return Channel::B;
  throw UsageError("unknown channel '" + std::string(tag) + "' (R|G|B)");
}

char to_char(Channel ch) { return "RGB"[static_cast<std::size_t>(ch)]; }

void RasterVideo::validate() const {
  grid.validate();
  if (frames.empty()) throw DataError("raster video has no frames");
  if (window_length <= 0) throw DataError("raster video has non-positive window length");
  const std::size_t bytes = grid.cell_count() * 3;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].pixels.size() != bytes) {
      throw DataError("raster frame " + std::to_string(t) + " does not match the grid dimensions");
    }
  }
  for (const auto& m : meta) {
    if (!(m.vmin <= m.vmax)) throw DataError("channel '" + m.name + "' has vmin > vmax");
  }
}

RasterVideo RasterVideo::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > frames.size()) throw DataError("raster video slice out of range");
  RasterVideo out;
  out.grid = grid;
  out.window_start = window_start + static_cast<EpochSeconds>(begin) * window_length;
  out.window_length = window_length;
  out.meta = meta;
  out.frames.assign(frames.begin() + static_cast<std::ptrdiff_t>(begin),
                    frames.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

ChannelMeta channel_stats(const ModalitySeries& series) {
  ChannelMeta meta{series.name, 0.0, 0.0};
  bool first = true;
  for (const auto& frame : series.frames) {
    for (double v : frame) {
      if (first) {
        meta.vmin = meta.vmax = v;
        first = false;
      } else {
        meta.vmin = std::min(meta.vmin, v);
        meta.vmax = std::max(meta.vmax, v);
      }
    }
  }
  if (first) throw DataError("channel_stats: series '" + series.name + "' is empty");
  return meta;
}

std::uint8_t encode_value(double v, const ChannelMeta& meta) {
  if (!(meta.vmax > meta.vmin)) return 0;
  if (std::isnan(v)) return 0;
  const double clamped = std::clamp(v, meta.vmin, meta.vmax);
  const double scaled = std::floor((clamped - meta.vmin) / (meta.vmax - meta.vmin) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

double decode_value(std::uint8_t b, const ChannelMeta& meta) {
  if (meta.vmin == meta.vmax) return meta.vmin;
  return meta.vmin + (static_cast<double>(b) / 255.0) * (meta.vmax - meta.vmin);
}

RasterVideo fuse(const ModalitySeries& r, const ModalitySeries& g, const ModalitySeries& b) {
  const std::array<const ModalitySeries*, 3> planes{&r, &g, &b};
  for (const auto* s : planes) s->validate();
  for (std::size_t i = 1; i < 3; ++i) {
    const auto& s = *planes[i];
    const std::string who = "fuse: channel " + std::string(1, "RGB"[i]) + " ('" + s.name + "') ";
    if (s.grid.rows != r.grid.rows) throw DataError(who + "rows mismatch");
    if (s.grid.cols != r.grid.cols) throw DataError(who + "cols mismatch");
    if (!(s.grid == r.grid)) throw DataError(who + "grid bounds mismatch");
    if (s.length() != r.length()) throw DataError(who + "frame count (T) mismatch");
    if (s.window_start != r.window_start) throw DataError(who + "window start mismatch");
    if (s.window_length != r.window_length) throw DataError(who + "window length mismatch");
  }

  RasterVideo video;
  video.grid = r.grid;
  video.window_start = r.window_start;
  video.window_length = r.window_length;
  for (std::size_t i = 0; i < 3; ++i) video.meta[i] = channel_stats(*planes[i]);

  const std::size_t cells = r.grid.cell_count();
  video.frames.resize(r.length());
  for (std::size_t t = 0; t < r.length(); ++t) {
    auto& px = video.frames[t].pixels;
    px.resize(cells * 3);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const auto& src = planes[ch]->frames[t];
      for (std::size_t k = 0; k < cells; ++k) px[k * 3 + ch] = encode_value(src[k], video.meta[ch]);
    }
  }
  return video;
}

ModalitySeries extract_channel(const RasterVideo& video, Channel channel) {
  const auto ch = static_cast<std::size_t>(channel);
  const auto& meta = video.meta[ch];
  ModalitySeries s = ModalitySeries::zeros(meta.name, video.grid, video.window_start,
                                           video.window_length, video.length());
  const std::size_t cells = video.grid.cell_count();
  for (std::size_t t = 0; t < video.length(); ++t) {
    const auto& px = video.frames[t].pixels;
    for (std::size_t k = 0; k < cells; ++k) s.frames[t][k] = decode_value(px[k * 3 + ch], meta);
  }
  return s;
}

}  // namespace rasterfusion
