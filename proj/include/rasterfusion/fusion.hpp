#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rasterfusion/geogrid.hpp"
#include "rasterfusion/ingest.hpp"

namespace rasterfusion {

/// Quantization bounds for one channel.
struct ChannelMeta {
  std::string name;
  double vmin = 0.0;
  double vmax = 0.0;

  /// Physical value spacing between adjacent byte levels.
  double step() const { return (vmax - vmin) / 255.0; }

  bool operator==(const ChannelMeta&) const = default;
};

enum class Channel : std::uint8_t { R = 0, G = 1, B = 2 };

Channel parse_channel(std::string_view tag);
char to_char(Channel ch);

/// rows x cols x 3 bytes, row-major with interleaved R,G,B.
struct RasterFrame {
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(std::size_t row, std::size_t col, Channel ch, std::size_t cols) const {
    return pixels[(row * cols + col) * 3 + static_cast<std::size_t>(ch)];
  }

  bool operator==(const RasterFrame&) const = default;
};

struct RasterVideo {
  GridSpec grid;
  EpochSeconds window_start = 0;
  std::int64_t window_length = 1;
  std::array<ChannelMeta, 3> meta;
  std::vector<RasterFrame> frames;

  std::size_t length() const { return frames.size(); }
  std::uint8_t at(std::size_t t, std::size_t row, std::size_t col, Channel ch) const {
    return frames[t].at(row, col, ch, grid.cols);
  }
  const ChannelMeta& channel_meta(Channel ch) const { return meta[static_cast<std::size_t>(ch)]; }

  /// Throws DataError if frames are missing or do not match the grid.
  void validate() const;

  /// Frames [begin, end) with the window start shifted accordingly.
  RasterVideo slice(std::size_t begin, std::size_t end) const;

  bool operator==(const RasterVideo&) const = default;
};

/// Global min/max over every value of every frame.
ChannelMeta channel_stats(const ModalitySeries& series);

/// Round-half-up onto 0..255 after clamping into [vmin, vmax]. Degenerate
/// bounds encode to 0.
std::uint8_t encode_value(double v, const ChannelMeta& meta);

double decode_value(std::uint8_t b, const ChannelMeta& meta);

/// Packs three aligned series into R, G and B using each series' own bounds.
/// Throws DataError naming the first mismatching dimension.
RasterVideo fuse(const ModalitySeries& r, const ModalitySeries& g, const ModalitySeries& b);

/// Dequantizes one channel back into physical units.
ModalitySeries extract_channel(const RasterVideo& video, Channel channel);

}  // namespace rasterfusion
