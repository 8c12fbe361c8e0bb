#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>

#include "rasterfusion/fusion.hpp"

namespace rasterfusion {

// RVID container, all integers and floats little-endian:
//
//   "RVID"                     4 bytes
//   version                    u16 (= 1)
//   rows, cols, T              u32 x3
//   window_start               i64, epoch seconds
//   window_length              u32, seconds
//   lon_min lon_max lat_min lat_max   f64 x4
//   3 x { name_len u32, name UTF-8, vmin f64, vmax f64 }   (R, G, B)
//   payload                    T*rows*cols*3 bytes in (t, row, col, channel) order
inline constexpr char kRvMagic[4] = {'R', 'V', 'I', 'D'};
inline constexpr std::uint16_t kRvVersion = 1;

/// Size in bytes of the header write_rv emits for this video.
std::size_t rv_header_size(const RasterVideo& video);

/// Returns the number of bytes written. Throws DataError on an invalid video
/// or a failed sink.
std::size_t write_rv(const RasterVideo& video, std::ostream& sink);

RasterVideo read_rv(std::istream& source);

/// Binary PGM (P5) of one channel of frame t.
void export_pgm(const RasterVideo& video, std::size_t t, Channel channel, std::ostream& sink);

/// Binary PGM of an arbitrary byte plane, row-major from the north edge.
void write_pgm(std::size_t rows, std::size_t cols, std::span<const std::uint8_t> plane,
               std::ostream& sink);

/// Binary PPM (P6) of the full RGB frame t.
void export_ppm(const RasterVideo& video, std::size_t t, std::ostream& sink);

}  // namespace rasterfusion
