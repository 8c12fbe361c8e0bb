#include "rasterfusion/rvstore.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

#include "rasterfusion/binio.hpp"
#include "rasterfusion/errors.hpp"

namespace rasterfusion {

namespace {

constexpr std::uint64_t kU32Max = std::numeric_limits<std::uint32_t>::max();

void require_u32(std::uint64_t v, const char* what) {
  if (v > kU32Max) throw DataError(std::string("RVID: ") + what + " does not fit in u32");
}

void check_frame_index(const RasterVideo& video, std::size_t t) {
  if (t >= video.length()) {
    throw std::out_of_range("frame index " + std::to_string(t) + " out of range (T = " +
                            std::to_string(video.length()) + ")");
  }
}

}  // namespace

std::size_t rv_header_size(const RasterVideo& video) {
  std::size_t n = 4 + 2 + 3 * 4 + 8 + 4 + 4 * 8;
  for (const auto& m : video.meta) n += 4 + m.name.size() + 2 * 8;
  return n;
}

std::size_t write_rv(const RasterVideo& video, std::ostream& sink) {
  video.validate();
  require_u32(video.grid.rows, "rows");
  require_u32(video.grid.cols, "cols");
  require_u32(video.length(), "T");
  if (static_cast<std::uint64_t>(video.window_length) > kU32Max) {
    throw DataError("RVID: window_length does not fit in u32");
  }

  sink.write(kRvMagic, 4);
  binio::put<std::uint16_t>(sink, kRvVersion);
  binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(video.grid.rows));
  binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(video.grid.cols));
  binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(video.length()));
  binio::put<std::int64_t>(sink, video.window_start);
  binio::put<std::uint32_t>(sink, static_cast<std::uint32_t>(video.window_length));
  binio::put<double>(sink, video.grid.lon_min);
  binio::put<double>(sink, video.grid.lon_max);
  binio::put<double>(sink, video.grid.lat_min);
  binio::put<double>(sink, video.grid.lat_max);
  for (const auto& m : video.meta) {
    binio::put_string(sink, m.name);
    binio::put<double>(sink, m.vmin);
    binio::put<double>(sink, m.vmax);
  }
  std::size_t payload = 0;
  for (const auto& f : video.frames) {
    sink.write(reinterpret_cast<const char*>(f.pixels.data()),
               static_cast<std::streamsize>(f.pixels.size()));
    payload += f.pixels.size();
  }
  if (!sink) throw DataError("RVID: write to sink failed");
  return rv_header_size(video) + payload;
}

RasterVideo read_rv(std::istream& source) {
  char magic[4] = {};
  source.read(magic, 4);
  if (source.gcount() != 4 || std::memcmp(magic, kRvMagic, 4) != 0) {
    throw DataError("not a raster video (bad magic)");
  }
  const auto version = binio::get<std::uint16_t>(source, "version");
  if (version != kRvVersion) {
    throw DataError("unsupported RVID version " + std::to_string(version));
  }
  RasterVideo video;
  video.grid.rows = binio::get<std::uint32_t>(source, "rows");
  video.grid.cols = binio::get<std::uint32_t>(source, "cols");
  const std::size_t T = binio::get<std::uint32_t>(source, "T");
  video.window_start = binio::get<std::int64_t>(source, "window_start");
  video.window_length = binio::get<std::uint32_t>(source, "window_length");
  video.grid.lon_min = binio::get<double>(source, "lon_min");
  video.grid.lon_max = binio::get<double>(source, "lon_max");
  video.grid.lat_min = binio::get<double>(source, "lat_min");
  video.grid.lat_max = binio::get<double>(source, "lat_max");
  for (auto& m : video.meta) {
    m.name = binio::get_string(source, "channel name");
    m.vmin = binio::get<double>(source, "vmin");
    m.vmax = binio::get<double>(source, "vmax");
  }
  if (video.grid.rows == 0 || video.grid.cols == 0 || T == 0) {
    throw DataError("RVID: dimensions must be positive");
  }

  const std::size_t frame_bytes = video.grid.cell_count() * 3;
  const std::uint64_t expected = static_cast<std::uint64_t>(frame_bytes) * T;
  std::uint64_t got = 0;
  video.frames.reserve(std::min<std::size_t>(T, 4096));
  for (std::size_t t = 0; t < T; ++t) {
    auto& f = video.frames.emplace_back();
    f.pixels.resize(frame_bytes);
    source.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(frame_bytes));
    got += static_cast<std::uint64_t>(source.gcount());
    if (source.gcount() != static_cast<std::streamsize>(frame_bytes)) {
      throw DataError("RVID: truncated payload, expected " + std::to_string(expected) +
                      " bytes, got " + std::to_string(got));
    }
  }
  video.validate();
  return video;
}

void export_pgm(const RasterVideo& video, std::size_t t, Channel channel, std::ostream& sink) {
  check_frame_index(video, t);
  const auto& px = video.frames[t].pixels;
  const auto ch = static_cast<std::size_t>(channel);
  std::vector<std::uint8_t> plane(video.grid.cell_count());
  for (std::size_t k = 0; k < plane.size(); ++k) plane[k] = px[k * 3 + ch];
  write_pgm(video.grid.rows, video.grid.cols, plane, sink);
}

void write_pgm(std::size_t rows, std::size_t cols, std::span<const std::uint8_t> plane,
               std::ostream& sink) {
  if (plane.size() != rows * cols) throw DataError("PGM: plane size does not match dimensions");
  sink << "P5\n" << cols << ' ' << rows << "\n255\n";
  sink.write(reinterpret_cast<const char*>(plane.data()), static_cast<std::streamsize>(plane.size()));
  if (!sink) throw DataError("PGM: write to sink failed");
}

void export_ppm(const RasterVideo& video, std::size_t t, std::ostream& sink) {
  check_frame_index(video, t);
  const auto& grid = video.grid;
  sink << "P6\n" << grid.cols << ' ' << grid.rows << "\n255\n";
  const auto& px = video.frames[t].pixels;
  sink.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!sink) throw DataError("PPM: write to sink failed");
}

}  // namespace rasterfusion
