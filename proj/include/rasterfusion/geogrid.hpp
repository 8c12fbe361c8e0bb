#pragma once

#include <cstddef>
#include <utility>

namespace rasterfusion {

/// Uniform lon/lat mesh. Each cell is one raster pixel; row 0 is the
/// northernmost band and column 0 the westernmost.
struct GridSpec {
  double lon_min = 0.0;
  double lon_max = 1.0;
  double lat_min = 0.0;
  double lat_max = 1.0;
  std::size_t rows = 1;
  std::size_t cols = 1;

  /// Throws DataError if the bounding box or the dimensions are degenerate.
  void validate() const;

  double cell_width() const { return (lon_max - lon_min) / static_cast<double>(cols); }
  double cell_height() const { return (lat_max - lat_min) / static_cast<double>(rows); }
  std::size_t cell_count() const { return rows * cols; }

  bool operator==(const GridSpec&) const = default;
};

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;

  bool operator==(const CellIndex&) const = default;
};

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
};

/// Maps a coordinate inside the closed bounding box to its cell. Points on the
/// east or south edge clamp into the last column/row. Throws std::out_of_range
/// naming the offending value for points outside the box.
CellIndex cell_of(double lon, double lat, const GridSpec& grid);

/// Geometric centre of a cell. Throws std::out_of_range for an invalid index.
GeoPoint cell_center(CellIndex idx, const GridSpec& grid);

/// Same as cell_of but returns false instead of throwing.
bool try_cell_of(double lon, double lat, const GridSpec& grid, CellIndex& out);

}  // namespace rasterfusion
