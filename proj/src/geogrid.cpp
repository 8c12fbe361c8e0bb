#include "rasterfusion/geogrid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rasterfusion/errors.hpp"

namespace rasterfusion {

void GridSpec::validate() const {
  if (!(std::isfinite(lon_min) && std::isfinite(lon_max) && lon_min < lon_max)) {
    throw DataError("grid: lon_min must be < lon_max");
  }
  if (!(std::isfinite(lat_min) && std::isfinite(lat_max) && lat_min < lat_max)) {
    throw DataError("grid: lat_min must be < lat_max");
  }
  if (rows == 0 || cols == 0) {
    throw DataError("grid: rows and cols must be >= 1");
  }
}

namespace {

std::size_t band(double offset, double extent, std::size_t n) {
  // Multiply before dividing so that exact cell boundaries land where expected
  // even when cell_width is not representable.
  const double pos = std::floor(offset * static_cast<double>(n) / extent);
  if (pos <= 0.0) return 0;
  const auto i = static_cast<std::size_t>(pos);
  return i >= n ? n - 1 : i;
}

}  // namespace

bool try_cell_of(double lon, double lat, const GridSpec& grid, CellIndex& out) {
  if (!(lon >= grid.lon_min && lon <= grid.lon_max)) return false;
  if (!(lat >= grid.lat_min && lat <= grid.lat_max)) return false;
  out.col = band(lon - grid.lon_min, grid.lon_max - grid.lon_min, grid.cols);
  out.row = band(grid.lat_max - lat, grid.lat_max - grid.lat_min, grid.rows);
  return true;
}

CellIndex cell_of(double lon, double lat, const GridSpec& grid) {
  CellIndex idx;
  if (!(lon >= grid.lon_min && lon <= grid.lon_max)) {
    std::ostringstream msg;
    msg << "longitude " << lon << " outside [" << grid.lon_min << ", " << grid.lon_max << "]";
    throw std::out_of_range(msg.str());
  }
  if (!(lat >= grid.lat_min && lat <= grid.lat_max)) {
    std::ostringstream msg;
    msg << "latitude " << lat << " outside [" << grid.lat_min << ", " << grid.lat_max << "]";
    throw std::out_of_range(msg.str());
  }
  try_cell_of(lon, lat, grid, idx);
  return idx;
}

GeoPoint cell_center(CellIndex idx, const GridSpec& grid) {
  if (idx.row >= grid.rows || idx.col >= grid.cols) {
    std::ostringstream msg;
    msg << "cell (" << idx.row << ", " << idx.col << ") outside " << grid.rows << "x"
        << grid.cols << " grid";
    throw std::out_of_range(msg.str());
  }
  return {grid.lon_min + (static_cast<double>(idx.col) + 0.5) * grid.cell_width(),
          grid.lat_max - (static_cast<double>(idx.row) + 0.5) * grid.cell_height()};
}

}  // namespace rasterfusion
