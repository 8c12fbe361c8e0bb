#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rasterfusion/geogrid.hpp"
#include "rasterfusion/timeutil.hpp"

namespace rasterfusion {

struct ModalityRecord {
  EpochSeconds timestamp = 0;
  double lon = 0.0;
  double lat = 0.0;
  double value = 0.0;

  bool operator==(const ModalityRecord&) const = default;
};

/// Header names of the four CSV columns. Columns may appear in any order and
/// extra columns are ignored.
struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string lon = "lon";
  std::string lat = "lat";
  std::string value = "value";
};

/// Dense per-window, per-cell matrices for one modality. Frame t covers
/// [window_start + t*window_length, window_start + (t+1)*window_length).
struct ModalitySeries {
  std::string name;
  GridSpec grid;
  EpochSeconds window_start = 0;
  std::int64_t window_length = 1;
  std::vector<std::vector<double>> frames;  // each rows*cols, row-major

  std::size_t length() const { return frames.size(); }
  double at(std::size_t t, std::size_t r, std::size_t c) const {
    return frames[t][r * grid.cols + c];
  }
  double& at(std::size_t t, std::size_t r, std::size_t c) { return frames[t][r * grid.cols + c]; }

  /// A series of `n` all-zero frames.
  static ModalitySeries zeros(std::string name, const GridSpec& grid, EpochSeconds start,
                              std::int64_t window_length, std::size_t n);

  /// Throws DataError when any invariant is broken (empty, wrong frame sizes,
  /// non-positive window length, non-finite values).
  void validate() const;

  bool operator==(const ModalitySeries&) const = default;
};

/// Parses the `timestamp,lon,lat,value` CSV layout. An empty stream or a
/// header-only stream yields no records. Errors are DataError and carry the
/// 1-based line number.
std::vector<ModalityRecord> parse_records(std::istream& source, const CsvSchema& schema = {});

/// Writes records in the layout parse_records reads.
void write_records(std::ostream& sink, std::span<const ModalityRecord> records);

enum class Aggregator { Mean, Sum, Count, Max };

Aggregator parse_aggregator(std::string_view name);
std::string_view to_string(Aggregator agg);

struct AggregateResult {
  ModalitySeries series;
  std::size_t skipped = 0;  // records outside the time span or the bounding box
};

/// Bins records into n_windows half-open windows and grid cells. Empty cells
/// hold 0.
AggregateResult aggregate(std::span<const ModalityRecord> records, const GridSpec& grid,
                          EpochSeconds window_start, std::int64_t window_length,
                          std::size_t n_windows, Aggregator aggregator,
                          std::string name = {});

/// Generator constants. Congestion follows
///   c(t) = max(0, a*c(t-1) + b*p(t-lag) + noise)
/// on road cells and is exactly 0 elsewhere. Precipitation is a coarse AR(1)
/// lattice bilinearly upsampled to the grid and clipped at 0. Tweet counts are
/// Poisson with rate tweet_base + tweet_gain * c(t).
struct SyntheticParams {
  double a = 0.6;
  double b = 0.3;
  std::size_t lag = 1;
  double congestion_noise = 0.5;
  double precip_mean = 4.0;
  double precip_sd = 4.0;
  double precip_phi = 0.9;
  std::size_t precip_spacing = 8;  // cells between lattice nodes
  double tweet_base = 0.2;
  double tweet_gain = 0.5;
  EpochSeconds window_start = 1561939200;  // 2019-07-01T00:00:00Z
  std::int64_t window_length = 3600;
};

struct SyntheticData {
  ModalitySeries precipitation;
  ModalitySeries congestion;
  ModalitySeries tweets;
  std::vector<bool> road_mask;  // rows*cols, row-major
};

/// Road cells: two horizontal bands at rows/4 and 3*rows/4, two vertical bands
/// at cols/3 and 2*cols/3.
std::vector<bool> synthetic_road_mask(const GridSpec& grid);

/// Deterministic for a fixed seed. Requires T >= 4.
SyntheticData gen_synthetic(const GridSpec& grid, std::size_t T, std::uint64_t seed,
                            const SyntheticParams& params = {});

/// Expands a series to one record per non-zero cell value, placed at the cell
/// centre and the window start. Aggregating the result with Mean (or Sum)
/// reproduces the series.
std::vector<ModalityRecord> series_to_records(const ModalitySeries& series);

}  // namespace rasterfusion
