#include "rasterfusion/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "rasterfusion/errors.hpp"
#include "rasterfusion/random.hpp"

namespace rasterfusion {

ModalitySeries ModalitySeries::zeros(std::string name, const GridSpec& grid, EpochSeconds start,
                                     std::int64_t window_length, std::size_t n) {
  ModalitySeries s;
  s.name = std::move(name);
  s.grid = grid;
  s.window_start = start;
  s.window_length = window_length;
  s.frames.assign(n, std::vector<double>(grid.cell_count(), 0.0));
  return s;
}

void ModalitySeries::validate() const {
  grid.validate();
  if (frames.empty()) throw DataError("series '" + name + "' has no frames");
  if (window_length <= 0) throw DataError("series '" + name + "' has non-positive window length");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].size() != grid.cell_count()) {
      throw DataError("series '" + name + "' frame " + std::to_string(t) +
                      " does not match the grid dimensions");
    }
    for (double v : frames[t]) {
      if (!std::isfinite(v)) {
        throw DataError("series '" + name + "' frame " + std::to_string(t) +
                        " holds a non-finite value");
      }
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail_at(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view field, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    fail_at(line, "cannot parse " + column + " '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<ModalityRecord> parse_records(std::istream& source, const CsvSchema& schema) {
  std::vector<ModalityRecord> records;
  std::string line;
  std::size_t line_no = 0;

  // Header.
  while (std::getline(source, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) return records;

  std::string header = line;
  if (header.size() >= 3 && header.compare(0, 3, "\xEF\xBB\xBF") == 0) header.erase(0, 3);
  const auto names = split_commas(header);
  auto column = [&](const std::string& name) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) fail_at(line_no, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - names.begin());
  };
  const std::size_t i_ts = column(schema.timestamp);
  const std::size_t i_lon = column(schema.lon);
  const std::size_t i_lat = column(schema.lat);
  const std::size_t i_val = column(schema.value);
  const std::size_t needed = std::max({i_ts, i_lon, i_lat, i_val}) + 1;

  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() < needed) {
      fail_at(line_no, "expected at least " + std::to_string(needed) + " fields, found " +
                           std::to_string(fields.size()));
    }
    ModalityRecord rec;
    const auto ts = parse_iso8601_utc(fields[i_ts]);
    if (!ts) fail_at(line_no, "cannot parse timestamp '" + std::string(fields[i_ts]) + "'");
    rec.timestamp = *ts;
    rec.lon = parse_double(fields[i_lon], line_no, schema.lon);
    rec.lat = parse_double(fields[i_lat], line_no, schema.lat);
    rec.value = parse_double(fields[i_val], line_no, schema.value);
    records.push_back(rec);
  }
  return records;
}

void write_records(std::ostream& sink, std::span<const ModalityRecord> records) {
  sink << "timestamp,lon,lat,value\n";
  char buf[128];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", r.lon, r.lat, r.value);
    sink << format_iso8601_utc(r.timestamp) << buf;
  }
}

Aggregator parse_aggregator(std::string_view name) {
  if (name == "mean") return Aggregator::Mean;
  if (name == "sum") return Aggregator::Sum;
  if (name == "count") return Aggregator::Count;
  if (name == "max") return Aggregator::Max;
  throw UsageError("unknown aggregator '" + std::string(name) + "' (mean|sum|count|max)");
}

std::string_view to_string(Aggregator agg) {
  switch (agg) {
    case Aggregator::Mean: return "mean";
    case Aggregator::Sum: return "sum";
    case Aggregator::Count: return "count";
    case Aggregator::Max: return "max";
  }
  return "?";
}

AggregateResult aggregate(std::span<const ModalityRecord> records, const GridSpec& grid,
                          EpochSeconds window_start, std::int64_t window_length,
                          std::size_t n_windows, Aggregator aggregator, std::string name) {
  grid.validate();
  if (n_windows == 0) throw DataError("aggregate: n_windows must be >= 1");
  if (window_length <= 0) throw DataError("aggregate: window length must be > 0");

  AggregateResult result;
  result.series = ModalitySeries::zeros(std::move(name), grid, window_start, window_length,
                                        n_windows);
  const std::size_t cells = grid.cell_count();
  std::vector<double> acc(n_windows * cells, 0.0);
  std::vector<std::size_t> hits(n_windows * cells, 0);

  for (const auto& rec : records) {
    const EpochSeconds offset = rec.timestamp - window_start;
    CellIndex idx;
    if (offset < 0 || !try_cell_of(rec.lon, rec.lat, grid, idx)) {
      ++result.skipped;
      continue;
    }
    const auto t = static_cast<std::size_t>(offset / window_length);
    if (t >= n_windows) {
      ++result.skipped;
      continue;
    }
    const std::size_t k = t * cells + idx.row * grid.cols + idx.col;
    switch (aggregator) {
      case Aggregator::Mean:
      case Aggregator::Sum: acc[k] += rec.value; break;
      case Aggregator::Count: acc[k] += 1.0; break;
      case Aggregator::Max: acc[k] = hits[k] == 0 ? rec.value : std::max(acc[k], rec.value); break;
    }
    ++hits[k];
  }

  for (std::size_t t = 0; t < n_windows; ++t) {
    auto& frame = result.series.frames[t];
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t k = t * cells + c;
      if (hits[k] == 0) continue;
      frame[c] = aggregator == Aggregator::Mean ? acc[k] / static_cast<double>(hits[k]) : acc[k];
    }
  }
  return result;
}

std::vector<bool> synthetic_road_mask(const GridSpec& grid) {
  std::vector<bool> mask(grid.cell_count(), false);
  const std::size_t r1 = grid.rows / 4, r2 = (3 * grid.rows) / 4;
  const std::size_t c1 = grid.cols / 3, c2 = (2 * grid.cols) / 3;
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      if (r == r1 || r == r2 || c == c1 || c == c2) mask[r * grid.cols + c] = true;
    }
  }
  return mask;
}

SyntheticData gen_synthetic(const GridSpec& grid, std::size_t T, std::uint64_t seed,
                            const SyntheticParams& params) {
  grid.validate();
  if (T < 4) throw DataError("gen_synthetic: T must be >= 4, got " + std::to_string(T));
  if (params.precip_spacing == 0) throw DataError("gen_synthetic: precip_spacing must be > 0");

  Rng rng(seed);
  const std::size_t cells = grid.cell_count();
  SyntheticData out;
  out.precipitation = ModalitySeries::zeros("precipitation", grid, params.window_start,
                                            params.window_length, T);
  out.congestion = ModalitySeries::zeros("congestion", grid, params.window_start,
                                         params.window_length, T);
  out.tweets = ModalitySeries::zeros("tweets", grid, params.window_start, params.window_length, T);
  out.road_mask = synthetic_road_mask(grid);

  // Coarse precipitation lattice covering the grid with one spare node per axis.
  const std::size_t spacing = params.precip_spacing;
  const std::size_t lr = grid.rows / spacing + 2;
  const std::size_t lc = grid.cols / spacing + 2;
  std::vector<double> lattice(lr * lc);
  for (auto& v : lattice) v = params.precip_mean + params.precip_sd * rng.normal();
  const double innovation = params.precip_sd * std::sqrt(1.0 - params.precip_phi * params.precip_phi);

  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) {
      for (auto& v : lattice) {
        v = params.precip_mean + params.precip_phi * (v - params.precip_mean) +
            innovation * rng.normal();
      }
    }
    auto& precip = out.precipitation.frames[t];
    for (std::size_t r = 0; r < grid.rows; ++r) {
      const double u = (static_cast<double>(r) + 0.5) / static_cast<double>(spacing);
      const auto i = static_cast<std::size_t>(u);
      const double fu = u - static_cast<double>(i);
      for (std::size_t c = 0; c < grid.cols; ++c) {
        const double v = (static_cast<double>(c) + 0.5) / static_cast<double>(spacing);
        const auto j = static_cast<std::size_t>(v);
        const double fv = v - static_cast<double>(j);
        const double value = (1 - fu) * (1 - fv) * lattice[i * lc + j] +
                             (1 - fu) * fv * lattice[i * lc + j + 1] +
                             fu * (1 - fv) * lattice[(i + 1) * lc + j] +
                             fu * fv * lattice[(i + 1) * lc + j + 1];
        precip[r * grid.cols + c] = std::max(0.0, value);
      }
    }
  }

  for (std::size_t t = 0; t < T; ++t) {
    const auto& driver = out.precipitation.frames[t >= params.lag ? t - params.lag : 0];
    auto& cong = out.congestion.frames[t];
    for (std::size_t k = 0; k < cells; ++k) {
      if (!out.road_mask[k]) continue;
      double value;
      if (t == 0) {
        value = params.b * driver[k] / (1.0 - params.a);
      } else {
        value = params.a * out.congestion.frames[t - 1][k] + params.b * driver[k] +
                params.congestion_noise * rng.normal();
      }
      cong[k] = std::max(0.0, value);
    }
    auto& tweets = out.tweets.frames[t];
    for (std::size_t k = 0; k < cells; ++k) {
      tweets[k] = static_cast<double>(rng.poisson(params.tweet_base + params.tweet_gain * cong[k]));
    }
  }
  return out;
}

std::vector<ModalityRecord> series_to_records(const ModalitySeries& series) {
  std::vector<ModalityRecord> records;
  const auto& grid = series.grid;
  for (std::size_t t = 0; t < series.length(); ++t) {
    const EpochSeconds ts = series.window_start + static_cast<EpochSeconds>(t) * series.window_length;
    for (std::size_t r = 0; r < grid.rows; ++r) {
      for (std::size_t c = 0; c < grid.cols; ++c) {
        const double v = series.at(t, r, c);
        if (v == 0.0) continue;
        const auto p = cell_center({r, c}, grid);
        records.push_back({ts, p.lon, p.lat, v});
      }
    }
  }
  return records;
}

}  // namespace rasterfusion
