#include "rasterfusion/ingest.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "rasterfusion/errors.hpp"

namespace rasterfusion {
namespace {

const GridSpec kGrid{135.0, 135.5, 34.5, 35.0, 5, 5};
constexpr EpochSeconds kStart = 1561968000;  // 2019-07-01T08:00:00Z

std::vector<ModalityRecord> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_records(in);
}

TEST(ParseRecords, MapsFieldsDirectly) {
  const auto recs = parse("timestamp,lon,lat,value\n2019-07-01T08:00:00Z,135.1,34.9,42.5\n");
  ASSERT_EQ(1u, recs.size());
  EXPECT_EQ(kStart, recs[0].timestamp);
  EXPECT_DOUBLE_EQ(135.1, recs[0].lon);
  EXPECT_DOUBLE_EQ(34.9, recs[0].lat);
  EXPECT_DOUBLE_EQ(42.5, recs[0].value);
}

TEST(ParseRecords, HeaderOnlyAndEmptyYieldNothing) {
  EXPECT_TRUE(parse("timestamp,lon,lat,value\n").empty());
  EXPECT_TRUE(parse("").empty());
}

TEST(ParseRecords, BadValueNamesLine) {
  std::string text = "timestamp,lon,lat,value\n";
  for (int i = 0; i < 5; ++i) text += "2019-07-01T08:00:00Z,135.1,34.9,1\n";
  text += "2019-07-01T08:00:00Z,135.1,34.9,abc\n";  // line 7
  try {
    parse(text);
    FAIL() << "expected a parse error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
  }
}

TEST(ParseRecords, MissingColumnAndBadTimestamp) {
  EXPECT_THROW(parse("timestamp,lon,value\n"), DataError);
  EXPECT_THROW(parse("timestamp,lon,lat,value\n2019-13-01T08:00:00Z,1,2,3\n"), DataError);
  EXPECT_THROW(parse("timestamp,lon,lat,value\n2019-07-01T08:00:00Z,1,2\n"), DataError);
}

TEST(ParseRecords, ReordersColumnsByHeader) {
  const auto recs = parse("value,lat,lon,timestamp,extra\n3,34.9,135.1,2019-07-01T08:00:00Z,x\n");
  ASSERT_EQ(1u, recs.size());
  EXPECT_DOUBLE_EQ(3.0, recs[0].value);
  EXPECT_DOUBLE_EQ(135.1, recs[0].lon);
}

TEST(WriteRecords, ParsesBackExactly) {
  std::vector<ModalityRecord> recs{{kStart, 135.123456789, 34.987654321, 0.1},
                                   {kStart + 60, 135.0, 35.0, -1e-300}};
  std::stringstream io;
  write_records(io, recs);
  EXPECT_EQ(recs, parse_records(io));
}

TEST(Aggregate, MeanOfTwoRecordsInOneCell) {
  std::vector<ModalityRecord> recs{{kStart + 10, 135.05, 34.95, 10.0},
                                   {kStart + 20, 135.06, 34.96, 20.0}};
  const auto res = aggregate(recs, kGrid, kStart, 3600, 2, Aggregator::Mean);
  EXPECT_EQ(0u, res.skipped);
  EXPECT_DOUBLE_EQ(15.0, res.series.at(0, 0, 0));
  EXPECT_DOUBLE_EQ(0.0, res.series.at(1, 0, 0));
}

TEST(Aggregate, NoRecordsGivesZeroFrames) {
  const auto res = aggregate({}, kGrid, kStart, 3600, 3, Aggregator::Max);
  ASSERT_EQ(3u, res.series.length());
  for (const auto& f : res.series.frames) {
    for (double v : f) EXPECT_EQ(0.0, v);
  }
}

TEST(Aggregate, CountMarksSingleCell) {
  std::vector<ModalityRecord> recs{{kStart, 135.45, 34.55, 99.0}};
  const auto res = aggregate(recs, kGrid, kStart, 3600, 1, Aggregator::Count);
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_EQ((r == 4 && c == 4) ? 1.0 : 0.0, res.series.at(0, r, c));
    }
  }
}

TEST(Aggregate, HalfOpenWindowsAndSkips) {
  std::vector<ModalityRecord> recs{
      {kStart + 3599, 135.15, 34.95, 1.0},   // window 0
      {kStart + 3600, 135.15, 34.95, 2.0},   // window 1
      {kStart - 1, 135.15, 34.95, 3.0},      // before start
      {kStart + 7200, 135.15, 34.95, 4.0},   // after the last window
      {kStart, 136.0, 34.95, 5.0},          // outside the box
  };
  const auto res = aggregate(recs, kGrid, kStart, 3600, 2, Aggregator::Sum);
  EXPECT_EQ(3u, res.skipped);
  EXPECT_DOUBLE_EQ(1.0, res.series.at(0, 0, 1));
  EXPECT_DOUBLE_EQ(2.0, res.series.at(1, 0, 1));
}

TEST(Aggregate, MaxKeepsLargest) {
  std::vector<ModalityRecord> recs{{kStart, 135.15, 34.95, -3.0}, {kStart, 135.15, 34.95, -7.0}};
  const auto res = aggregate(recs, kGrid, kStart, 3600, 1, Aggregator::Max);
  EXPECT_DOUBLE_EQ(-3.0, res.series.at(0, 0, 1));
}

std::vector<ModalityRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> lon(134.9, 135.6), lat(34.4, 35.1), val(-5, 5);
  std::uniform_int_distribution<EpochSeconds> ts(kStart - 1000, kStart + 4 * 3600 + 1000);
  std::vector<ModalityRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({ts(rng), lon(rng), lat(rng), val(rng)});
  return out;
}

TEST(AggregateProperty, ShapeAdditivityAndReconciliation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_records(rng, trial * 7);
    auto b = random_records(rng, 13);
    auto both = a;
    both.insert(both.end(), b.begin(), b.end());
    for (Aggregator agg : {Aggregator::Sum, Aggregator::Count}) {
      const auto ra = aggregate(a, kGrid, kStart, 3600, 4, agg);
      const auto rb = aggregate(b, kGrid, kStart, 3600, 4, agg);
      const auto rab = aggregate(both, kGrid, kStart, 3600, 4, agg);
      ASSERT_EQ(4u, rab.series.length());
      for (std::size_t t = 0; t < 4; ++t) {
        ASSERT_EQ(kGrid.cell_count(), rab.series.frames[t].size());
        for (std::size_t k = 0; k < kGrid.cell_count(); ++k) {
          ASSERT_NEAR(ra.series.frames[t][k] + rb.series.frames[t][k], rab.series.frames[t][k],
                      1e-9);
        }
      }
      EXPECT_EQ(ra.skipped + rb.skipped, rab.skipped);
      if (agg == Aggregator::Count) {
        double placed = 0.0;
        for (const auto& f : rab.series.frames) {
          for (double v : f) placed += v;
        }
        EXPECT_EQ(both.size(), static_cast<std::size_t>(placed) + rab.skipped);
      }
    }
  }
}

TEST(GenSynthetic, DeterministicForSeed) {
  const GridSpec g{0, 1, 0, 1, 12, 12};
  const auto a = gen_synthetic(g, 20, 42);
  const auto b = gen_synthetic(g, 20, 42);
  EXPECT_EQ(a.precipitation, b.precipitation);
  EXPECT_EQ(a.congestion, b.congestion);
  EXPECT_EQ(a.tweets, b.tweets);
  const auto c = gen_synthetic(g, 20, 43);
  EXPECT_NE(a.congestion, c.congestion);
}

TEST(GenSynthetic, OffRoadCellsHaveNoCongestion) {
  const GridSpec g{0, 1, 0, 1, 16, 16};
  const auto d = gen_synthetic(g, 30, 3);
  std::size_t on_road = 0;
  for (std::size_t k = 0; k < g.cell_count(); ++k) on_road += d.road_mask[k];
  EXPECT_GT(on_road, 0u);
  EXPECT_LT(on_road, g.cell_count());
  for (const auto& f : d.congestion.frames) {
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
      if (!d.road_mask[k]) ASSERT_EQ(0.0, f[k]);
      ASSERT_GE(f[k], 0.0);
    }
  }
}

// Pooled Pearson correlation over road cells between congestion(t) and
// precipitation(t - lag), computed directly from the generated frames.
double lagged_correlation(const SyntheticData& d, std::size_t lag) {
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  double n = 0;
  for (std::size_t t = lag; t < d.congestion.length(); ++t) {
    for (std::size_t k = 0; k < d.road_mask.size(); ++k) {
      if (!d.road_mask[k]) continue;
      const double x = d.congestion.frames[t][k];
      const double y = d.precipitation.frames[t - lag][k];
      sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y, n += 1;
    }
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  return cov / std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
}

TEST(GenSynthetic, CongestionTracksLaggedPrecipitation) {
  const GridSpec g{0, 1, 0, 1, 32, 32};
  for (std::uint64_t seed : {7u, 11u, 19u}) {
    const auto d = gen_synthetic(g, 200, seed);
    EXPECT_GT(lagged_correlation(d, SyntheticParams{}.lag), 0.5) << "seed " << seed;
  }
}

TEST(GenSynthetic, TooShortIsRejected) {
  EXPECT_THROW(gen_synthetic(kGrid, 3, 1), DataError);
}

TEST(SeriesToRecords, AggregatesBackToSeries) {
  const GridSpec g{135.0, 135.32, 34.6, 34.92, 8, 8};
  SyntheticParams p;
  const auto d = gen_synthetic(g, 10, 9, p);
  const auto recs = series_to_records(d.congestion);
  const auto back = aggregate(recs, g, p.window_start, p.window_length, 10, Aggregator::Mean,
                              "congestion");
  EXPECT_EQ(0u, back.skipped);
  EXPECT_EQ(d.congestion, back.series);
}

}  // namespace
}  // namespace rasterfusion
