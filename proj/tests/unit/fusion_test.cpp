#include "rasterfusion/fusion.hpp"

#include <gtest/gtest.h>

#include <random>

#include "rasterfusion/errors.hpp"

namespace rasterfusion {
namespace {

const GridSpec kGrid2{0, 1, 0, 1, 2, 2};

ModalitySeries series(std::string name, const GridSpec& g, std::vector<std::vector<double>> frames) {
  ModalitySeries s;
  s.name = std::move(name);
  s.grid = g;
  s.window_start = 0;
  s.window_length = 3600;
  s.frames = std::move(frames);
  return s;
}

TEST(ChannelStats, GlobalBoundsOverAllFrames) {
  const GridSpec g{0, 1, 0, 1, 1, 2};
  const auto m = channel_stats(series("x", g, {{0, 10}, {5, 20}}));
  EXPECT_EQ(0.0, m.vmin);
  EXPECT_EQ(20.0, m.vmax);
  EXPECT_EQ("x", m.name);
}

TEST(ChannelStats, DegenerateBounds) {
  const GridSpec g1{0, 1, 0, 1, 1, 1};
  const auto c = channel_stats(series("c", kGrid2, {{3, 3, 3, 3}, {3, 3, 3, 3}}));
  EXPECT_EQ(3.0, c.vmin);
  EXPECT_EQ(3.0, c.vmax);
  const auto one = channel_stats(series("s", g1, {{7}}));
  EXPECT_EQ(7.0, one.vmin);
  EXPECT_EQ(7.0, one.vmax);
}

TEST(EncodeValue, EndpointsMidpointAndClamp) {
  const ChannelMeta m{"m", 0, 100};
  EXPECT_EQ(0, encode_value(0, m));
  EXPECT_EQ(255, encode_value(100, m));
  EXPECT_EQ(128, encode_value(50, m));  // 127.5 rounds half up
  EXPECT_EQ(255, encode_value(150, m));
  EXPECT_EQ(0, encode_value(-3, m));
  EXPECT_EQ(0, encode_value(5, ChannelMeta{"d", 5, 5}));
}

TEST(DecodeValue, EndpointsMidpointAndDegenerate) {
  const ChannelMeta m{"m", 0, 100};
  EXPECT_EQ(0.0, decode_value(0, m));
  EXPECT_EQ(100.0, decode_value(255, m));
  EXPECT_NEAR(50.19607843137255, decode_value(128, m), 1e-12);
  for (int b : {0, 17, 255}) EXPECT_EQ(7.0, decode_value(static_cast<std::uint8_t>(b), {"c", 7, 7}));
}

TEST(QuantizationProperty, RoundTripWithinHalfStepAndMonotone) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1000, 1000);
  for (int i = 0; i < 20000; ++i) {
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const ChannelMeta m{"p", lo, hi};
    std::uniform_real_distribution<double> in(lo, hi);
    const double v = in(rng), w = in(rng);
    ASSERT_LE(std::abs(decode_value(encode_value(v, m), m) - v), (hi - lo) / 510.0 * (1 + 1e-12));
    if (v <= w) ASSERT_LE(encode_value(v, m), encode_value(w, m));
  }
}

TEST(Fuse, AllZeroSeriesGiveBlackVideo) {
  // Bounds 0..1 from an explicit 1 somewhere would change the picture, so
  // exercise zero data: degenerate bounds encode to 0.
  const auto z = series("z", kGrid2, {{0, 0, 0, 0}});
  const auto v = fuse(z, z, z);
  for (auto b : v.frames[0].pixels) EXPECT_EQ(0, b);
}

TEST(Fuse, HandEncodedTwoByTwo) {
  const auto r = series("r", kGrid2, {{0, 10, 5, 2}});     // bounds 0..10
  const auto g = series("g", kGrid2, {{1, 1, 1, 1}});      // degenerate
  const auto b = series("b", kGrid2, {{-1, 3, 1, 2}});     // bounds -1..3
  const auto v = fuse(r, g, b);
  // r: 0, 255, floor(127.5+0.5)=128, floor(51+0.5)=51
  // b: 0, 255, floor(127.5+0.5)=128, floor(191.25+0.5)=191
  const std::vector<std::uint8_t> expected{0, 0, 0, 255, 0, 255, 128, 0, 128, 51, 0, 191};
  EXPECT_EQ(expected, v.frames[0].pixels);
  EXPECT_EQ("r", v.meta[0].name);
  EXPECT_EQ(-1.0, v.meta[2].vmin);
  EXPECT_EQ(3.0, v.meta[2].vmax);
}

TEST(Fuse, ConstantAtMaxFillsPlane) {
  const auto r = series("r", kGrid2, {{0, 9, 9, 9}, {9, 9, 9, 9}});
  const auto g = series("g", kGrid2, {{0, 1, 2, 3}, {3, 2, 1, 0}});
  const auto v = fuse(r, g, g);
  EXPECT_EQ(255, v.at(1, 0, 0, Channel::R));
  EXPECT_EQ(255, v.at(1, 1, 1, Channel::R));
  EXPECT_EQ(0, v.at(1, 1, 1, Channel::G));
  EXPECT_EQ(255, v.at(1, 0, 0, Channel::B));
}

TEST(Fuse, RejectsMismatchNamingDimension) {
  const auto a = series("a", kGrid2, {{0, 0, 0, 0}});
  const auto two = series("b", kGrid2, {{0, 0, 0, 0}, {1, 1, 1, 1}});
  try {
    fuse(a, two, a);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("(T)"), std::string::npos) << e.what();
  }
  const auto wide = series("w", GridSpec{0, 1, 0, 1, 2, 3}, {{0, 0, 0, 0, 0, 0}});
  try {
    fuse(a, a, wide);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("cols"), std::string::npos) << e.what();
  }
}

TEST(ExtractChannel, RecoversEachInputWithinHalfStep) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 50);
  const GridSpec g{0, 1, 0, 1, 6, 5};
  std::array<ModalitySeries, 3> in;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    in[ch] = ModalitySeries::zeros(std::string(1, "rgb"[ch]), g, 0, 60, 7);
    for (auto& f : in[ch].frames) {
      for (auto& v : f) v = u(rng) * (ch + 1);
    }
  }
  const auto video = fuse(in[0], in[1], in[2]);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const auto back = extract_channel(video, static_cast<Channel>(ch));
    const double half = video.meta[ch].step() / 2.0 * (1 + 1e-12);
    for (std::size_t t = 0; t < 7; ++t) {
      for (std::size_t k = 0; k < g.cell_count(); ++k) {
        ASSERT_LE(std::abs(back.frames[t][k] - in[ch].frames[t][k]), half);
      }
    }
  }
}

TEST(ExtractChannel, BlackAndWhitePlanes) {
  RasterVideo v;
  v.grid = kGrid2;
  v.window_length = 60;
  v.meta = {ChannelMeta{"r", 0, 100}, ChannelMeta{"g", 0, 100}, ChannelMeta{"b", 0, 100}};
  v.frames.push_back(RasterFrame{std::vector<std::uint8_t>(12, 0)});
  for (std::size_t k = 0; k < 4; ++k) v.frames[0].pixels[k * 3 + 1] = 255;
  const auto r = extract_channel(v, Channel::R);
  const auto g = extract_channel(v, Channel::G);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(0.0, r.frames[0][k]);
    EXPECT_EQ(100.0, g.frames[0][k]);
  }
}

TEST(Channel, ParseTags) {
  EXPECT_EQ(Channel::G, parse_channel("G"));
  EXPECT_THROW(parse_channel("X"), UsageError);
}

}  // namespace
}  // namespace rasterfusion
