#include "rasterfusion/rvstore.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "rasterfusion/errors.hpp"

namespace rasterfusion {
namespace {

RasterVideo random_video(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dim(1, 9);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_real_distribution<double> real(-100, 100);
  RasterVideo v;
  v.grid = {real(rng) - 200, real(rng) + 200, real(rng) - 200, real(rng) + 200, dim(rng), dim(rng)};
  v.window_start = static_cast<EpochSeconds>(rng() % 4000000000ULL) - 1000000000;
  v.window_length = 1 + static_cast<std::int64_t>(rng() % 86400);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double a = real(rng), b = real(rng);
    if (a > b) std::swap(a, b);
    std::string name(rng() % 12, 'x');
    for (auto& c : name) c = static_cast<char>('a' + rng() % 26);
    v.meta[ch] = {name, a, b};
  }
  const std::size_t T = dim(rng);
  for (std::size_t t = 0; t < T; ++t) {
    RasterFrame f;
    f.pixels.resize(v.grid.cell_count() * 3);
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(byte(rng));
    v.frames.push_back(std::move(f));
  }
  return v;
}

RasterVideo tiny(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RasterVideo v;
  v.grid = {0, 1, 0, 1, 1, 1};
  v.window_length = 3600;
  v.meta = {ChannelMeta{"congestion", 0, 100}, ChannelMeta{"precipitation", 0, 50},
            ChannelMeta{"tweets", 0, 9}};
  v.frames.push_back(RasterFrame{{r, g, b}});
  return v;
}

TEST(WriteRv, SingleCellVideoHasThreePayloadBytes) {
  const auto v = tiny(1, 2, 3);
  std::ostringstream out;
  const std::size_t n = write_rv(v, out);
  EXPECT_EQ(n, out.str().size());
  EXPECT_EQ(rv_header_size(v) + 3, n);
  // 4+2+12+8+4+32 fixed, then 3 x (4 + name + 16)
  EXPECT_EQ(62u + (4 + 10 + 16) + (4 + 13 + 16) + (4 + 6 + 16), rv_header_size(v));
  EXPECT_EQ("RVID", out.str().substr(0, 4));
  EXPECT_EQ(std::string("\x01\x02\x03", 3), out.str().substr(n - 3));
}

TEST(WriteRv, HeaderIsLittleEndian) {
  auto v = tiny(0, 0, 0);
  v.grid.rows = 1;
  v.window_start = 0x0102030405060708LL;
  std::ostringstream out;
  write_rv(v, out);
  const std::string s = out.str();
  EXPECT_EQ(std::string("\x01\x00", 2), s.substr(4, 2));  // version
  EXPECT_EQ(std::string("\x08\x07\x06\x05\x04\x03\x02\x01", 8), s.substr(18, 8));
}

TEST(ReadRv, RoundTripIsBitwise) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    const auto v = random_video(rng);
    std::stringstream io;
    const std::size_t n = write_rv(v, io);
    EXPECT_EQ(rv_header_size(v) + 3 * v.length() * v.grid.cell_count(), n);
    ASSERT_EQ(v, read_rv(io));
  }
}

TEST(ReadRv, RejectsBadMagic) {
  std::istringstream in("RVIX\x01\x00");
  try {
    read_rv(in);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("not a raster video"), std::string::npos);
  }
}

TEST(ReadRv, RejectsTruncation) {
  std::ostringstream out;
  write_rv(tiny(9, 9, 9), out);
  std::string s = out.str();
  s.pop_back();
  std::istringstream in(s);
  try {
    read_rv(in);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("expected 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("got 2"), std::string::npos) << msg;
  }
}

TEST(ReadRv, RejectsUnknownVersion) {
  std::ostringstream out;
  write_rv(tiny(9, 9, 9), out);
  std::string s = out.str();
  s[4] = 2;
  std::istringstream in(s);
  EXPECT_THROW(read_rv(in), DataError);
}

TEST(ExportPgm, SingleByteFrame) {
  std::ostringstream out;
  export_pgm(tiny(128, 0, 0), 0, Channel::R, out);
  EXPECT_EQ(std::string("P5\n1 1\n255\n\x80", 12), out.str());
}

TEST(ExportPgm, PayloadMatchesChannelPlane) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto v = random_video(rng);
    const std::size_t t = rng() % v.length();
    for (Channel ch : {Channel::R, Channel::G, Channel::B}) {
      std::ostringstream out;
      export_pgm(v, t, ch, out);
      const std::string header = "P5\n" + std::to_string(v.grid.cols) + " " +
                                 std::to_string(v.grid.rows) + "\n255\n";
      const std::string s = out.str();
      ASSERT_EQ(header, s.substr(0, header.size()));
      ASSERT_EQ(header.size() + v.grid.cell_count(), s.size());
      for (std::size_t r = 0; r < v.grid.rows; ++r) {
        for (std::size_t c = 0; c < v.grid.cols; ++c) {
          ASSERT_EQ(v.at(t, r, c, ch),
                    static_cast<std::uint8_t>(s[header.size() + r * v.grid.cols + c]));
        }
      }
    }
  }
}

TEST(ExportPgm, AllZeroFrame) {
  std::ostringstream out;
  export_pgm(tiny(0, 0, 0), 0, Channel::B, out);
  EXPECT_EQ('\0', out.str().back());
}

TEST(ExportPgm, RejectsFrameIndex) {
  std::ostringstream out;
  EXPECT_THROW(export_pgm(tiny(0, 0, 0), 1, Channel::R, out), std::out_of_range);
}

TEST(ExportPpm, WritesInterleavedRgb) {
  std::ostringstream out;
  export_ppm(tiny(1, 2, 3), 0, out);
  EXPECT_EQ(std::string("P6\n1 1\n255\n\x01\x02\x03", 14), out.str());
}

}  // namespace
}  // namespace rasterfusion
