#include "rasterfusion/conv3d.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../support/conv_oracle.hpp"

namespace rasterfusion {
namespace {

using testing::naive_conv3d;
using testing::random_tensor;

TEST(Conv3dForward, IdentityKernel) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor({3, 4, 5, 1}, rng);
  const Tensor k({1, 1, 1, 1, 1}, 1.0);
  EXPECT_EQ(x, conv3d_forward(x, k, std::vector<double>{0.0}, {}));
}

TEST(Conv3dForward, OnesCube) {
  const Tensor x({2, 2, 2, 1}, 1.0);
  const Tensor k({1, 2, 2, 2, 1}, 1.0);
  const Tensor y = conv3d_forward(x, k, std::vector<double>{0.0}, {});
  ASSERT_EQ((std::vector<std::size_t>{1, 1, 1, 1}), y.shape());
  EXPECT_EQ(8.0, y[0]);
}

TEST(Conv3dForward, MatchesNaiveOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({3, 4, 4, 2}, rng);
    const Tensor k = random_tensor({3, 2, 3, 3, 2}, rng);
    const std::vector<double> b{0.1, -0.2, 0.3};
    const Padding3 pad{static_cast<std::size_t>(trial % 2), 1, static_cast<std::size_t>(trial % 3)};
    const Tensor want = naive_conv3d(x, k, b, pad);
    const Tensor got = conv3d_forward(x, k, b, pad);
    ASSERT_EQ(want.shape(), got.shape());
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(want[i], got[i], 1e-10);
  }
}

TEST(Conv3dForward, OutputExtentFormula) {
  EXPECT_EQ((std::vector<std::size_t>{4, 8, 8, 5}),
            conv3d_output_shape({4, 8, 8, 3}, {5, 3, 3, 3, 3}, {1, 1, 1}));
  EXPECT_EQ((std::vector<std::size_t>{2, 8, 8, 5}),
            conv3d_output_shape({4, 8, 8, 3}, {5, 3, 3, 3, 3}, {0, 1, 1}));
}

TEST(Conv3dForward, RejectsOversizedKernel) {
  const Tensor x({2, 2, 2, 1});
  const Tensor k({1, 3, 1, 1, 1});
  EXPECT_THROW(conv3d_forward(x, k, std::vector<double>{0.0}, {}), std::invalid_argument);
  EXPECT_NO_THROW(conv3d_forward(x, k, std::vector<double>{0.0}, {1, 0, 0}));
  const Tensor wrong_c({1, 1, 1, 1, 2});
  EXPECT_THROW(conv3d_forward(x, wrong_c, std::vector<double>{0.0}, {}), std::invalid_argument);
}

TEST(Conv3dForward, Linearity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = random_tensor({3, 5, 4, 2}, rng);
    const Tensor y = random_tensor({3, 5, 4, 2}, rng);
    const Tensor k = random_tensor({2, 3, 3, 3, 2}, rng);
    const std::vector<double> zero(2, 0.0);
    const double a = 1.7, b = -0.6;
    Tensor mix(x.shape());
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
    const Padding3 pad{1, 1, 1};
    const Tensor fx = conv3d_forward(x, k, zero, pad), fy = conv3d_forward(y, k, zero, pad);
    const Tensor fm = conv3d_forward(mix, k, zero, pad);
    for (std::size_t i = 0; i < fm.size(); ++i) ASSERT_NEAR(a * fx[i] + b * fy[i], fm[i], 1e-9);
  }
}

TEST(Conv3dForward, TranslationEquivariantOnInterior) {
  std::mt19937_64 rng(4);
  const std::size_t H = 9, W = 9;
  const Tensor x = random_tensor({2, H, W, 1}, rng);
  Tensor shifted({2, H, W, 1});
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 1; w < W; ++w) shifted.at({t, h, w, 0}) = x.at({t, h, w - 1, 0});
  const Tensor k = random_tensor({1, 1, 3, 3, 1}, rng);
  const std::vector<double> b{0.25};
  const Tensor fx = conv3d_forward(x, k, b, {0, 1, 1});
  const Tensor fs = conv3d_forward(shifted, k, b, {0, 1, 1});
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t h = 1; h + 1 < H; ++h)
      for (std::size_t w = 2; w + 1 < W; ++w)
        ASSERT_NEAR(fx.at({t, h, w - 1, 0}), fs.at({t, h, w, 0}), 1e-12);
}

TEST(Conv3dBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(5);
  const Tensor x = random_tensor({3, 4, 4, 2}, rng);
  const Tensor k = random_tensor({2, 3, 3, 3, 2}, rng);
  const Tensor up({3, 4, 4, 2});
  const auto g = conv3d_backward(x, k, up, {1, 1, 1});
  for (double v : g.input.values()) EXPECT_EQ(0.0, v);
  for (double v : g.kernel.values()) EXPECT_EQ(0.0, v);
  for (double v : g.bias) EXPECT_EQ(0.0, v);
}

TEST(Conv3dBackward, IdentityKernelPassesUpstreamThrough) {
  std::mt19937_64 rng(6);
  const Tensor x = random_tensor({2, 3, 3, 1}, rng);
  const Tensor up = random_tensor({2, 3, 3, 1}, rng);
  const auto g = conv3d_backward(x, Tensor({1, 1, 1, 1, 1}, 1.0), up, {});
  EXPECT_EQ(up, g.input);
}

TEST(Conv3dBackward, ShapeMismatchRejected) {
  const Tensor x({2, 3, 3, 1});
  const Tensor k({1, 1, 1, 1, 1}, 1.0);
  EXPECT_THROW(conv3d_backward(x, k, Tensor({2, 3, 4, 1}), {}), std::invalid_argument);
}

// Objective L = sum(w * conv(x)) so dL/dy = w; compare against central
// differences of L.
TEST(Conv3dBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  const double eps = 1e-5;
  for (int trial = 0; trial < 4; ++trial) {
    Tensor x = random_tensor({3, 4, 3, 2}, rng);
    Tensor k = random_tensor({2, 2, 3, 2, 2}, rng);
    std::vector<double> b{0.3, -0.1};
    const Padding3 pad{1, 1, static_cast<std::size_t>(trial % 2)};
    const auto out_shape = conv3d_output_shape(x.shape(), k.shape(), pad);
    const Tensor w = random_tensor(out_shape, rng);
    auto objective = [&] {
      const Tensor y = conv3d_forward(x, k, b, pad);
      double s = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
      return s;
    };
    const auto g = conv3d_backward(x, k, w, pad);
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + eps;
      const double up = objective();
      param = saved - eps;
      const double down = objective();
      param = saved;
      const double numeric = (up - down) / (2 * eps);
      const double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-12});
      EXPECT_LT(rel, 1e-6) << analytic << " vs " << numeric;
    };
    for (std::size_t i = 0; i < x.size(); ++i) check(x[i], g.input[i]);
    for (std::size_t i = 0; i < k.size(); ++i) check(k[i], g.kernel[i]);
    for (std::size_t i = 0; i < b.size(); ++i) check(b[i], g.bias[i]);
  }
}

}  // namespace
}  // namespace rasterfusion
