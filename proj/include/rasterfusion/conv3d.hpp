#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rasterfusion/tensor.hpp"

namespace rasterfusion {

/// Zero padding applied on both sides of each axis.
struct Padding3 {
  std::size_t t = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  bool operator==(const Padding3&) const = default;
};

/// Output extents of a stride-1 3D convolution: D + 2*pad - k + 1 per axis.
/// Throws std::invalid_argument when the kernel exceeds the padded input.
std::vector<std::size_t> conv3d_output_shape(const std::vector<std::size_t>& input_shape,
                                             const std::vector<std::size_t>& kernel_shape,
                                             Padding3 pad);

/// Stride-1 cross-correlation.
///   input  (T, H, W, Cin)
///   kernel (Cout, kt, kh, kw, Cin)
///   bias   Cout values
/// returns (T', H', W', Cout).
Tensor conv3d_forward(const Tensor& input, const Tensor& kernel, std::span<const double> bias,
                      Padding3 pad);

struct Conv3dGrads {
  Tensor input;   // same shape as the forward input; empty when not requested
  Tensor kernel;  // same shape as the kernel
  std::vector<double> bias;
};

/// Exact gradients of conv3d_forward given the gradient of its output.
Conv3dGrads conv3d_backward(const Tensor& input, const Tensor& kernel, const Tensor& upstream,
                            Padding3 pad, bool want_input_grad = true);

}  // namespace rasterfusion
