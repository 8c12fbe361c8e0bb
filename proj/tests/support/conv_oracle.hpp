#pragma once

// Test-only reference convolution: direct evaluation of the defining sum,
// written without sharing any code with the production kernel.

#include <cstddef>
#include <random>
#include <vector>

#include "rasterfusion/conv3d.hpp"
#include "rasterfusion/tensor.hpp"

namespace rasterfusion::testing {

inline Tensor naive_conv3d(const Tensor& x, const Tensor& k, const std::vector<double>& bias,
                           Padding3 p) {
  const long T = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const long O = k.dim(0), KT = k.dim(1), KH = k.dim(2), KW = k.dim(3);
  const long To = T + 2 * (long)p.t - KT + 1;
  const long Ho = H + 2 * (long)p.h - KH + 1;
  const long Wo = W + 2 * (long)p.w - KW + 1;
  Tensor y({(std::size_t)To, (std::size_t)Ho, (std::size_t)Wo, (std::size_t)O});
  for (long t = 0; t < To; ++t)
    for (long h = 0; h < Ho; ++h)
      for (long w = 0; w < Wo; ++w)
        for (long o = 0; o < O; ++o) {
          double s = bias[o];
          for (long a = 0; a < KT; ++a)
            for (long b = 0; b < KH; ++b)
              for (long c = 0; c < KW; ++c)
                for (long i = 0; i < C; ++i) {
                  const long ti = t + a - (long)p.t, hi = h + b - (long)p.h, wi = w + c - (long)p.w;
                  if (ti < 0 || ti >= T || hi < 0 || hi >= H || wi < 0 || wi >= W) continue;
                  s += x[((ti * H + hi) * W + wi) * C + i] *
                       k[(((o * KT + a) * KH + b) * KW + c) * C + i];
                }
          y[((t * Ho + h) * Wo + w) * O + o] = s;
        }
  return y;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

}  // namespace rasterfusion::testing
