#include "rasterfusion/conv3d.hpp"

#include <sstream>
#include <stdexcept>

namespace rasterfusion {

namespace {

std::string dims(const std::vector<std::size_t>& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

// (Cout, kt, kh, kw, Cin) -> (kt, kh, kw, Cin, Cout) so the innermost loops
// run over contiguous output channels.
std::vector<double> to_tap_major(const Tensor& kernel) {
  const std::size_t cout = kernel.dim(0);
  const std::size_t taps_cin = kernel.size() / cout;
  std::vector<double> out(kernel.size());
  for (std::size_t oc = 0; oc < cout; ++oc) {
    for (std::size_t j = 0; j < taps_cin; ++j) out[j * cout + oc] = kernel[oc * taps_cin + j];
  }
  return out;
}

Tensor from_tap_major(const std::vector<double>& tm, const std::vector<std::size_t>& shape) {
  Tensor kernel(shape);
  const std::size_t cout = shape[0];
  const std::size_t taps_cin = kernel.size() / cout;
  for (std::size_t oc = 0; oc < cout; ++oc) {
    for (std::size_t j = 0; j < taps_cin; ++j) kernel[oc * taps_cin + j] = tm[j * cout + oc];
  }
  return kernel;
}

struct Geometry {
  std::size_t T, H, W, cin;
  std::size_t kt, kh, kw, cout;
  std::size_t To, Ho, Wo;
  Padding3 pad;
};

Geometry geometry(const Tensor& input, const Tensor& kernel, Padding3 pad) {
  const auto out = conv3d_output_shape(input.shape(), kernel.shape(), pad);
  return {input.dim(0), input.dim(1), input.dim(2), input.dim(3),
          kernel.dim(1), kernel.dim(2), kernel.dim(3), kernel.dim(0),
          out[0], out[1], out[2], pad};
}

// Signed input coordinate of output position o and tap d; false when it falls
// into the zero padding.
inline bool source(std::size_t o, std::size_t d, std::size_t pad, std::size_t extent,
                   std::size_t& i) {
  const std::size_t shifted = o + d;
  if (shifted < pad) return false;
  i = shifted - pad;
  return i < extent;
}

}  // namespace

std::vector<std::size_t> conv3d_output_shape(const std::vector<std::size_t>& input_shape,
                                             const std::vector<std::size_t>& kernel_shape,
                                             Padding3 pad) {
  if (input_shape.size() != 4) {
    throw std::invalid_argument("conv3d: input must be (T,H,W,C), got " + dims(input_shape));
  }
  if (kernel_shape.size() != 5) {
    throw std::invalid_argument("conv3d: kernel must be (Cout,kt,kh,kw,Cin), got " +
                                dims(kernel_shape));
  }
  if (kernel_shape[4] != input_shape[3]) {
    throw std::invalid_argument("conv3d: kernel expects " + std::to_string(kernel_shape[4]) +
                                " input channels, input has " + std::to_string(input_shape[3]));
  }
  const std::size_t padded[3] = {input_shape[0] + 2 * pad.t, input_shape[1] + 2 * pad.h,
                                 input_shape[2] + 2 * pad.w};
  for (std::size_t a = 0; a < 3; ++a) {
    if (kernel_shape[a + 1] == 0 || kernel_shape[a + 1] > padded[a]) {
      throw std::invalid_argument("conv3d: kernel " + dims(kernel_shape) +
                                  " larger than padded input " + dims(input_shape));
    }
  }
  return {padded[0] - kernel_shape[1] + 1, padded[1] - kernel_shape[2] + 1,
          padded[2] - kernel_shape[3] + 1, kernel_shape[0]};
}

Tensor conv3d_forward(const Tensor& input, const Tensor& kernel, std::span<const double> bias,
                      Padding3 pad) {
  const Geometry g = geometry(input, kernel, pad);
  if (bias.size() != g.cout) {
    throw std::invalid_argument("conv3d: bias has " + std::to_string(bias.size()) +
                                " entries, expected " + std::to_string(g.cout));
  }
  const std::vector<double> taps = to_tap_major(kernel);
  Tensor out({g.To, g.Ho, g.Wo, g.cout});
  const double* x = input.data().data();
  double* y = out.data().data();

  for (std::size_t to = 0; to < g.To; ++to) {
    for (std::size_t ho = 0; ho < g.Ho; ++ho) {
      for (std::size_t wo = 0; wo < g.Wo; ++wo) {
        double* o = y + ((to * g.Ho + ho) * g.Wo + wo) * g.cout;
        for (std::size_t oc = 0; oc < g.cout; ++oc) o[oc] = bias[oc];
        for (std::size_t dt = 0; dt < g.kt; ++dt) {
          std::size_t ti;
          if (!source(to, dt, pad.t, g.T, ti)) continue;
          for (std::size_t dh = 0; dh < g.kh; ++dh) {
            std::size_t hi;
            if (!source(ho, dh, pad.h, g.H, hi)) continue;
            for (std::size_t dw = 0; dw < g.kw; ++dw) {
              std::size_t wi;
              if (!source(wo, dw, pad.w, g.W, wi)) continue;
              const double* xin = x + ((ti * g.H + hi) * g.W + wi) * g.cin;
              const double* k = taps.data() + ((dt * g.kh + dh) * g.kw + dw) * g.cin * g.cout;
              for (std::size_t ic = 0; ic < g.cin; ++ic) {
                const double xv = xin[ic];
                if (xv == 0.0) continue;
                const double* krow = k + ic * g.cout;
                for (std::size_t oc = 0; oc < g.cout; ++oc) o[oc] += xv * krow[oc];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

Conv3dGrads conv3d_backward(const Tensor& input, const Tensor& kernel, const Tensor& upstream,
                            Padding3 pad, bool want_input_grad) {
  const Geometry g = geometry(input, kernel, pad);
  const std::vector<std::size_t> expected{g.To, g.Ho, g.Wo, g.cout};
  if (upstream.shape() != expected) {
    throw std::invalid_argument("conv3d_backward: upstream gradient " + dims(upstream.shape()) +
                                " does not match output " + dims(expected));
  }
  const std::vector<double> taps = to_tap_major(kernel);
  std::vector<double> gtaps(taps.size(), 0.0);
  Conv3dGrads grads;
  grads.bias.assign(g.cout, 0.0);
  if (want_input_grad) grads.input = Tensor(input.shape());

  const double* x = input.data().data();
  const double* up = upstream.data().data();
  double* gx = want_input_grad ? grads.input.data().data() : nullptr;

  for (std::size_t to = 0; to < g.To; ++to) {
    for (std::size_t ho = 0; ho < g.Ho; ++ho) {
      for (std::size_t wo = 0; wo < g.Wo; ++wo) {
        const double* gy = up + ((to * g.Ho + ho) * g.Wo + wo) * g.cout;
        bool any = false;
        for (std::size_t oc = 0; oc < g.cout; ++oc) {
          grads.bias[oc] += gy[oc];
          any = any || gy[oc] != 0.0;
        }
        if (!any) continue;
        for (std::size_t dt = 0; dt < g.kt; ++dt) {
          std::size_t ti;
          if (!source(to, dt, pad.t, g.T, ti)) continue;
          for (std::size_t dh = 0; dh < g.kh; ++dh) {
            std::size_t hi;
            if (!source(ho, dh, pad.h, g.H, hi)) continue;
            for (std::size_t dw = 0; dw < g.kw; ++dw) {
              std::size_t wi;
              if (!source(wo, dw, pad.w, g.W, wi)) continue;
              const std::size_t xoff = ((ti * g.H + hi) * g.W + wi) * g.cin;
              const std::size_t koff = ((dt * g.kh + dh) * g.kw + dw) * g.cin * g.cout;
              for (std::size_t ic = 0; ic < g.cin; ++ic) {
                const double xv = x[xoff + ic];
                const double* krow = taps.data() + koff + ic * g.cout;
                double* gkrow = gtaps.data() + koff + ic * g.cout;
                double acc = 0.0;
                for (std::size_t oc = 0; oc < g.cout; ++oc) {
                  acc += krow[oc] * gy[oc];
                  gkrow[oc] += xv * gy[oc];
                }
                if (gx) gx[xoff + ic] += acc;
              }
            }
          }
        }
      }
    }
  }
  grads.kernel = from_tap_major(gtaps, kernel.shape());
  return grads;
}

}  // namespace rasterfusion
