#pragma once

#include <cmath>
#include <vector>

#include "tseg/nets.hpp"
#include "tseg/tensor.hpp"

namespace tseg::test {

// Independent reference implementations, written as direct transcriptions of
// the defining formulas. They share no code with the library's operators.

/// Direct convolution: six nested loops over output position and kernel taps,
/// reading zero for out-of-bounds (padded) input positions.
template <typename T>
std::vector<double> naive_conv2d(const TensorT<T>& input, const TensorT<T>& weight,
                                 const TensorT<T>& bias, int stride, int dilation, int padding,
                                 Shape* out_shape = nullptr) {
  const int n_batch = input.dim(0), ci = input.dim(1), h = input.dim(2), w = input.dim(3);
  const int co = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const int ho = (h + 2 * padding - dilation * (kh - 1) - 1) / stride + 1;
  const int wo = (w + 2 * padding - dilation * (kw - 1) - 1) / stride + 1;
  std::vector<double> out(std::size_t(n_batch) * co * ho * wo, 0.0);
  for (int n = 0; n < n_batch; ++n) {
    for (int oc = 0; oc < co; ++oc) {
      for (int oh = 0; oh < ho; ++oh) {
        for (int ow = 0; ow < wo; ++ow) {
          double acc = double(bias.data()[std::size_t(oc)]);
          for (int icn = 0; icn < ci; ++icn) {
            for (int r = 0; r < kh; ++r) {
              for (int c = 0; c < kw; ++c) {
                const int ih = oh * stride - padding + r * dilation;
                const int iw = ow * stride - padding + c * dilation;
                if (ih < 0 || ih >= h || iw < 0 || iw >= w) continue;
                const double x =
                    double(input.data()[std::size_t(((n * ci + icn) * h + ih) * w + iw)]);
                const double wv =
                    double(weight.data()[std::size_t(((oc * ci + icn) * kh + r) * kw + c)]);
                acc += x * wv;
              }
            }
          }
          out[std::size_t(((n * co + oc) * ho + oh) * wo + ow)] = acc;
        }
      }
    }
  }
  if (out_shape != nullptr) *out_shape = Shape{n_batch, co, ho, wo};
  return out;
}

struct LstmOracleResult {
  std::vector<double> h;
  std::vector<double> c;
};

/// Straight-line transcription of the Conv-LSTM recurrence:
///   z = concat(F, H_prev)
///   i = sig(conv_i(z)), f = sig(conv_f(z)), g = tanh(conv_g(z)), o = sig(conv_o(z))
///   C' = f.C + i.g,  H' = o.tanh(C')
/// Gate convolutions are evaluated with the naive direct convolution above.
inline LstmOracleResult lstm_step_oracle(const MemoryNetT<float>& net, const Tensor& features,
                                         const Tensor& h_prev, const Tensor& c_prev) {
  const int n = features.dim(0), cf = features.dim(1), h = features.dim(2), w = features.dim(3);
  const int nh = h_prev.dim(1);
  auto z = Tensor::create({n, cf + nh, h, w});
  const std::int64_t plane = std::int64_t(h) * w;
  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < cf; ++c) {
      for (std::int64_t i = 0; i < plane; ++i) {
        z->data()[std::size_t(((b * (cf + nh)) + c) * plane + i)] =
            features.data()[std::size_t((b * cf + c) * plane + i)];
      }
    }
    for (int c = 0; c < nh; ++c) {
      for (std::int64_t i = 0; i < plane; ++i) {
        z->data()[std::size_t(((b * (cf + nh)) + cf + c) * plane + i)] =
            h_prev.data()[std::size_t((b * nh + c) * plane + i)];
      }
    }
  }

  auto gate = [&z](const Conv2dT<float>& conv) {
    return naive_conv2d(*z, *conv.weight, *conv.bias, conv.stride, conv.dilation, conv.padding);
  };
  const std::vector<double> pre_i = gate(net.input_gate);
  const std::vector<double> pre_f = gate(net.forget_gate);
  const std::vector<double> pre_g = gate(net.cell_gate);
  const std::vector<double> pre_o = gate(net.output_gate);

  LstmOracleResult out;
  out.h.resize(pre_i.size());
  out.c.resize(pre_i.size());
  for (std::size_t idx = 0; idx < pre_i.size(); ++idx) {
    const double ig = 1.0 / (1.0 + std::exp(-pre_i[idx]));
    const double fg = 1.0 / (1.0 + std::exp(-pre_f[idx]));
    const double gg = std::tanh(pre_g[idx]);
    const double og = 1.0 / (1.0 + std::exp(-pre_o[idx]));
    out.c[idx] = fg * double(c_prev.data()[idx]) + ig * gg;
    out.h[idx] = og * std::tanh(out.c[idx]);
  }
  return out;
}

}  // namespace tseg::test
