#include "tseg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tseg {

namespace {

// Open-interval clamp bound shared by sigmoid and tanh.
constexpr double kSaturationEps = 1e-7;

template <typename T>
bool wants_grad(const TapeT<T>* tape, const TensorPtrT<T>& t) {
  return t->trainable() || (tape != nullptr && tape->produced(t.get()));
}

template <typename T>
void require_same_shape(const TensorPtrT<T>& a, const TensorPtrT<T>& b, const char* op) {
  if (a->shape() != b->shape()) {
    fail(ErrorCode::precondition, std::string(op) + ": shape mismatch " +
                                      shape_string(a->shape()) + " vs " + shape_string(b->shape()));
  }
}

// Valid output range [lo,hi] such that 0 <= o*stride + offset < extent.
struct LoopRange {
  int lo, hi;  // hi inclusive; empty when lo > hi
};

LoopRange valid_range(int offset, int stride, int extent, int out_extent) {
  LoopRange r;
  r.lo = offset < 0 ? (-offset + stride - 1) / stride : 0;
  const int last = extent - 1 - offset;
  r.hi = last < 0 ? -1 : std::min(out_extent - 1, last / stride);
  return r;
}

template <typename T, typename Fn>
TensorPtrT<T> unary_elementwise(TapeT<T>* tape, const TensorPtrT<T>& x, const char* name, Fn fn,
                                std::function<void(const TensorPtrT<T>&, const TensorPtrT<T>&)> bwd) {
  require(x != nullptr, ErrorCode::precondition, "elementwise: null operand");
  auto out = TensorT<T>::create(x->shape());
  const std::vector<T>& xv = x->data();
  std::vector<T>& ov = out->data();
  for (std::size_t i = 0; i < xv.size(); ++i) ov[i] = fn(xv[i]);
  check_finite(*out, name);
  if (tape != nullptr) {
    if (wants_grad(tape, x)) {
      tape->record(out, [x, out, bwd]() {
        if (!out->has_grad()) return;
        bwd(x, out);
      });
    } else {
      tape->record(out, []() {});
    }
  }
  return out;
}

}  // namespace

template <typename T>
TensorPtrT<T> conv2d(TapeT<T>* tape, const TensorPtrT<T>& input, const TensorPtrT<T>& weight,
                     const TensorPtrT<T>& bias, int stride, int dilation, int padding) {
  require(input && weight && bias, ErrorCode::precondition, "conv2d: null operand");
  require(input->ndim() == 4, ErrorCode::precondition, "conv2d: input must be [N,Ci,H,W]");
  require(weight->ndim() == 4, ErrorCode::precondition, "conv2d: weight must be [Co,Ci,kh,kw]");
  require(stride >= 1, ErrorCode::precondition, "conv2d: stride must be >= 1");
  require(dilation >= 1, ErrorCode::precondition, "conv2d: dilation must be >= 1");
  require(padding >= 0, ErrorCode::precondition, "conv2d: padding must be >= 0");

  const int n_batch = input->dim(0), ci = input->dim(1), h = input->dim(2), w = input->dim(3);
  const int co = weight->dim(0), kh = weight->dim(2), kw = weight->dim(3);
  require(weight->dim(1) == ci, ErrorCode::precondition,
          "conv2d: input channels do not match weight");
  require(bias->shape() == Shape{co}, ErrorCode::precondition, "conv2d: bias must be [Co]");

  const int eh = h + 2 * padding - dilation * (kh - 1) - 1;
  const int ew = w + 2 * padding - dilation * (kw - 1) - 1;
  require(eh >= 0 && ew >= 0, ErrorCode::precondition, "conv2d: kernel does not fit input");
  const int ho = eh / stride + 1;
  const int wo = ew / stride + 1;

  auto out = TensorT<T>::create({n_batch, co, ho, wo});
  {
    const T* x = input->data().data();
    const T* wt = weight->data().data();
    const T* b = bias->data().data();
    T* o = out->data().data();
    for (int n = 0; n < n_batch; ++n) {
      for (int oc = 0; oc < co; ++oc) {
        T* plane = o + (std::int64_t(n) * co + oc) * ho * wo;
        std::fill(plane, plane + std::int64_t(ho) * wo, b[oc]);
        for (int icn = 0; icn < ci; ++icn) {
          const T* xp = x + (std::int64_t(n) * ci + icn) * h * w;
          const T* wp = wt + (std::int64_t(oc) * ci + icn) * kh * kw;
          for (int r = 0; r < kh; ++r) {
            const int ih_off = r * dilation - padding;
            const LoopRange rows = valid_range(ih_off, stride, h, ho);
            for (int oh = rows.lo; oh <= rows.hi; ++oh) {
              const T* xrow = xp + std::int64_t(oh * stride + ih_off) * w;
              T* orow = plane + std::int64_t(oh) * wo;
              for (int c = 0; c < kw; ++c) {
                const int iw_off = c * dilation - padding;
                const LoopRange cols = valid_range(iw_off, stride, w, wo);
                const T wv = wp[r * kw + c];
                if (stride == 1) {
                  const T* xq = xrow + iw_off;
                  for (int ow = cols.lo; ow <= cols.hi; ++ow) orow[ow] += wv * xq[ow];
                } else {
                  for (int ow = cols.lo; ow <= cols.hi; ++ow) {
                    orow[ow] += wv * xrow[ow * stride + iw_off];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
  check_finite(*out, "conv2d");

  if (tape != nullptr) {
    const bool need_dx = wants_grad(tape, input);
    tape->record(out, [input, weight, bias, out, stride, dilation, padding, need_dx]() {
      if (!out->has_grad()) return;
      const int n_batch = input->dim(0), ci = input->dim(1), h = input->dim(2), w = input->dim(3);
      const int co = weight->dim(0), kh = weight->dim(2), kw = weight->dim(3);
      const int ho = out->dim(2), wo = out->dim(3);
      const T* g = out->grad().data();
      const T* x = input->data().data();
      const T* wt = weight->data().data();

      {
        std::vector<T>& db = bias->grad();
        for (int n = 0; n < n_batch; ++n) {
          for (int oc = 0; oc < co; ++oc) {
            const T* gp = g + (std::int64_t(n) * co + oc) * ho * wo;
            T acc = T(0);
            for (std::int64_t i = 0; i < std::int64_t(ho) * wo; ++i) acc += gp[i];
            db[std::size_t(oc)] += acc;
          }
        }
      }

      {
        std::vector<T>& dw = weight->grad();
        for (int n = 0; n < n_batch; ++n) {
          for (int oc = 0; oc < co; ++oc) {
            const T* gp = g + (std::int64_t(n) * co + oc) * ho * wo;
            for (int icn = 0; icn < ci; ++icn) {
              const T* xp = x + (std::int64_t(n) * ci + icn) * h * w;
              T* dwp = dw.data() + (std::int64_t(oc) * ci + icn) * kh * kw;
              for (int r = 0; r < kh; ++r) {
                const int ih_off = r * dilation - padding;
                const LoopRange rows = valid_range(ih_off, stride, h, ho);
                for (int c = 0; c < kw; ++c) {
                  const int iw_off = c * dilation - padding;
                  const LoopRange cols = valid_range(iw_off, stride, w, wo);
                  T acc = T(0);
                  for (int oh = rows.lo; oh <= rows.hi; ++oh) {
                    const T* grow = gp + std::int64_t(oh) * wo;
                    const T* xrow = xp + std::int64_t(oh * stride + ih_off) * w + iw_off;
                    if (stride == 1) {
                      for (int ow = cols.lo; ow <= cols.hi; ++ow) acc += grow[ow] * xrow[ow];
                    } else {
                      for (int ow = cols.lo; ow <= cols.hi; ++ow) {
                        acc += grow[ow] * xrow[std::int64_t(ow) * stride];
                      }
                    }
                  }
                  dwp[r * kw + c] += acc;
                }
              }
            }
          }
        }
      }

      if (need_dx) {
        std::vector<T>& dx = input->grad();
        for (int n = 0; n < n_batch; ++n) {
          for (int oc = 0; oc < co; ++oc) {
            const T* gp = g + (std::int64_t(n) * co + oc) * ho * wo;
            for (int icn = 0; icn < ci; ++icn) {
              T* dxp = dx.data() + (std::int64_t(n) * ci + icn) * h * w;
              const T* wp = wt + (std::int64_t(oc) * ci + icn) * kh * kw;
              for (int r = 0; r < kh; ++r) {
                const int ih_off = r * dilation - padding;
                const LoopRange rows = valid_range(ih_off, stride, h, ho);
                for (int oh = rows.lo; oh <= rows.hi; ++oh) {
                  const T* grow = gp + std::int64_t(oh) * wo;
                  T* dxrow = dxp + std::int64_t(oh * stride + ih_off) * w;
                  for (int c = 0; c < kw; ++c) {
                    const int iw_off = c * dilation - padding;
                    const LoopRange cols = valid_range(iw_off, stride, w, wo);
                    const T wv = wp[r * kw + c];
                    if (stride == 1) {
                      T* dxq = dxrow + iw_off;
                      for (int ow = cols.lo; ow <= cols.hi; ++ow) dxq[ow] += wv * grow[ow];
                    } else {
                      for (int ow = cols.lo; ow <= cols.hi; ++ow) {
                        dxrow[ow * stride + iw_off] += wv * grow[ow];
                      }
                    }
                  }
                }
              }
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorPtrT<T> sigmoid(TapeT<T>* tape, const TensorPtrT<T>& x) {
  const T lo = T(kSaturationEps);
  const T hi = T(1) - T(kSaturationEps);
  return unary_elementwise<T>(
      tape, x, "sigmoid",
      [lo, hi](T v) { return std::clamp(T(1) / (T(1) + std::exp(-v)), lo, hi); },
      [](const TensorPtrT<T>& in, const TensorPtrT<T>& out) {
        std::vector<T>& gx = in->grad();
        const std::vector<T>& go = out->grad();
        const std::vector<T>& ov = out->data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * ov[i] * (T(1) - ov[i]);
      });
}

template <typename T>
TensorPtrT<T> tanh(TapeT<T>* tape, const TensorPtrT<T>& x) {
  const T hi = T(1) - T(kSaturationEps);
  return unary_elementwise<T>(
      tape, x, "tanh", [hi](T v) { return std::clamp(std::tanh(v), -hi, hi); },
      [](const TensorPtrT<T>& in, const TensorPtrT<T>& out) {
        std::vector<T>& gx = in->grad();
        const std::vector<T>& go = out->grad();
        const std::vector<T>& ov = out->data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * (T(1) - ov[i] * ov[i]);
      });
}

template <typename T>
TensorPtrT<T> relu(TapeT<T>* tape, const TensorPtrT<T>& x) {
  return unary_elementwise<T>(
      tape, x, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](const TensorPtrT<T>& in, const TensorPtrT<T>& out) {
        std::vector<T>& gx = in->grad();
        const std::vector<T>& go = out->grad();
        const std::vector<T>& xv = in->data();
        for (std::size_t i = 0; i < gx.size(); ++i) {
          if (xv[i] > T(0)) gx[i] += go[i];
        }
      });
}

template <typename T>
TensorPtrT<T> add(TapeT<T>* tape, const TensorPtrT<T>& a, const TensorPtrT<T>& b) {
  require(a && b, ErrorCode::precondition, "add: null operand");
  require_same_shape(a, b, "add");
  auto out = TensorT<T>::create(a->shape());
  const std::vector<T>& av = a->data();
  const std::vector<T>& bv = b->data();
  std::vector<T>& ov = out->data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
  check_finite(*out, "add");
  if (tape != nullptr) {
    const bool ga = wants_grad(tape, a), gb = wants_grad(tape, b);
    tape->record(out, [a, b, out, ga, gb]() {
      if (!out->has_grad()) return;
      const std::vector<T>& go = out->grad();
      if (ga) {
        std::vector<T>& gx = a->grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
      }
      if (gb) {
        std::vector<T>& gx = b->grad();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i];
      }
    });
  }
  return out;
}

template <typename T>
TensorPtrT<T> hadamard(TapeT<T>* tape, const TensorPtrT<T>& a, const TensorPtrT<T>& b) {
  require(a && b, ErrorCode::precondition, "hadamard: null operand");
  require_same_shape(a, b, "hadamard");
  auto out = TensorT<T>::create(a->shape());
  const std::vector<T>& av = a->data();
  const std::vector<T>& bv = b->data();
  std::vector<T>& ov = out->data();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
  check_finite(*out, "hadamard");
  if (tape != nullptr) {
    const bool ga = wants_grad(tape, a), gb = wants_grad(tape, b);
    tape->record(out, [a, b, out, ga, gb]() {
      if (!out->has_grad()) return;
      const std::vector<T>& go = out->grad();
      if (ga) {
        std::vector<T>& gx = a->grad();
        const std::vector<T>& bv2 = b->data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * bv2[i];
      }
      if (gb) {
        std::vector<T>& gx = b->grad();
        const std::vector<T>& av2 = a->data();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * av2[i];
      }
    });
  }
  return out;
}

template <typename T>
TensorPtrT<T> scale_broadcast(TapeT<T>* tape, const TensorPtrT<T>& gate, const TensorPtrT<T>& x) {
  require(gate && x, ErrorCode::precondition, "scale_broadcast: null operand");
  require(gate->ndim() == 4 && x->ndim() == 4, ErrorCode::precondition,
          "scale_broadcast: operands must be 4-d");
  require(gate->dim(1) == 1, ErrorCode::precondition, "scale_broadcast: gate must have 1 channel");
  require(gate->dim(0) == x->dim(0) && gate->dim(2) == x->dim(2) && gate->dim(3) == x->dim(3),
          ErrorCode::precondition, "scale_broadcast: shape mismatch");
  const int n_batch = x->dim(0), k = x->dim(1);
  const std::int64_t plane = std::int64_t(x->dim(2)) * x->dim(3);
  auto out = TensorT<T>::create(x->shape());
  {
    const T* gv = gate->data().data();
    const T* xv = x->data().data();
    T* ov = out->data().data();
    for (int n = 0; n < n_batch; ++n) {
      const T* gp = gv + n * plane;
      for (int c = 0; c < k; ++c) {
        const T* xp = xv + (std::int64_t(n) * k + c) * plane;
        T* op = ov + (std::int64_t(n) * k + c) * plane;
        for (std::int64_t i = 0; i < plane; ++i) op[i] = gp[i] * xp[i];
      }
    }
  }
  check_finite(*out, "scale_broadcast");
  if (tape != nullptr) {
    const bool gg = wants_grad(tape, gate), gx_needed = wants_grad(tape, x);
    tape->record(out, [gate, x, out, gg, gx_needed, n_batch, k, plane]() {
      if (!out->has_grad()) return;
      const T* go = out->grad().data();
      if (gg) {
        std::vector<T>& dg = gate->grad();
        const T* xv = x->data().data();
        for (int n = 0; n < n_batch; ++n) {
          T* dgp = dg.data() + n * plane;
          for (int c = 0; c < k; ++c) {
            const T* xp = xv + (std::int64_t(n) * k + c) * plane;
            const T* gop = go + (std::int64_t(n) * k + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) dgp[i] += gop[i] * xp[i];
          }
        }
      }
      if (gx_needed) {
        std::vector<T>& dx = x->grad();
        const T* gv = gate->data().data();
        for (int n = 0; n < n_batch; ++n) {
          const T* gp = gv + n * plane;
          for (int c = 0; c < k; ++c) {
            T* dxp = dx.data() + (std::int64_t(n) * k + c) * plane;
            const T* gop = go + (std::int64_t(n) * k + c) * plane;
            for (std::int64_t i = 0; i < plane; ++i) dxp[i] += gop[i] * gp[i];
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorPtrT<T> concat_channels(TapeT<T>* tape, const TensorPtrT<T>& a, const TensorPtrT<T>& b) {
  require(a && b, ErrorCode::precondition, "concat_channels: null operand");
  require(a->ndim() == 4 && b->ndim() == 4, ErrorCode::precondition,
          "concat_channels: operands must be 4-d");
  require(a->dim(0) == b->dim(0) && a->dim(2) == b->dim(2) && a->dim(3) == b->dim(3),
          ErrorCode::precondition, "concat_channels: shape mismatch");
  const int n_batch = a->dim(0), ca = a->dim(1), cb = b->dim(1);
  const std::int64_t plane = std::int64_t(a->dim(2)) * a->dim(3);
  auto out = TensorT<T>::create({n_batch, ca + cb, a->dim(2), a->dim(3)});
  {
    const T* av = a->data().data();
    const T* bv = b->data().data();
    T* ov = out->data().data();
    for (int n = 0; n < n_batch; ++n) {
      std::memcpy(ov + std::int64_t(n) * (ca + cb) * plane, av + std::int64_t(n) * ca * plane,
                  std::size_t(ca * plane) * sizeof(T));
      std::memcpy(ov + (std::int64_t(n) * (ca + cb) + ca) * plane, bv + std::int64_t(n) * cb * plane,
                  std::size_t(cb * plane) * sizeof(T));
    }
  }
  if (tape != nullptr) {
    const bool ga = wants_grad(tape, a), gb = wants_grad(tape, b);
    tape->record(out, [a, b, out, ga, gb, n_batch, ca, cb, plane]() {
      if (!out->has_grad()) return;
      const T* go = out->grad().data();
      if (ga) {
        std::vector<T>& da = a->grad();
        for (int n = 0; n < n_batch; ++n) {
          const T* src = go + std::int64_t(n) * (ca + cb) * plane;
          T* dst = da.data() + std::int64_t(n) * ca * plane;
          for (std::int64_t i = 0; i < ca * plane; ++i) dst[i] += src[i];
        }
      }
      if (gb) {
        std::vector<T>& db = b->grad();
        for (int n = 0; n < n_batch; ++n) {
          const T* src = go + (std::int64_t(n) * (ca + cb) + ca) * plane;
          T* dst = db.data() + std::int64_t(n) * cb * plane;
          for (std::int64_t i = 0; i < cb * plane; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

template <typename T>
TensorPtrT<T> upsample_nearest(TapeT<T>* tape, const TensorPtrT<T>& x, int factor) {
  require(x != nullptr, ErrorCode::precondition, "upsample_nearest: null operand");
  require(x->ndim() == 4, ErrorCode::precondition, "upsample_nearest: input must be 4-d");
  require(factor >= 1, ErrorCode::precondition, "upsample_nearest: factor must be >= 1");
  const int n_batch = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
  auto out = TensorT<T>::create({n_batch, c, h * factor, w * factor});
  {
    const T* xv = x->data().data();
    T* ov = out->data().data();
    const std::int64_t planes = std::int64_t(n_batch) * c;
    for (std::int64_t p = 0; p < planes; ++p) {
      const T* xp = xv + p * h * w;
      T* op = ov + p * h * w * factor * factor;
      for (int y = 0; y < h * factor; ++y) {
        const T* xrow = xp + std::int64_t(y / factor) * w;
        T* orow = op + std::int64_t(y) * w * factor;
        for (int xcol = 0; xcol < w * factor; ++xcol) orow[xcol] = xrow[xcol / factor];
      }
    }
  }
  if (tape != nullptr) {
    if (wants_grad(tape, x)) {
      tape->record(out, [x, out, factor, n_batch, c, h, w]() {
        if (!out->has_grad()) return;
        std::vector<T>& dx = x->grad();
        const T* go = out->grad().data();
        const std::int64_t planes = std::int64_t(n_batch) * c;
        for (std::int64_t p = 0; p < planes; ++p) {
          T* dxp = dx.data() + p * h * w;
          const T* gp = go + p * h * w * factor * factor;
          for (int y = 0; y < h * factor; ++y) {
            T* dxrow = dxp + std::int64_t(y / factor) * w;
            const T* grow = gp + std::int64_t(y) * w * factor;
            for (int xcol = 0; xcol < w * factor; ++xcol) dxrow[xcol / factor] += grow[xcol];
          }
        }
      });
    } else {
      tape->record(out, []() {});
    }
  }
  return out;
}

template <typename T>
TensorPtrT<T> sum_all(TapeT<T>* tape, const TensorPtrT<T>& x) {
  require(x != nullptr, ErrorCode::precondition, "sum_all: null operand");
  T acc = T(0);
  for (const T& v : x->data()) acc += v;
  auto out = TensorT<T>::from_data({1}, {acc});
  check_finite(*out, "sum_all");
  if (tape != nullptr) {
    if (wants_grad(tape, x)) {
      tape->record(out, [x, out]() {
        if (!out->has_grad()) return;
        const T g = out->grad()[0];
        std::vector<T>& gx = x->grad();
        for (auto& v : gx) v += g;
      });
    } else {
      tape->record(out, []() {});
    }
  }
  return out;
}

template <typename T>
TensorPtrT<T> softmax_cross_entropy(TapeT<T>* tape, const TensorPtrT<T>& logits,
                                    const LabelMask& labels, int ignore_index) {
  require(logits != nullptr, ErrorCode::precondition, "softmax_cross_entropy: null logits");
  require(logits->ndim() == 4, ErrorCode::precondition,
          "softmax_cross_entropy: logits must be [N,K,H,W]");
  const int n_batch = logits->dim(0), k = logits->dim(1), h = logits->dim(2), w = logits->dim(3);
  require(labels.shape == Shape{n_batch, h, w}, ErrorCode::precondition,
          "softmax_cross_entropy: labels must be [N,H,W] matching logits");

  const std::int64_t plane = std::int64_t(h) * w;
  std::int64_t counted = 0;
  double loss_sum = 0.0;
  const T* lv = logits->data().data();
  for (int n = 0; n < n_batch; ++n) {
    const T* base = lv + std::int64_t(n) * k * plane;
    const std::uint8_t* lab = labels.data.data() + n * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      const int y = lab[i];
      if (y == ignore_index) continue;
      require(y >= 0 && y < k, ErrorCode::precondition,
              "softmax_cross_entropy: label out of range");
      T max_v = base[i];
      for (int c = 1; c < k; ++c) max_v = std::max(max_v, base[c * plane + i]);
      T sum_exp = T(0);
      for (int c = 0; c < k; ++c) sum_exp += std::exp(base[c * plane + i] - max_v);
      loss_sum += double(std::log(sum_exp) + max_v - base[y * plane + i]);
      ++counted;
    }
  }
  const T value = counted > 0 ? T(loss_sum / double(counted)) : T(0);
  auto out = TensorT<T>::from_data({1}, {value});
  check_finite(*out, "softmax_cross_entropy");

  if (tape != nullptr) {
    if (wants_grad(tape, logits) && counted > 0) {
      LabelMask labels_copy = labels;
      tape->record(out, [logits, out, labels_copy = std::move(labels_copy), ignore_index,
                         counted]() {
        if (!out->has_grad()) return;
        const int n_batch = logits->dim(0), k = logits->dim(1);
        const std::int64_t plane = std::int64_t(logits->dim(2)) * logits->dim(3);
        const T upstream = out->grad()[0];
        const T inv_count = T(1) / T(counted);
        const T* lv = logits->data().data();
        std::vector<T>& dl = logits->grad();
        for (int n = 0; n < n_batch; ++n) {
          const T* base = lv + std::int64_t(n) * k * plane;
          T* gbase = dl.data() + std::int64_t(n) * k * plane;
          const std::uint8_t* lab = labels_copy.data.data() + n * plane;
          for (std::int64_t i = 0; i < plane; ++i) {
            const int y = lab[i];
            if (y == ignore_index) continue;
            T max_v = base[i];
            for (int c = 1; c < k; ++c) max_v = std::max(max_v, base[c * plane + i]);
            T sum_exp = T(0);
            for (int c = 0; c < k; ++c) sum_exp += std::exp(base[c * plane + i] - max_v);
            const T inv_sum = T(1) / sum_exp;
            for (int c = 0; c < k; ++c) {
              T p = std::exp(base[c * plane + i] - max_v) * inv_sum;
              if (c == y) p -= T(1);
              gbase[c * plane + i] += upstream * inv_count * p;
            }
          }
        }
      });
    } else {
      tape->record(out, []() {});
    }
  }
  return out;
}

#define TSEG_INSTANTIATE_OPS(T)                                                                    \
  template TensorPtrT<T> conv2d<T>(TapeT<T>*, const TensorPtrT<T>&, const TensorPtrT<T>&,          \
                                   const TensorPtrT<T>&, int, int, int);                           \
  template TensorPtrT<T> sigmoid<T>(TapeT<T>*, const TensorPtrT<T>&);                              \
  template TensorPtrT<T> tanh<T>(TapeT<T>*, const TensorPtrT<T>&);                                 \
  template TensorPtrT<T> relu<T>(TapeT<T>*, const TensorPtrT<T>&);                                 \
  template TensorPtrT<T> add<T>(TapeT<T>*, const TensorPtrT<T>&, const TensorPtrT<T>&);            \
  template TensorPtrT<T> hadamard<T>(TapeT<T>*, const TensorPtrT<T>&, const TensorPtrT<T>&);       \
  template TensorPtrT<T> scale_broadcast<T>(TapeT<T>*, const TensorPtrT<T>&,                       \
                                            const TensorPtrT<T>&);                                 \
  template TensorPtrT<T> concat_channels<T>(TapeT<T>*, const TensorPtrT<T>&,                       \
                                            const TensorPtrT<T>&);                                 \
  template TensorPtrT<T> upsample_nearest<T>(TapeT<T>*, const TensorPtrT<T>&, int);                \
  template TensorPtrT<T> sum_all<T>(TapeT<T>*, const TensorPtrT<T>&);                              \
  template TensorPtrT<T> softmax_cross_entropy<T>(TapeT<T>*, const TensorPtrT<T>&,                 \
                                                  const LabelMask&, int);

TSEG_INSTANTIATE_OPS(float)
TSEG_INSTANTIATE_OPS(double)

#undef TSEG_INSTANTIATE_OPS

}  // namespace tseg
