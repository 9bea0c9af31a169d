#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "tseg/ops.hpp"
#include "tseg/optim.hpp"
#include "tseg/rng.hpp"

namespace tseg {

/// Downsampling factor between input frames and feature maps.
constexpr int kFeatureStride = 4;

struct ModelConfig {
  int in_channels = 3;
  int feat_channels = 16;    // C_f: appearance feature channels
  int hidden_channels = 16;  // N_h: Conv-LSTM hidden/cell channels
  int num_classes = 6;
};

/// Convolution layer: weight [out,in,k,k] plus bias, with fixed stride/dilation/padding.
template <typename T>
struct Conv2dT {
  TensorPtrT<T> weight;
  TensorPtrT<T> bias;
  int stride = 1, dilation = 1, padding = 0;

  Conv2dT() = default;
  Conv2dT(int in_ch, int out_ch, int kernel, int stride, int dilation, int padding);

  /// Fan-in scaled uniform weights, zero bias.
  void init_fan_in(Rng& rng);
  void init_zero();

  TensorPtrT<T> forward(TapeT<T>* tape, const TensorPtrT<T>& x) const {
    return conv2d<T>(tape, x, weight, bias, stride, dilation, padding);
  }

  void register_params(ParamSetT<T>& params, const std::string& prefix) const;
};

/// Still-image network: two stride-2 stem convs (3 -> 16 -> C_f), three dilated
/// body convs (dilations 1, 2, 4), and a 1x1 classification head. Stateless:
/// output depends only on the current frame.
template <typename T>
struct AppearanceNetT {
  Conv2dT<T> stem1, stem2;
  Conv2dT<T> body1, body2, body3;
  Conv2dT<T> head;

  void init(const ModelConfig& cfg, Rng& rng);

  /// Stem + body; result is [N, C_f, H/4, W/4]. Frame values are expected in [0,1].
  TensorPtrT<T> features(TapeT<T>* tape, const TensorPtrT<T>& frame) const;
  /// 1x1 head over features -> class logits at feature resolution.
  TensorPtrT<T> logits(TapeT<T>* tape, const TensorPtrT<T>& features) const;

  std::pair<TensorPtrT<T>, TensorPtrT<T>> forward(TapeT<T>* tape, const TensorPtrT<T>& frame) const {
    auto f = features(tape, frame);
    return {f, logits(tape, f)};
  }

  void register_params(ParamSetT<T>& params, const std::string& prefix) const;
};

/// Hidden/cell pair carried across frames. Reset state is exactly zero.
template <typename T>
struct MemoryStateT {
  TensorPtrT<T> h;
  TensorPtrT<T> c;
};

using MemoryState = MemoryStateT<float>;

/// Conv-LSTM over appearance features. Gates are 3x3 convolutions of
/// concat(F, H_prev); no peephole connections:
///   i = sig(conv_i(z)), f = sig(conv_f(z)), g = tanh(conv_g(z)), o = sig(conv_o(z))
///   C' = f.C + i.g,  H' = o.tanh(C')
template <typename T>
struct MemoryNetT {
  Conv2dT<T> input_gate, forget_gate, cell_gate, output_gate;
  Conv2dT<T> head;  // 1x1, N_h -> K

  void init(const ModelConfig& cfg, Rng& rng);

  /// One recurrence step; reads only (F_t, H_prev, C_prev), never future frames.
  MemoryStateT<T> step(TapeT<T>* tape, const TensorPtrT<T>& features,
                       const MemoryStateT<T>& prev) const;
  TensorPtrT<T> logits(TapeT<T>* tape, const TensorPtrT<T>& hidden) const;

  void register_params(ParamSetT<T>& params, const std::string& prefix) const;
};

/// Two independent 1x1 convolutions over concat(F, H_t), each squashed through a
/// sigmoid into a one-channel confidence map. Zero-initialized, so both gates
/// start at exactly 0.5 (a neutral mixture).
template <typename T>
struct GateHeadT {
  Conv2dT<T> appearance_gate, memory_gate;

  void init(const ModelConfig& cfg);

  std::pair<TensorPtrT<T>, TensorPtrT<T>> forward(TapeT<T>* tape, const TensorPtrT<T>& features,
                                                  const TensorPtrT<T>& hidden) const;

  void register_params(ParamSetT<T>& params, const std::string& prefix) const;
};

/// Per-frame prediction bundle. logits_fused = sigma_appr*logits_appr + sigma_mem*logits_mem
/// at feature resolution; logits_full is its nearest-neighbour upsampling to frame size.
template <typename T>
struct GatedPredictionT {
  TensorPtrT<T> logits_appr;
  TensorPtrT<T> logits_mem;
  TensorPtrT<T> sigma_appr;
  TensorPtrT<T> sigma_mem;
  TensorPtrT<T> logits_fused;
  TensorPtrT<T> logits_full;
};

using GatedPrediction = GatedPredictionT<float>;

/// sigma_appr*logits_appr + sigma_mem*logits_mem, elementwise with single-channel
/// gates broadcast over the class axis.
template <typename T>
TensorPtrT<T> fuse(TapeT<T>* tape, const TensorPtrT<T>& logits_appr,
                   const TensorPtrT<T>& logits_mem, const TensorPtrT<T>& sigma_appr,
                   const TensorPtrT<T>& sigma_mem);

template <typename T>
struct SegModelT {
  ModelConfig cfg;
  AppearanceNetT<T> appearance;
  MemoryNetT<T> memory;
  GateHeadT<T> gates;

  static SegModelT<T> create(const ModelConfig& cfg, std::uint64_t seed);

  /// All parameters, unfrozen, in a fixed registration order.
  ParamSetT<T> params() const;

  /// Zero hidden/cell state at feature resolution for (batch, height, width) frames.
  MemoryStateT<T> reset_state(int batch, int height, int width) const;

  /// Full causal step: consumes the current frame and prior state only.
  std::pair<GatedPredictionT<T>, MemoryStateT<T>> step(TapeT<T>* tape, const TensorPtrT<T>& frame,
                                                       const MemoryStateT<T>& state) const;
};

using SegModel = SegModelT<float>;

}  // namespace tseg
