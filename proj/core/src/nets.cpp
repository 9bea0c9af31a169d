#include "tseg/nets.hpp"

#include <cmath>

namespace tseg {

template <typename T>
Conv2dT<T>::Conv2dT(int in_ch, int out_ch, int kernel, int stride, int dilation, int padding)
    : weight(TensorT<T>::create({out_ch, in_ch, kernel, kernel}, /*trainable=*/true)),
      bias(TensorT<T>::create({out_ch}, /*trainable=*/true)),
      stride(stride),
      dilation(dilation),
      padding(padding) {}

template <typename T>
void Conv2dT<T>::init_fan_in(Rng& rng) {
  const int fan_in = weight->dim(1) * weight->dim(2) * weight->dim(3);
  const double bound = 1.0 / std::sqrt(double(fan_in));
  for (T& v : weight->data()) v = T(rng.uniform(-bound, bound));
  for (T& v : bias->data()) v = T(0);
}

template <typename T>
void Conv2dT<T>::init_zero() {
  for (T& v : weight->data()) v = T(0);
  for (T& v : bias->data()) v = T(0);
}

template <typename T>
void Conv2dT<T>::register_params(ParamSetT<T>& params, const std::string& prefix) const {
  params.add(prefix + ".weight", weight);
  params.add(prefix + ".bias", bias);
}

template <typename T>
void AppearanceNetT<T>::init(const ModelConfig& cfg, Rng& rng) {
  stem1 = Conv2dT<T>(cfg.in_channels, 16, 3, /*stride=*/2, /*dilation=*/1, /*padding=*/1);
  stem2 = Conv2dT<T>(16, cfg.feat_channels, 3, 2, 1, 1);
  body1 = Conv2dT<T>(cfg.feat_channels, cfg.feat_channels, 3, 1, 1, 1);
  body2 = Conv2dT<T>(cfg.feat_channels, cfg.feat_channels, 3, 1, 2, 2);
  body3 = Conv2dT<T>(cfg.feat_channels, cfg.feat_channels, 3, 1, 4, 4);
  head = Conv2dT<T>(cfg.feat_channels, cfg.num_classes, 1, 1, 1, 0);
  stem1.init_fan_in(rng);
  stem2.init_fan_in(rng);
  body1.init_fan_in(rng);
  body2.init_fan_in(rng);
  body3.init_fan_in(rng);
  head.init_fan_in(rng);
}

template <typename T>
TensorPtrT<T> AppearanceNetT<T>::features(TapeT<T>* tape, const TensorPtrT<T>& frame) const {
  require(frame != nullptr && frame->ndim() == 4, ErrorCode::precondition,
          "appearance: frame must be [N,3,H,W]");
  require(frame->dim(2) % kFeatureStride == 0 && frame->dim(3) % kFeatureStride == 0,
          ErrorCode::precondition, "appearance: spatial dims must be divisible by 4");
  auto x = relu(tape, stem1.forward(tape, frame));
  x = relu(tape, stem2.forward(tape, x));
  x = relu(tape, body1.forward(tape, x));
  x = relu(tape, body2.forward(tape, x));
  x = relu(tape, body3.forward(tape, x));
  return x;
}

template <typename T>
TensorPtrT<T> AppearanceNetT<T>::logits(TapeT<T>* tape, const TensorPtrT<T>& features) const {
  return head.forward(tape, features);
}

template <typename T>
void AppearanceNetT<T>::register_params(ParamSetT<T>& params, const std::string& prefix) const {
  stem1.register_params(params, prefix + ".stem1");
  stem2.register_params(params, prefix + ".stem2");
  body1.register_params(params, prefix + ".body1");
  body2.register_params(params, prefix + ".body2");
  body3.register_params(params, prefix + ".body3");
  head.register_params(params, prefix + ".head");
}

template <typename T>
void MemoryNetT<T>::init(const ModelConfig& cfg, Rng& rng) {
  const int in_ch = cfg.feat_channels + cfg.hidden_channels;
  input_gate = Conv2dT<T>(in_ch, cfg.hidden_channels, 3, 1, 1, 1);
  forget_gate = Conv2dT<T>(in_ch, cfg.hidden_channels, 3, 1, 1, 1);
  cell_gate = Conv2dT<T>(in_ch, cfg.hidden_channels, 3, 1, 1, 1);
  output_gate = Conv2dT<T>(in_ch, cfg.hidden_channels, 3, 1, 1, 1);
  head = Conv2dT<T>(cfg.hidden_channels, cfg.num_classes, 1, 1, 1, 0);
  input_gate.init_fan_in(rng);
  forget_gate.init_fan_in(rng);
  cell_gate.init_fan_in(rng);
  output_gate.init_fan_in(rng);
  head.init_fan_in(rng);
  // Forget gate starts open so early training keeps state.
  for (T& v : forget_gate.bias->data()) v = T(1);
}

template <typename T>
MemoryStateT<T> MemoryNetT<T>::step(TapeT<T>* tape, const TensorPtrT<T>& features,
                                    const MemoryStateT<T>& prev) const {
  require(features != nullptr && prev.h != nullptr && prev.c != nullptr, ErrorCode::precondition,
          "convlstm_step: null operand");
  auto z = concat_channels(tape, features, prev.h);
  auto i = sigmoid(tape, input_gate.forward(tape, z));
  auto f = sigmoid(tape, forget_gate.forward(tape, z));
  auto g = tanh(tape, cell_gate.forward(tape, z));
  auto o = sigmoid(tape, output_gate.forward(tape, z));
  auto c_new = add(tape, hadamard(tape, f, prev.c), hadamard(tape, i, g));
  auto h_new = hadamard(tape, o, tanh(tape, c_new));
  return MemoryStateT<T>{h_new, c_new};
}

template <typename T>
TensorPtrT<T> MemoryNetT<T>::logits(TapeT<T>* tape, const TensorPtrT<T>& hidden) const {
  return head.forward(tape, hidden);
}

template <typename T>
void MemoryNetT<T>::register_params(ParamSetT<T>& params, const std::string& prefix) const {
  input_gate.register_params(params, prefix + ".input_gate");
  forget_gate.register_params(params, prefix + ".forget_gate");
  cell_gate.register_params(params, prefix + ".cell_gate");
  output_gate.register_params(params, prefix + ".output_gate");
  head.register_params(params, prefix + ".head");
}

template <typename T>
void GateHeadT<T>::init(const ModelConfig& cfg) {
  const int in_ch = cfg.feat_channels + cfg.hidden_channels;
  appearance_gate = Conv2dT<T>(in_ch, 1, 1, 1, 1, 0);
  memory_gate = Conv2dT<T>(in_ch, 1, 1, 1, 1, 0);
  appearance_gate.init_zero();
  memory_gate.init_zero();
}

template <typename T>
std::pair<TensorPtrT<T>, TensorPtrT<T>> GateHeadT<T>::forward(TapeT<T>* tape,
                                                              const TensorPtrT<T>& features,
                                                              const TensorPtrT<T>& hidden) const {
  auto z = concat_channels(tape, features, hidden);
  auto sigma_appr = sigmoid(tape, appearance_gate.forward(tape, z));
  auto sigma_mem = sigmoid(tape, memory_gate.forward(tape, z));
  return {sigma_appr, sigma_mem};
}

template <typename T>
void GateHeadT<T>::register_params(ParamSetT<T>& params, const std::string& prefix) const {
  appearance_gate.register_params(params, prefix + ".appearance");
  memory_gate.register_params(params, prefix + ".memory");
}

template <typename T>
TensorPtrT<T> fuse(TapeT<T>* tape, const TensorPtrT<T>& logits_appr,
                   const TensorPtrT<T>& logits_mem, const TensorPtrT<T>& sigma_appr,
                   const TensorPtrT<T>& sigma_mem) {
  return add(tape, scale_broadcast(tape, sigma_appr, logits_appr),
             scale_broadcast(tape, sigma_mem, logits_mem));
}

template <typename T>
SegModelT<T> SegModelT<T>::create(const ModelConfig& cfg, std::uint64_t seed) {
  require(cfg.in_channels >= 1 && cfg.feat_channels >= 1 && cfg.hidden_channels >= 1 &&
              cfg.num_classes >= 2,
          ErrorCode::precondition, "model: invalid configuration");
  SegModelT<T> model;
  model.cfg = cfg;
  Rng rng(seed, /*stream=*/0x6d6f64656cull);  // parameter-init stream
  model.appearance.init(cfg, rng);
  model.memory.init(cfg, rng);
  model.gates.init(cfg);
  return model;
}

template <typename T>
ParamSetT<T> SegModelT<T>::params() const {
  ParamSetT<T> set;
  appearance.register_params(set, "appearance");
  memory.register_params(set, "memory");
  gates.register_params(set, "gates");
  return set;
}

template <typename T>
MemoryStateT<T> SegModelT<T>::reset_state(int batch, int height, int width) const {
  require(batch >= 1, ErrorCode::precondition, "reset_state: batch must be >= 1");
  require(height % kFeatureStride == 0 && width % kFeatureStride == 0, ErrorCode::precondition,
          "reset_state: spatial dims must be divisible by 4");
  const Shape s{batch, cfg.hidden_channels, height / kFeatureStride, width / kFeatureStride};
  return MemoryStateT<T>{TensorT<T>::create(s), TensorT<T>::create(s)};
}

template <typename T>
std::pair<GatedPredictionT<T>, MemoryStateT<T>> SegModelT<T>::step(
    TapeT<T>* tape, const TensorPtrT<T>& frame, const MemoryStateT<T>& state) const {
  GatedPredictionT<T> pred;
  auto f = appearance.features(tape, frame);
  pred.logits_appr = appearance.logits(tape, f);
  auto next = memory.step(tape, f, state);
  pred.logits_mem = memory.logits(tape, next.h);
  auto [sigma_appr, sigma_mem] = gates.forward(tape, f, next.h);
  pred.sigma_appr = sigma_appr;
  pred.sigma_mem = sigma_mem;
  pred.logits_fused = fuse(tape, pred.logits_appr, pred.logits_mem, sigma_appr, sigma_mem);
  pred.logits_full = upsample_nearest(tape, pred.logits_fused, kFeatureStride);
  return {pred, next};
}

#define TSEG_INSTANTIATE_NETS(T)                                                          \
  template struct Conv2dT<T>;                                                             \
  template struct AppearanceNetT<T>;                                                      \
  template struct MemoryNetT<T>;                                                          \
  template struct GateHeadT<T>;                                                           \
  template struct SegModelT<T>;                                                           \
  template TensorPtrT<T> fuse<T>(TapeT<T>*, const TensorPtrT<T>&, const TensorPtrT<T>&,   \
                                 const TensorPtrT<T>&, const TensorPtrT<T>&);

TSEG_INSTANTIATE_NETS(float)
TSEG_INSTANTIATE_NETS(double)

#undef TSEG_INSTANTIATE_NETS

}  // namespace tseg
