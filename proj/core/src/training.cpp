#include "tseg/training.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "tseg/ops.hpp"
#include "tseg/rng.hpp"
#include "tseg/tape.hpp"

namespace tseg {

namespace {

struct Batch {
  TensorPtr frames;  // [B,3,H,W]
  LabelMask labels;  // [B,H,W]
};

TensorPtr stack_frames(const std::vector<TensorPtr>& frames) {
  require(!frames.empty(), ErrorCode::precondition, "stack_frames: empty batch");
  const Shape& fs = frames[0]->shape();
  require(fs.size() == 3, ErrorCode::precondition, "stack_frames: expected [C,H,W] frames");
  auto out = Tensor::create({int(frames.size()), fs[0], fs[1], fs[2]});
  const std::size_t per = std::size_t(shape_numel(fs));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    require(frames[i]->shape() == fs, ErrorCode::precondition, "stack_frames: shape mismatch");
    std::memcpy(out->data().data() + i * per, frames[i]->data().data(), per * sizeof(float));
  }
  return out;
}

void shuffle_indices(std::vector<int>& indices, Rng& rng) {
  for (std::size_t i = indices.size(); i > 1; --i) {
    const int j = rng.uniform_int(0, int(i) - 1);
    std::swap(indices[i - 1], indices[std::size_t(j)]);
  }
}

template <typename StepFn>
LossReport run_epochs(const TrainConfig& cfg, int stage, std::size_t item_count, StepFn step_fn) {
  const int epochs = cfg.epochs > 0 ? cfg.epochs : default_epochs(stage);
  LossReport report;
  std::vector<int> order(item_count);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    Rng shuffle_rng(hash_combine(cfg.seed, std::uint64_t(stage), std::uint64_t(epoch)),
                    /*stream=*/2);
    shuffle_indices(order, shuffle_rng);
    double loss_sum = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += std::size_t(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + std::size_t(cfg.batch_size));
      std::vector<int> batch(order.begin() + std::ptrdiff_t(start),
                             order.begin() + std::ptrdiff_t(end));
      loss_sum += step_fn(batch);
      ++steps;
    }
    report.epoch_mean_loss.push_back(steps > 0 ? loss_sum / steps : 0.0);
  }
  return report;
}

struct Optimizer {
  OptimizerKind kind;
  float lr;
  Adam adam;

  explicit Optimizer(const TrainConfig& cfg)
      : kind(cfg.optimizer), lr(cfg.learning_rate), adam(Adam::Options{cfg.learning_rate}) {}

  void step(ParamSet& params) {
    if (kind == OptimizerKind::adam) {
      adam.step(params);
    } else {
      sgd_step(params, lr);
    }
  }
};

void maybe_clip(ParamSet& params, const TrainConfig& cfg) {
  if (cfg.grad_clip.has_value()) clip_grad_norm(params, *cfg.grad_clip);
}

}  // namespace

void TrainConfig::validate() const {
  require(stage >= 1 && stage <= 3, ErrorCode::precondition, "train: stage must be 1, 2 or 3");
  require(learning_rate > 0.0f, ErrorCode::precondition, "train: learning_rate must be positive");
  require(epochs >= 0, ErrorCode::precondition, "train: epochs must be >= 0");
  require(batch_size >= 1, ErrorCode::precondition, "train: batch_size must be >= 1");
  if (stage >= 2) {
    require(sequence_length >= 2, ErrorCode::precondition,
            "train: sequence_length must be >= 2 for stages 2 and 3");
  }
  if (grad_clip.has_value()) {
    require(*grad_clip > 0.0f, ErrorCode::precondition, "train: grad_clip must be positive");
  }
}

int default_epochs(int stage) {
  switch (stage) {
    case 1: return 2;
    case 2: return 3;
    case 3: return 3;
  }
  fail(ErrorCode::precondition, "default_epochs: stage must be 1, 2 or 3");
}

void apply_stage_freezing(ParamSet& params, int stage) {
  switch (stage) {
    case 1:
      params.set_frozen_prefix("memory.", true);
      params.set_frozen_prefix("gates.", true);
      return;
    case 2:
      params.set_frozen_prefix("appearance.", true);
      params.set_frozen_prefix("gates.", true);
      return;
    case 3:
      params.set_frozen_prefix("appearance.", true);
      params.set_frozen_prefix("appearance.head.", false);
      return;
  }
  fail(ErrorCode::precondition, "apply_stage_freezing: stage must be 1, 2 or 3");
}

LossReport train_stage1_appearance(SegModel& model, const SequenceSource& stills,
                                   const TrainConfig& cfg) {
  cfg.validate();
  require(cfg.stage == 1, ErrorCode::precondition, "train_stage1: cfg.stage must be 1");
  require(stills.size() > 0, ErrorCode::precondition, "train_stage1: empty dataset");

  std::vector<std::pair<int, int>> items;  // (sequence, frame)
  for (int i = 0; i < stills.size(); ++i) {
    for (int t = 0; t < stills.frame_count(i); ++t) items.emplace_back(i, t);
  }
  require(!items.empty(), ErrorCode::precondition, "train_stage1: dataset has no frames");

  ParamSet params = model.params();
  apply_stage_freezing(params, 1);
  Optimizer opt(cfg);

  return run_epochs(cfg, 1, items.size(), [&](const std::vector<int>& batch) {
    std::vector<TensorPtr> frames;
    std::vector<LabelMask> masks;
    for (int idx : batch) {
      LabeledFrame f = stills.frame(items[std::size_t(idx)].first, items[std::size_t(idx)].second);
      frames.push_back(std::move(f.image));
      masks.push_back(std::move(f.mask));
    }
    Batch b{stack_frames(frames), stack_masks(masks)};
    Tape tape;
    auto features = model.appearance.features(&tape, b.frames);
    auto logits = model.appearance.logits(&tape, features);
    auto full = upsample_nearest(&tape, logits, kFeatureStride);
    auto loss = softmax_cross_entropy(&tape, full, b.labels, SceneSpec::kIgnoreIndex);
    const double value = double(loss->scalar());
    backward(loss, tape);
    maybe_clip(params, cfg);
    opt.step(params);
    return value;
  });
}

namespace {

struct WindowRef {
  int sequence;
  int offset;
};

// Fixed-length windows at stride sequence_length; the trailing remainder of a
// sequence is dropped. Memory state resets at every window start.
std::vector<WindowRef> build_windows(const SequenceSource& data, const TrainConfig& cfg) {
  require(data.size() > 0, ErrorCode::precondition, "train: empty dataset");
  std::vector<WindowRef> windows;
  for (int i = 0; i < data.size(); ++i) {
    const int frames = data.frame_count(i);
    require(frames >= cfg.sequence_length, ErrorCode::precondition,
            "train: sequence shorter than sequence_length");
    for (int off = 0; off + cfg.sequence_length <= frames; off += cfg.sequence_length) {
      windows.push_back(WindowRef{i, off});
    }
  }
  return windows;
}

Batch load_step_batch(const SequenceSource& data, const std::vector<WindowRef>& windows,
                      const std::vector<int>& batch, int t, bool with_labels) {
  std::vector<TensorPtr> frames;
  std::vector<LabelMask> masks;
  for (int idx : batch) {
    const WindowRef& wnd = windows[std::size_t(idx)];
    LabeledFrame f = data.frame(wnd.sequence, wnd.offset + t);
    frames.push_back(std::move(f.image));
    if (with_labels) masks.push_back(std::move(f.mask));
  }
  Batch b;
  b.frames = stack_frames(frames);
  if (with_labels) b.labels = stack_masks(masks);
  return b;
}

}  // namespace

LossReport train_stage2_memory(SegModel& model, const SequenceSource& sequences,
                               const TrainConfig& cfg) {
  cfg.validate();
  require(cfg.stage == 2, ErrorCode::precondition, "train_stage2: cfg.stage must be 2");
  const std::vector<WindowRef> windows = build_windows(sequences, cfg);

  ParamSet params = model.params();
  apply_stage_freezing(params, 2);
  Optimizer opt(cfg);
  const int len = cfg.sequence_length;

  return run_epochs(cfg, 2, windows.size(), [&](const std::vector<int>& batch) {
    Tape tape;
    MemoryState state;
    TensorPtr last_labelless_features;
    LabelMask last_labels;
    for (int t = 0; t < len; ++t) {
      const bool last = t == len - 1;
      Batch b = load_step_batch(sequences, windows, batch, t, /*with_labels=*/last);
      // Appearance runs off-tape: its parameters are frozen this stage, so no
      // gradient ever needs to flow into or through it.
      auto features = model.appearance.features(nullptr, b.frames);
      if (t == 0) {
        state = model.reset_state(b.frames->dim(0), b.frames->dim(2), b.frames->dim(3));
      }
      state = model.memory.step(&tape, features, state);
      if (last) {
        last_labels = std::move(b.labels);
        last_labelless_features = features;
      }
    }
    auto logits_mem = model.memory.logits(&tape, state.h);
    auto full = upsample_nearest(&tape, logits_mem, kFeatureStride);
    auto loss = softmax_cross_entropy(&tape, full, last_labels, SceneSpec::kIgnoreIndex);
    const double value = double(loss->scalar());
    backward(loss, tape);
    maybe_clip(params, cfg);
    opt.step(params);
    return value;
  });
}

LossReport train_stage3_gated(SegModel& model, const SequenceSource& sequences,
                              const TrainConfig& cfg) {
  cfg.validate();
  require(cfg.stage == 3, ErrorCode::precondition, "train_stage3: cfg.stage must be 3");
  const std::vector<WindowRef> windows = build_windows(sequences, cfg);

  ParamSet params = model.params();
  apply_stage_freezing(params, 3);
  Optimizer opt(cfg);
  const int len = cfg.sequence_length;

  return run_epochs(cfg, 3, windows.size(), [&](const std::vector<int>& batch) {
    Tape tape;
    MemoryState state;
    TensorPtr last_features;
    LabelMask last_labels;
    for (int t = 0; t < len; ++t) {
      const bool last = t == len - 1;
      Batch b = load_step_batch(sequences, windows, batch, t, /*with_labels=*/last);
      // Stem and body are frozen; only the 1x1 appearance head trains, so the
      // backbone runs off-tape and the head is applied on-tape at the last frame.
      auto features = model.appearance.features(nullptr, b.frames);
      if (t == 0) {
        state = model.reset_state(b.frames->dim(0), b.frames->dim(2), b.frames->dim(3));
      }
      state = model.memory.step(&tape, features, state);
      if (last) {
        last_features = features;
        last_labels = std::move(b.labels);
      }
    }
    auto logits_appr = model.appearance.logits(&tape, last_features);
    auto logits_mem = model.memory.logits(&tape, state.h);
    auto [sigma_appr, sigma_mem] = model.gates.forward(&tape, last_features, state.h);
    auto fused = fuse(&tape, logits_appr, logits_mem, sigma_appr, sigma_mem);
    auto full = upsample_nearest(&tape, fused, kFeatureStride);
    auto loss = softmax_cross_entropy(&tape, full, last_labels, SceneSpec::kIgnoreIndex);
    const double value = double(loss->scalar());
    backward(loss, tape);
    maybe_clip(params, cfg);
    opt.step(params);
    return value;
  });
}

}  // namespace tseg
