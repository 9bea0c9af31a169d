#include "tseg/eval.hpp"

namespace tseg {

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "appearance_only") return EvalMode::appearance_only;
  if (name == "memory_only") return EvalMode::memory_only;
  if (name == "fused") return EvalMode::fused;
  fail(ErrorCode::precondition,
       "eval: mode must be one of appearance_only, memory_only, fused (got '" + name + "')");
}

const char* to_string(EvalMode mode) {
  switch (mode) {
    case EvalMode::appearance_only: return "appearance_only";
    case EvalMode::memory_only: return "memory_only";
    case EvalMode::fused: return "fused";
  }
  return "unknown";
}

EvalReport evaluate_sequences(const SegModel& model, const SequenceSource& data) {
  require(data.size() > 0, ErrorCode::precondition, "eval: empty dataset");
  EvalReport report(model.cfg.num_classes);
  for (int i = 0; i < data.size(); ++i) {
    const LabeledSequence seq = data.sequence(i);
    require(!seq.frames.empty(), ErrorCode::precondition, "eval: sequence has no frames");
    MemoryState state = model.reset_state(1, seq.height, seq.width);
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      auto frame = Tensor::create({1, 3, seq.height, seq.width});
      frame->data() = seq.frames[t]->data();
      auto [pred, next] = model.step(nullptr, frame, state);
      state = next;

      // Nearest upsampling replicates values, so the per-cell argmax upsampled
      // to frame size equals the argmax of the upsampled logits.
      LabelMask gt = seq.masks[t];
      gt.shape = Shape{1, seq.height, seq.width};
      report.appearance.accumulate(
          upsample_mask(argmax_channels(*pred.logits_appr), kFeatureStride), gt,
          SceneSpec::kIgnoreIndex);
      report.memory.accumulate(upsample_mask(argmax_channels(*pred.logits_mem), kFeatureStride),
                               gt, SceneSpec::kIgnoreIndex);
      report.fused.accumulate(upsample_mask(argmax_channels(*pred.logits_fused), kFeatureStride),
                              gt, SceneSpec::kIgnoreIndex);

      const LabelMask cells = downsample_majority(gt, kFeatureStride);
      report.gates.accumulate(*pred.sigma_appr, *pred.sigma_mem, cells,
                              SceneSpec::kIgnoreIndex);
    }
  }
  return report;
}

}  // namespace tseg
