#pragma once

#include "tseg/metrics.hpp"
#include "tseg/nets.hpp"
#include "tseg/synthscene.hpp"

namespace tseg {

enum class EvalMode { appearance_only, memory_only, fused };

EvalMode parse_eval_mode(const std::string& name);
const char* to_string(EvalMode mode);

/// One causal pass over every sequence (state reset per sequence, metrics on
/// every frame) scoring all three prediction sources, plus gate statistics over
/// majority-downsampled ground-truth cells.
struct EvalReport {
  ConfusionMatrix appearance;
  ConfusionMatrix memory;
  ConfusionMatrix fused;
  GateStats gates;

  explicit EvalReport(int num_classes)
      : appearance(num_classes), memory(num_classes), fused(num_classes), gates(num_classes) {}

  const ConfusionMatrix& for_mode(EvalMode mode) const {
    switch (mode) {
      case EvalMode::appearance_only: return appearance;
      case EvalMode::memory_only: return memory;
      case EvalMode::fused: return fused;
    }
    fail(ErrorCode::precondition, "eval: unknown mode");
  }
};

EvalReport evaluate_sequences(const SegModel& model, const SequenceSource& data);

}  // namespace tseg
