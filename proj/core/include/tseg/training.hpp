#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tseg/nets.hpp"
#include "tseg/synthscene.hpp"

namespace tseg {

enum class OptimizerKind { sgd, adam };

/// Stage 1 trains the appearance network on stills; stage 2 trains the memory
/// network on sequences with the appearance network frozen; stage 3 fine-tunes
/// memory, gates and the appearance head together, with the feature extractor
/// (stem + body) still frozen. Stages 2 and 3 compute the loss from the last
/// frame of each window only.
struct TrainConfig {
  int stage = 1;
  float learning_rate = 1e-3f;
  int epochs = 0;  // 0 selects the per-stage default (see default_epochs)
  int batch_size = 4;
  int sequence_length = 8;  // window length for stages 2 and 3
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 1;
  std::optional<float> grad_clip;  // max gradient L2 norm; disabled by default

  void validate() const;
};

int default_epochs(int stage);

struct LossReport {
  std::vector<double> epoch_mean_loss;
  double first_epoch_loss() const { return epoch_mean_loss.front(); }
  double final_epoch_loss() const { return epoch_mean_loss.back(); }
};

LossReport train_stage1_appearance(SegModel& model, const SequenceSource& stills,
                                   const TrainConfig& cfg);
LossReport train_stage2_memory(SegModel& model, const SequenceSource& sequences,
                               const TrainConfig& cfg);
LossReport train_stage3_gated(SegModel& model, const SequenceSource& sequences,
                              const TrainConfig& cfg);

/// Applies the documented per-stage freezing to a full parameter set:
///   stage 1: memory + gates frozen;
///   stage 2: all appearance parameters (including the head) + gates frozen;
///   stage 3: appearance stem + body frozen, everything else trainable.
void apply_stage_freezing(ParamSet& params, int stage);

/// Checkpoint contents. The byte layout is fixed:
///   "TSEG" | version u32 LE | tensor count u32 LE |
///   per tensor: name length u32 LE, name bytes, ndim u32 LE, dims u32 LE each,
///               raw f32 LE data |
///   PRNG state as 4 x u64 LE words.
/// A one-element meta tensor named "meta.stage" is serialized first and carries
/// the training-stage provenance; the remaining tensors follow the model's
/// parameter registration order.
struct Checkpoint {
  std::uint32_t version = 1;
  int stage = 0;
  std::vector<std::pair<std::string, TensorPtr>> tensors;
  std::array<std::uint64_t, 4> rng_state{};
};

constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const SegModel& model, int stage,
                     const std::array<std::uint64_t, 4>& rng_state);

/// Parses and validates the whole file before returning; a truncated or
/// malformed file yields checkpoint_corrupt, a wrong version
/// checkpoint_version, and nothing is partially applied.
Checkpoint load_checkpoint(const std::string& path);

/// Copies checkpoint tensors into the model. The checkpoint manifest (names and
/// shapes, in order) must exactly match the model's; mismatch yields
/// checkpoint_shape.
void apply_checkpoint(SegModel& model, const Checkpoint& checkpoint);

}  // namespace tseg
