#pragma once

#include <cstdint>
#include <string>

#include "tseg/synthscene.hpp"
#include "tseg/training.hpp"

namespace tseg::cli {

/// Union of scene, model and training parameters plus paths. Values come from
/// built-in defaults, then a key=value config file, then command-line flags
/// (flags win). Unknown keys fail fast.
struct RunConfig {
  SceneSpec scene;
  int num_train = 500;
  int num_val = 100;

  int feat_channels = 16;
  int hidden_channels = 16;
  int num_classes = 6;

  TrainConfig train;
  std::uint64_t seed = 1;

  std::string out;
  std::string data;
  std::string ckpt;
  std::string init;
  std::string seq;
  std::string split = "val";
  std::string mode = "fused";
  bool force = false;
  bool self_eval = false;

  /// Scene spec with the shared seed applied.
  SceneSpec scene_spec() const;
  /// Train config with the shared seed applied.
  TrainConfig train_config() const;
  ModelConfig model_config() const;
};

/// Applies one schema key; throws Error(config) on unknown keys or bad values.
void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Loads a key=value file ('#' comments and blank lines allowed).
void load_config_file(RunConfig& cfg, const std::string& path);

OptimizerKind parse_optimizer(const std::string& name);

}  // namespace tseg::cli
