#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tseg/mask.hpp"
#include "tseg/netpbm.hpp"
#include "tseg/tensor.hpp"

namespace tseg {

// Class ids. Bands run top to bottom: building, terrain, sidewalk, road.
inline constexpr std::uint8_t kRoad = 0;
inline constexpr std::uint8_t kSidewalk = 1;
inline constexpr std::uint8_t kTerrain = 2;
inline constexpr std::uint8_t kBuilding = 3;
inline constexpr std::uint8_t kCar = 4;
inline constexpr std::uint8_t kPerson = 5;

inline constexpr std::array<const char*, 6> kClassNames = {"road",     "sidewalk", "terrain",
                                                           "building", "car",      "person"};
inline constexpr std::array<int, 4> kStuffClasses = {kRoad, kSidewalk, kTerrain, kBuilding};
inline constexpr std::array<int, 2> kThingClasses = {kCar, kPerson};

/// Fixed symmetric pairing used by texture flicker: road<->sidewalk, terrain<->building.
constexpr int flicker_pair(int cls) {
  switch (cls) {
    case kRoad: return kSidewalk;
    case kSidewalk: return kRoad;
    case kTerrain: return kBuilding;
    case kBuilding: return kTerrain;
  }
  return cls;
}

// Fixed object footprints, in pixels.
inline constexpr int kCarWidth = 20;
inline constexpr int kCarHeight = 10;
inline constexpr int kPersonWidth = 7;
inline constexpr int kPersonHeight = 13;

/// Parameters of the synthetic driving-like benchmark. Defaults reproduce the
/// flicker benchmark configuration.
///
/// Corruption (flicker, border blur+noise) perturbs pixels only, never labels.
/// Each stuff band independently swaps its texture for the paired class's
/// texture with probability flicker_prob per frame, which makes a flickered
/// region indistinguishable from the paired class within a single frame.
struct SceneSpec {
  int width = 64;
  int height = 64;
  int frames_per_sequence = 8;
  int camera_speed = 2;             // horizontal scroll, pixels/frame
  int num_cars = 2;
  int num_persons = 2;
  float object_speed_range = 3.0f;  // per-object |vx| drawn from [0.25, range]
  float flicker_prob = 0.3f;        // per stuff band, per frame
  int border_band = 6;              // margin width receiving blur+noise
  float noise_sigma = 0.05f;        // border noise std-dev, in [0,1] pixel units
  std::uint64_t seed = 1;

  static constexpr int kNumClasses = 6;
  static constexpr int kIgnoreIndex = 255;

  void validate() const;
};

/// Ordered frames plus per-pixel class masks. The flicker annotations record
/// which stuff band showed its paired texture at each frame (analysis only;
/// they are not part of the on-disk dataset).
struct LabeledSequence {
  int width = 0;
  int height = 0;
  std::vector<TensorPtr> frames;             // [3,H,W], values in [0,1]
  std::vector<LabelMask> masks;              // [H,W], values in {0..5}
  std::vector<std::array<bool, 4>> flicker;  // per frame, indexed by stuff class id
};

struct LabeledFrame {
  TensorPtr image;  // [3,H,W]
  LabelMask mask;   // [H,W]
};

/// Deterministic function of (spec.seed, sequence_index).
LabeledSequence generate_sequence(const SceneSpec& spec, int sequence_index);

struct DatasetManifest {
  SceneSpec spec;
  int num_train = 0;
  int num_val = 0;
};

/// Writes <out_dir>/{train,val}/seq_%04d/{frame,label}_%05d.{ppm,pgm} plus
/// manifest.txt. Validation sequences use sequence indices offset by num_train,
/// so the two splits never share a (seed, sequence_index) pair.
DatasetManifest generate_dataset(const SceneSpec& spec, int num_train, int num_val,
                                 const std::string& out_dir, bool overwrite = false);

DatasetManifest read_manifest(const std::string& dataset_dir);

/// Uniform access to labeled sequences for training and evaluation.
class SequenceSource {
 public:
  virtual ~SequenceSource() = default;
  virtual int size() const = 0;
  virtual int frame_count(int sequence_index) const = 0;
  virtual LabeledSequence sequence(int sequence_index) const = 0;
  /// Single frame access; avoids decoding whole sequences for still-image training.
  virtual LabeledFrame frame(int sequence_index, int frame_index) const = 0;
};

class MemorySequenceSource final : public SequenceSource {
 public:
  explicit MemorySequenceSource(std::vector<LabeledSequence> sequences)
      : sequences_(std::move(sequences)) {}
  int size() const override { return int(sequences_.size()); }
  int frame_count(int sequence_index) const override;
  LabeledSequence sequence(int sequence_index) const override;
  LabeledFrame frame(int sequence_index, int frame_index) const override;

 private:
  std::vector<LabeledSequence> sequences_;
};

/// Reads sequences lazily from a generated dataset directory.
class DiskSequenceSource final : public SequenceSource {
 public:
  DiskSequenceSource(const std::string& dataset_dir, const std::string& split);
  int size() const override { return count_; }
  int frame_count(int sequence_index) const override;
  LabeledSequence sequence(int sequence_index) const override;
  LabeledFrame frame(int sequence_index, int frame_index) const override;
  const DatasetManifest& manifest() const { return manifest_; }

 private:
  std::string sequence_dir(int sequence_index) const;
  DatasetManifest manifest_;
  std::string root_;
  std::string split_;
  int count_ = 0;
};

/// [3,H,W] float tensor in [0,1] from an interleaved RGB image (value = byte/255).
TensorPtr frame_to_tensor(const ImageU8& image);
/// Inverse of frame_to_tensor; byte = round(value*255), clamped.
ImageU8 tensor_to_frame(const Tensor& tensor);

}  // namespace tseg
