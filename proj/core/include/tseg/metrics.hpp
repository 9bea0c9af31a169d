#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tseg/mask.hpp"
#include "tseg/tensor.hpp"

namespace tseg {

/// KxK integer pixel counts; entry (gt, pred) counts pixels whose ground truth
/// is gt and prediction is pred. Ignore-labeled ground-truth pixels are skipped.
/// Accumulation is exact integer arithmetic, so sharded accumulation followed by
/// merge() equals one-pass accumulation.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  void accumulate(const LabelMask& pred, const LabelMask& gt, int ignore_index = 255);
  void merge(const ConfusionMatrix& other);

  std::uint64_t at(int gt, int pred) const;
  std::uint64_t total() const;
  int num_classes() const { return num_classes_; }

  bool operator==(const ConfusionMatrix& other) const = default;

 private:
  int num_classes_;
  std::vector<std::uint64_t> counts_;
};

/// IoU_k = cm[k][k] / (row_k + col_k - cm[k][k]); nullopt when the class is
/// absent from both ground truth and prediction.
std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm);

/// Arithmetic mean over defined classes; errors when every class is undefined.
double mean_iou(const ConfusionMatrix& cm);

struct StuffThingIoU {
  std::optional<double> stuff;
  std::optional<double> thing;
};

/// Means over the given stuff classes and over the remaining (thing) classes.
StuffThingIoU stuff_thing_report(const ConfusionMatrix& cm, std::span<const int> stuff_classes);

/// Majority-vote downsampling of a class mask by an integer factor. Ties resolve
/// to the smallest label value, so a real class always beats a tied ignore count;
/// cells with an ignore majority come out as ignore.
LabelMask downsample_majority(const LabelMask& mask, int factor);

/// Per-frame argmax over the class axis of [N,K,H,W] logits (first maximum wins).
LabelMask argmax_channels(const Tensor& logits);

/// Per-class mean and histogram of the two confidence gates, restricted to cells
/// whose (majority-downsampled) ground-truth class is that class.
class GateStats {
 public:
  static constexpr int kBins = 10;

  explicit GateStats(int num_classes);

  /// sigma maps are [N,1,h,w]; cells is the matching [N,h,w] downsampled mask.
  void accumulate(const Tensor& sigma_appr, const Tensor& sigma_mem, const LabelMask& cells,
                  int ignore_index = 255);

  std::uint64_t count(int cls) const;
  std::uint64_t total_cells() const;
  std::optional<double> mean_appr(int cls) const;
  std::optional<double> mean_mem(int cls) const;
  const std::array<std::uint64_t, kBins>& hist_appr(int cls) const;
  const std::array<std::uint64_t, kBins>& hist_mem(int cls) const;

  /// Pixel-pooled means over a set of classes (not mean-of-class-means).
  std::optional<double> pooled_mean_appr(std::span<const int> classes) const;
  std::optional<double> pooled_mean_mem(std::span<const int> classes) const;

  int num_classes() const { return int(per_class_.size()); }

 private:
  struct ClassAcc {
    std::uint64_t count = 0;
    double sum_appr = 0.0;
    double sum_mem = 0.0;
    std::array<std::uint64_t, kBins> hist_appr{};
    std::array<std::uint64_t, kBins> hist_mem{};
  };
  std::vector<ClassAcc> per_class_;
};

/// Aligned per-class table followed by machine-readable key=value lines
/// (iou_<name>=..., then mean_iou, stuff_iou, thing_iou).
void write_metrics_report(std::ostream& out, const ConfusionMatrix& cm,
                          std::span<const char* const> class_names,
                          std::span<const int> stuff_classes);

}  // namespace tseg
