#include "tseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace tseg {

ConfusionMatrix::ConfusionMatrix(int num_classes) : num_classes_(num_classes) {
  require(num_classes >= 1 && num_classes < 255, ErrorCode::precondition,
          "confusion: class count must be in [1,255)");
  counts_.assign(std::size_t(num_classes) * num_classes, 0);
}

void ConfusionMatrix::accumulate(const LabelMask& pred, const LabelMask& gt, int ignore_index) {
  require(pred.shape == gt.shape, ErrorCode::precondition, "confusion: shape mismatch");
  const int k = num_classes_;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    const int g = gt.data[i];
    if (g == ignore_index) continue;
    require(g < k, ErrorCode::precondition, "confusion: ground-truth class out of range");
    const int p = pred.data[i];
    require(p < k, ErrorCode::precondition, "confusion: predicted class out of range");
    ++counts_[std::size_t(g) * k + p];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  require(other.num_classes_ == num_classes_, ErrorCode::precondition,
          "confusion: class count mismatch in merge");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::at(int gt, int pred) const {
  require(gt >= 0 && gt < num_classes_ && pred >= 0 && pred < num_classes_,
          ErrorCode::precondition, "confusion: index out of range");
  return counts_[std::size_t(gt) * num_classes_ + pred];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t c : counts_) sum += c;
  return sum;
}

std::vector<std::optional<double>> per_class_iou(const ConfusionMatrix& cm) {
  const int k = cm.num_classes();
  std::vector<std::optional<double>> iou(static_cast<std::size_t>(k), std::nullopt);
  for (int c = 0; c < k; ++c) {
    std::uint64_t row = 0, col = 0;
    for (int j = 0; j < k; ++j) {
      row += cm.at(c, j);
      col += cm.at(j, c);
    }
    const std::uint64_t tp = cm.at(c, c);
    const std::uint64_t denom = row + col - tp;
    if (denom > 0) iou[std::size_t(c)] = double(tp) / double(denom);
  }
  return iou;
}

double mean_iou(const ConfusionMatrix& cm) {
  const auto iou = per_class_iou(cm);
  double sum = 0.0;
  int defined = 0;
  for (const auto& v : iou) {
    if (v.has_value()) {
      sum += *v;
      ++defined;
    }
  }
  require(defined > 0, ErrorCode::precondition, "mean_iou: all classes undefined");
  return sum / double(defined);
}

StuffThingIoU stuff_thing_report(const ConfusionMatrix& cm, std::span<const int> stuff_classes) {
  const auto iou = per_class_iou(cm);
  auto is_stuff = [&stuff_classes](int c) {
    return std::find(stuff_classes.begin(), stuff_classes.end(), c) != stuff_classes.end();
  };
  double stuff_sum = 0.0, thing_sum = 0.0;
  int stuff_n = 0, thing_n = 0;
  for (int c = 0; c < cm.num_classes(); ++c) {
    if (!iou[std::size_t(c)].has_value()) continue;
    if (is_stuff(c)) {
      stuff_sum += *iou[std::size_t(c)];
      ++stuff_n;
    } else {
      thing_sum += *iou[std::size_t(c)];
      ++thing_n;
    }
  }
  StuffThingIoU out;
  if (stuff_n > 0) out.stuff = stuff_sum / stuff_n;
  if (thing_n > 0) out.thing = thing_sum / thing_n;
  return out;
}

LabelMask downsample_majority(const LabelMask& mask, int factor) {
  require(factor >= 1, ErrorCode::precondition, "downsample_majority: factor must be >= 1");
  require(mask.ndim() == 2 || mask.ndim() == 3, ErrorCode::precondition,
          "downsample_majority: expected [H,W] or [N,H,W]");
  const int n = mask.ndim() == 3 ? mask.shape[0] : 1;
  const int h = mask.shape[mask.ndim() - 2];
  const int w = mask.shape[mask.ndim() - 1];
  require(h % factor == 0 && w % factor == 0, ErrorCode::precondition,
          "downsample_majority: dims must be divisible by factor");
  Shape out_shape = mask.shape;
  out_shape[mask.ndim() - 2] = h / factor;
  out_shape[mask.ndim() - 1] = w / factor;
  LabelMask out(out_shape);
  std::array<int, 256> counts{};
  for (int b = 0; b < n; ++b) {
    const std::uint8_t* src = mask.data.data() + std::size_t(b) * h * w;
    std::uint8_t* dst = out.data.data() + std::size_t(b) * (h / factor) * (w / factor);
    for (int cy = 0; cy < h / factor; ++cy) {
      for (int cx = 0; cx < w / factor; ++cx) {
        counts.fill(0);
        for (int dy = 0; dy < factor; ++dy) {
          const std::uint8_t* row = src + std::size_t(cy * factor + dy) * w + cx * factor;
          for (int dx = 0; dx < factor; ++dx) ++counts[row[dx]];
        }
        // Smallest label wins ties, so ignore (255) needs a strict majority.
        int best = 0;
        for (int v = 1; v < 256; ++v) {
          if (counts[std::size_t(v)] > counts[std::size_t(best)]) best = v;
        }
        dst[std::size_t(cy) * (w / factor) + cx] = std::uint8_t(best);
      }
    }
  }
  return out;
}

LabelMask argmax_channels(const Tensor& logits) {
  require(logits.ndim() == 4, ErrorCode::precondition, "argmax_channels: expected [N,K,H,W]");
  const int n = logits.dim(0), k = logits.dim(1), h = logits.dim(2), w = logits.dim(3);
  require(k <= 255, ErrorCode::precondition, "argmax_channels: too many classes for u8 mask");
  LabelMask out(Shape{n, h, w});
  const std::int64_t plane = std::int64_t(h) * w;
  for (int b = 0; b < n; ++b) {
    const float* base = logits.data().data() + std::int64_t(b) * k * plane;
    std::uint8_t* dst = out.data.data() + std::int64_t(b) * plane;
    for (std::int64_t i = 0; i < plane; ++i) {
      int best = 0;
      float best_v = base[i];
      for (int c = 1; c < k; ++c) {
        const float v = base[c * plane + i];
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      dst[i] = std::uint8_t(best);
    }
  }
  return out;
}

GateStats::GateStats(int num_classes) {
  require(num_classes >= 1 && num_classes < 255, ErrorCode::precondition,
          "gate_stats: class count must be in [1,255)");
  per_class_.resize(std::size_t(num_classes));
}

void GateStats::accumulate(const Tensor& sigma_appr, const Tensor& sigma_mem,
                           const LabelMask& cells, int ignore_index) {
  require(sigma_appr.ndim() == 4 && sigma_appr.dim(1) == 1, ErrorCode::precondition,
          "gate_stats: sigma_appr must be [N,1,h,w]");
  require(sigma_mem.shape() == sigma_appr.shape(), ErrorCode::precondition,
          "gate_stats: gate shape mismatch");
  const int n = sigma_appr.dim(0), h = sigma_appr.dim(2), w = sigma_appr.dim(3);
  require(cells.shape == Shape{n, h, w}, ErrorCode::precondition,
          "gate_stats: cell mask does not match gate resolution");
  const int k = num_classes();
  for (std::size_t i = 0; i < cells.data.size(); ++i) {
    const int cls = cells.data[i];
    if (cls == ignore_index) continue;
    require(cls < k, ErrorCode::precondition, "gate_stats: class out of range");
    const double a = double(sigma_appr.data()[i]);
    const double m = double(sigma_mem.data()[i]);
    ClassAcc& acc = per_class_[std::size_t(cls)];
    ++acc.count;
    acc.sum_appr += a;
    acc.sum_mem += m;
    ++acc.hist_appr[std::size_t(std::min(kBins - 1, int(a * kBins)))];
    ++acc.hist_mem[std::size_t(std::min(kBins - 1, int(m * kBins)))];
  }
}

std::uint64_t GateStats::count(int cls) const { return per_class_.at(std::size_t(cls)).count; }

std::uint64_t GateStats::total_cells() const {
  std::uint64_t sum = 0;
  for (const auto& acc : per_class_) sum += acc.count;
  return sum;
}

std::optional<double> GateStats::mean_appr(int cls) const {
  const ClassAcc& acc = per_class_.at(std::size_t(cls));
  if (acc.count == 0) return std::nullopt;
  return acc.sum_appr / double(acc.count);
}

std::optional<double> GateStats::mean_mem(int cls) const {
  const ClassAcc& acc = per_class_.at(std::size_t(cls));
  if (acc.count == 0) return std::nullopt;
  return acc.sum_mem / double(acc.count);
}

const std::array<std::uint64_t, GateStats::kBins>& GateStats::hist_appr(int cls) const {
  return per_class_.at(std::size_t(cls)).hist_appr;
}

const std::array<std::uint64_t, GateStats::kBins>& GateStats::hist_mem(int cls) const {
  return per_class_.at(std::size_t(cls)).hist_mem;
}

std::optional<double> GateStats::pooled_mean_appr(std::span<const int> classes) const {
  double sum = 0.0;
  std::uint64_t count = 0;
  for (int c : classes) {
    const ClassAcc& acc = per_class_.at(std::size_t(c));
    sum += acc.sum_appr;
    count += acc.count;
  }
  if (count == 0) return std::nullopt;
  return sum / double(count);
}

std::optional<double> GateStats::pooled_mean_mem(std::span<const int> classes) const {
  double sum = 0.0;
  std::uint64_t count = 0;
  for (int c : classes) {
    const ClassAcc& acc = per_class_.at(std::size_t(c));
    sum += acc.sum_mem;
    count += acc.count;
  }
  if (count == 0) return std::nullopt;
  return sum / double(count);
}

void write_metrics_report(std::ostream& out, const ConfusionMatrix& cm,
                          std::span<const char* const> class_names,
                          std::span<const int> stuff_classes) {
  require(int(class_names.size()) == cm.num_classes(), ErrorCode::precondition,
          "metrics report: class name count mismatch");
  const auto iou = per_class_iou(cm);
  const auto st = stuff_thing_report(cm, stuff_classes);

  auto fmt = [](const std::optional<double>& v) {
    if (!v.has_value()) return std::string("nan");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };

  std::size_t name_w = 8;
  for (const char* n : class_names) name_w = std::max(name_w, std::string(n).size());
  out << std::left << std::setw(int(name_w) + 2) << "class" << "iou\n";
  for (int c = 0; c < cm.num_classes(); ++c) {
    out << std::left << std::setw(int(name_w) + 2) << class_names[std::size_t(c)]
        << fmt(iou[std::size_t(c)]) << "\n";
  }
  out << std::left << std::setw(int(name_w) + 2) << "mean" << fmt(mean_iou(cm)) << "\n";
  out << std::left << std::setw(int(name_w) + 2) << "stuff" << fmt(st.stuff) << "\n";
  out << std::left << std::setw(int(name_w) + 2) << "thing" << fmt(st.thing) << "\n";
  out << "\n";
  for (int c = 0; c < cm.num_classes(); ++c) {
    out << "iou_" << class_names[std::size_t(c)] << "=" << fmt(iou[std::size_t(c)]) << "\n";
  }
  out << "mean_iou=" << fmt(mean_iou(cm)) << "\n";
  out << "stuff_iou=" << fmt(st.stuff) << "\n";
  out << "thing_iou=" << fmt(st.thing) << "\n";
}

}  // namespace tseg
