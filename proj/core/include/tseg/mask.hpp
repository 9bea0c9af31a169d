#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tseg/error.hpp"
#include "tseg/tensor.hpp"

namespace tseg {

/// Integer class mask, shaped [H,W] or [N,H,W]. 255 is the conventional ignore label.
struct LabelMask {
  Shape shape;
  std::vector<std::uint8_t> data;

  LabelMask() = default;

  LabelMask(Shape s, std::uint8_t fill_value = 0) : shape(std::move(s)) {
    require(!shape.empty(), ErrorCode::precondition, "mask: shape must have at least one axis");
    for (int d : shape) require(d >= 1, ErrorCode::precondition, "mask: extents must be positive");
    data.assign(std::size_t(shape_numel(shape)), fill_value);
  }

  std::int64_t numel() const { return std::int64_t(data.size()); }
  int ndim() const { return int(shape.size()); }

  bool same_shape(const LabelMask& other) const { return shape == other.shape; }
};

/// Stacks per-frame [H,W] masks into one [N,H,W] batch.
inline LabelMask stack_masks(std::span<const LabelMask> masks) {
  require(!masks.empty(), ErrorCode::precondition, "stack_masks: empty batch");
  const Shape& fs = masks[0].shape;
  require(fs.size() == 2, ErrorCode::precondition, "stack_masks: expected [H,W] masks");
  LabelMask out(Shape{int(masks.size()), fs[0], fs[1]});
  std::size_t offset = 0;
  for (const LabelMask& m : masks) {
    require(m.shape == fs, ErrorCode::precondition, "stack_masks: mismatched mask shapes");
    std::copy(m.data.begin(), m.data.end(), out.data.begin() + std::ptrdiff_t(offset));
    offset += m.data.size();
  }
  return out;
}

/// Nearest-neighbour mask upsampling (each source pixel becomes a factor x factor block).
inline LabelMask upsample_mask(const LabelMask& mask, int factor) {
  require(factor >= 1, ErrorCode::precondition, "upsample_mask: factor must be >= 1");
  require(mask.ndim() == 2 || mask.ndim() == 3, ErrorCode::precondition,
          "upsample_mask: expected [H,W] or [N,H,W]");
  const int n = mask.ndim() == 3 ? mask.shape[0] : 1;
  const int h = mask.shape[mask.ndim() - 2];
  const int w = mask.shape[mask.ndim() - 1];
  Shape out_shape = mask.shape;
  out_shape[mask.ndim() - 2] = h * factor;
  out_shape[mask.ndim() - 1] = w * factor;
  LabelMask out(out_shape);
  for (int b = 0; b < n; ++b) {
    const std::uint8_t* src = mask.data.data() + std::size_t(b) * h * w;
    std::uint8_t* dst = out.data.data() + std::size_t(b) * h * w * factor * factor;
    for (int y = 0; y < h * factor; ++y) {
      const std::uint8_t* src_row = src + std::size_t(y / factor) * w;
      std::uint8_t* dst_row = dst + std::size_t(y) * w * factor;
      for (int x = 0; x < w * factor; ++x) dst_row[x] = src_row[x / factor];
    }
  }
  return out;
}

}  // namespace tseg
