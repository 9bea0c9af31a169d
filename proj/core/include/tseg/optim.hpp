#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tseg/tensor.hpp"

namespace tseg {

/// Ordered mapping from unique names to parameter tensors, with a per-parameter
/// frozen flag. Iteration order is insertion order, which keeps every consumer
/// (optimizers, checkpoints) deterministic. Frozen parameters are never modified
/// by an optimizer step and never acquire optimizer state.
template <typename T>
class ParamSetT {
 public:
  struct Entry {
    std::string name;
    TensorPtrT<T> tensor;
    bool frozen = false;
  };

  void add(std::string name, TensorPtrT<T> tensor, bool frozen = false);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  TensorPtrT<T> get(const std::string& name) const;
  bool frozen(const std::string& name) const;
  void set_frozen(const std::string& name, bool frozen);
  /// Applies to every entry whose name starts with `prefix`; returns the count.
  int set_frozen_prefix(std::string_view prefix, bool frozen);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using ParamSet = ParamSetT<float>;

/// In-place SGD update: p -= lr * grad. Grads are zeroed afterwards; frozen
/// entries stay byte-identical (any stray grads on them are discarded).
template <typename T>
void sgd_step(ParamSetT<T>& params, T lr);

/// Adam with bias correction. Moment buffers are created lazily per parameter
/// and only ever for non-frozen entries.
template <typename T>
class AdamT {
 public:
  struct Options {
    T lr = T(1e-3);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
  };

  AdamT() = default;
  explicit AdamT(Options options) : options_(options) {}

  void step(ParamSetT<T>& params);
  std::int64_t step_count() const { return step_count_; }
  const Options& options() const { return options_; }

 private:
  struct Moments {
    std::vector<T> m, v;
  };
  Options options_;
  std::int64_t step_count_ = 0;
  std::unordered_map<std::string, Moments> state_;
};

using Adam = AdamT<float>;

/// Global L2-norm gradient clipping over non-frozen entries.
template <typename T>
void clip_grad_norm(ParamSetT<T>& params, T max_norm);

}  // namespace tseg
