#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "tseg/error.hpp"
#include "tseg/tensor.hpp"

namespace tseg {

/// Ordered record of executed differentiable operations.
/// Backward replays the record in exact reverse execution order; because every
/// operation only reads tensors that already existed when it ran, reverse
/// execution order is a valid topological order of the graph.
template <typename T>
class TapeT {
 public:
  using BackwardFn = std::function<void()>;

  void record(TensorPtrT<T> output, BackwardFn fn) {
    nodes_.push_back(Node{std::move(output), std::move(fn)});
  }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  void clear() { nodes_.clear(); }

  bool produced(const TensorT<T>* tensor) const {
    for (const Node& n : nodes_) {
      if (n.output.get() == tensor) return true;
    }
    return false;
  }

  template <typename U>
  friend void backward(const TensorPtrT<U>& loss, TapeT<U>& tape);

 private:
  struct Node {
    TensorPtrT<T> output;
    BackwardFn fn;
  };
  std::vector<Node> nodes_;
};

using Tape = TapeT<float>;

/// Seeds d(loss)/d(loss) = 1, replays the tape backward, then clears it.
template <typename T>
void backward(const TensorPtrT<T>& loss, TapeT<T>& tape) {
  require(loss != nullptr, ErrorCode::precondition, "backward: null loss");
  require(loss->numel() == 1, ErrorCode::precondition, "backward: loss must be scalar");
  require(tape.produced(loss.get()), ErrorCode::precondition, "backward: loss is not on the tape");
  loss->grad()[0] = T(1);
  for (auto it = tape.nodes_.rbegin(); it != tape.nodes_.rend(); ++it) {
    it->fn();
  }
  tape.clear();
}

}  // namespace tseg
