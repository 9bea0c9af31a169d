#pragma once

#include <functional>
#include <vector>

#include "tseg/ops.hpp"
#include "tseg/rng.hpp"
#include "tseg/tape.hpp"
#include "tseg/tensor.hpp"

namespace tseg::test {

// Central finite differences against tape gradients.
//
// The error metric is |analytic - numeric| / max(1, |analytic|, |numeric|):
// relative for large gradients, absolute (with unit scale) for small ones,
// which keeps the comparison meaningful where the finite-difference noise
// floor dominates tiny true gradients.
template <typename T>
struct GradCheck {
  // Forward pass building a scalar loss from the checked tensors. Called with
  // a tape for the analytic pass and with nullptr for every numeric probe.
  using LossFn = std::function<TensorPtrT<T>(TapeT<T>*)>;

  static double step_size() { return sizeof(T) == 8 ? 1e-4 : 1e-2; }

  static double run(const LossFn& loss_fn, const std::vector<TensorPtrT<T>>& checked) {
    for (const auto& t : checked) {
      t->set_trainable(true);
      t->zero_grad();
    }

    TapeT<T> tape;
    auto loss = loss_fn(&tape);
    backward(loss, tape);
    std::vector<std::vector<T>> analytic;
    for (const auto& t : checked) {
      analytic.push_back(t->has_grad() ? t->grad() : std::vector<T>(t->data().size(), T(0)));
      t->zero_grad();
    }

    const double h = step_size();
    double max_err = 0.0;
    for (std::size_t ti = 0; ti < checked.size(); ++ti) {
      std::vector<T>& data = checked[ti]->data();
      for (std::size_t i = 0; i < data.size(); ++i) {
        const T saved = data[i];
        data[i] = saved + T(h);
        const double lp = double(loss_fn(nullptr)->scalar());
        data[i] = saved - T(h);
        const double lm = double(loss_fn(nullptr)->scalar());
        data[i] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double a = double(analytic[ti][i]);
        const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
        max_err = std::max(max_err, err);
      }
    }
    return max_err;
  }
};

template <typename T>
void fill_uniform(TensorT<T>& t, Rng& rng, double lo, double hi) {
  for (T& v : t.data()) v = T(rng.uniform(lo, hi));
}

/// Scalar loss that weights every output element differently, so gradient
/// errors cannot cancel: loss = sum(out .* weights).
template <typename T>
TensorPtrT<T> weighted_sum(TapeT<T>* tape, const TensorPtrT<T>& out, const TensorPtrT<T>& weights) {
  return sum_all(tape, hadamard(tape, out, weights));
}

}  // namespace tseg::test
