#pragma once

#include "tseg/mask.hpp"
#include "tseg/tape.hpp"
#include "tseg/tensor.hpp"

namespace tseg {

// Differentiable tensor operations. Every op allocates a fresh output, checks its
// values for finiteness, and (when `tape` is non-null) records a backward closure.
// Input gradients are produced for tensors that are trainable or were themselves
// produced on the tape; plain leaf inputs (e.g. image frames) are skipped.
// All loops are sequential with a fixed order, so results are bit-reproducible.

/// Direct 2-d convolution over [N,Ci,H,W] with zero padding and kernel dilation.
/// Output height is floor((H + 2*padding - dilation*(kh-1) - 1) / stride) + 1.
template <typename T>
TensorPtrT<T> conv2d(TapeT<T>* tape, const TensorPtrT<T>& input, const TensorPtrT<T>& weight,
                     const TensorPtrT<T>& bias, int stride = 1, int dilation = 1, int padding = 0);

/// Logistic sigmoid, clamped to the open interval (0,1) so saturated values never
/// round to an exact endpoint in 32-bit storage.
template <typename T>
TensorPtrT<T> sigmoid(TapeT<T>* tape, const TensorPtrT<T>& x);

/// Hyperbolic tangent, clamped to the open interval (-1,1).
template <typename T>
TensorPtrT<T> tanh(TapeT<T>* tape, const TensorPtrT<T>& x);

template <typename T>
TensorPtrT<T> relu(TapeT<T>* tape, const TensorPtrT<T>& x);

template <typename T>
TensorPtrT<T> add(TapeT<T>* tape, const TensorPtrT<T>& a, const TensorPtrT<T>& b);

template <typename T>
TensorPtrT<T> hadamard(TapeT<T>* tape, const TensorPtrT<T>& a, const TensorPtrT<T>& b);

/// Multiplies a single-channel gate [N,1,H,W] into every channel of x [N,K,H,W].
template <typename T>
TensorPtrT<T> scale_broadcast(TapeT<T>* tape, const TensorPtrT<T>& gate, const TensorPtrT<T>& x);

/// Concatenates along the channel axis: a occupies channels [0,Ca), b occupies [Ca,Ca+Cb).
template <typename T>
TensorPtrT<T> concat_channels(TapeT<T>* tape, const TensorPtrT<T>& a, const TensorPtrT<T>& b);

/// Nearest-neighbour upsampling by an integer factor; backward sums over each block.
template <typename T>
TensorPtrT<T> upsample_nearest(TapeT<T>* tape, const TensorPtrT<T>& x, int factor);

/// Sum of all elements, as a scalar tensor.
template <typename T>
TensorPtrT<T> sum_all(TapeT<T>* tape, const TensorPtrT<T>& x);

/// Mean over non-ignored pixels of -log softmax(logits)[label].
/// logits are [N,K,H,W]; labels are [N,H,W] with values in [0,K) or ignore_index.
/// Returns 0 with zero gradient when every pixel is ignored.
template <typename T>
TensorPtrT<T> softmax_cross_entropy(TapeT<T>* tape, const TensorPtrT<T>& logits,
                                    const LabelMask& labels, int ignore_index = 255);

}  // namespace tseg
