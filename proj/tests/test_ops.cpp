#include <doctest.h>

#include <cmath>

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"
#include "support/util.hpp"
#include "tseg/ops.hpp"

using namespace tseg;
using tseg::test::fill_uniform;

TEST_CASE("conv2d 1x1 identity kernel reproduces the input") {
  Rng rng(11);
  auto x = Tensor::create({1, 1, 5, 7});
  fill_uniform(*x, rng, -2.0, 2.0);
  auto w = Tensor::from_data({1, 1, 1, 1}, {1.0f});
  auto b = Tensor::create({1});
  auto y = conv2d<float>(nullptr, x, w, b, 1, 1, 0);
  CHECK(tseg::test::bitwise_equal(*y, *x));
}

TEST_CASE("conv2d all-ones 3x3 on constant input sums nine") {
  auto x = Tensor::full({1, 1, 6, 6}, 1.0f);
  auto w = Tensor::full({1, 1, 3, 3}, 1.0f);
  auto b = Tensor::create({1});
  auto y = conv2d<float>(nullptr, x, w, b, 1, 1, 1);
  CHECK(y->shape() == Shape{1, 1, 6, 6});
  // interior = 9, edge = 6, corner = 4 under zero padding
  CHECK(y->data()[std::size_t(2 * 6 + 3)] == 9.0f);
  CHECK(y->data()[std::size_t(0 * 6 + 3)] == 6.0f);
  CHECK(y->data()[0] == 4.0f);
}

TEST_CASE("conv2d matches the direct six-loop oracle with dilation") {
  Rng rng(23);
  auto x = Tensor::create({1, 2, 7, 7});
  auto w = Tensor::create({3, 2, 3, 3});
  auto b = Tensor::create({3});
  fill_uniform(*x, rng, -1.0, 1.0);
  fill_uniform(*w, rng, -1.0, 1.0);
  fill_uniform(*b, rng, -0.5, 0.5);
  auto y = conv2d<float>(nullptr, x, w, b, 1, 2, 2);
  Shape oracle_shape;
  const auto expect = tseg::test::naive_conv2d(*x, *w, *b, 1, 2, 2, &oracle_shape);
  REQUIRE(y->shape() == oracle_shape);
  for (std::size_t i = 0; i < expect.size(); ++i) {
    CHECK(double(y->data()[i]) == doctest::Approx(expect[i]).epsilon(1e-5));
  }
}

TEST_CASE("conv2d output shape formula over a parameter grid") {
  Rng rng(5);
  auto x = Tensor::create({1, 1, 13, 11});
  fill_uniform(*x, rng, -1.0, 1.0);
  for (int k : {1, 2, 3, 5}) {
    for (int stride : {1, 2, 3}) {
      for (int dilation : {1, 2, 3}) {
        for (int padding : {0, 1, 2, 3}) {
          auto w = Tensor::create({2, 1, k, k});
          fill_uniform(*w, rng, -1.0, 1.0);
          auto b = Tensor::create({2});
          const int eh = 13 + 2 * padding - dilation * (k - 1) - 1;
          const int ew = 11 + 2 * padding - dilation * (k - 1) - 1;
          if (eh < 0 || ew < 0) {
            CHECK_THROWS_AS(conv2d<float>(nullptr, x, w, b, stride, dilation, padding), Error);
            continue;
          }
          auto y = conv2d<float>(nullptr, x, w, b, stride, dilation, padding);
          CHECK(y->dim(2) == eh / stride + 1);
          CHECK(y->dim(3) == ew / stride + 1);
        }
      }
    }
  }
}

TEST_CASE("conv2d validates channels, bias and parameters") {
  auto x = Tensor::create({1, 3, 8, 8});
  auto w = Tensor::create({4, 2, 3, 3});  // expects 2 input channels, x has 3
  auto b = Tensor::create({4});
  CHECK_THROWS_AS(conv2d<float>(nullptr, x, w, b), Error);
  auto w_ok = Tensor::create({4, 3, 3, 3});
  auto b_bad = Tensor::create({3});
  CHECK_THROWS_AS(conv2d<float>(nullptr, x, w_ok, b_bad), Error);
  CHECK_THROWS_AS(conv2d<float>(nullptr, x, w_ok, b, 0, 1, 0), Error);
  CHECK_THROWS_AS(conv2d<float>(nullptr, x, w_ok, b, 1, 0, 0), Error);
  CHECK_THROWS_AS(conv2d<float>(nullptr, x, w_ok, b, 1, 1, -1), Error);
}

TEST_CASE("sigmoid(0)=0.5 and tanh(0)=0 everywhere") {
  auto x = Tensor::create({2, 3});
  auto s = sigmoid<float>(nullptr, x);
  auto t = tanh<float>(nullptr, x);
  for (float v : s->data()) CHECK(v == 0.5f);
  for (float v : t->data()) CHECK(v == 0.0f);
}

TEST_CASE("sigmoid and tanh stay strictly inside their open intervals") {
  auto x = Tensor::from_data({4}, {-1e4f, -50.0f, 50.0f, 1e4f});
  auto s = sigmoid<float>(nullptr, x);
  auto t = tanh<float>(nullptr, x);
  for (float v : s->data()) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }
  for (float v : t->data()) {
    CHECK(v > -1.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("add and hadamard reject shape mismatches") {
  auto a = Tensor::create({2, 3});
  auto b = Tensor::create({3, 2});
  CHECK_THROWS_AS(add<float>(nullptr, a, b), Error);
  CHECK_THROWS_AS(hadamard<float>(nullptr, a, b), Error);
}

TEST_CASE("scale_broadcast identity and zero gates") {
  Rng rng(3);
  auto x = Tensor::create({2, 4, 3, 3});
  fill_uniform(*x, rng, -2.0, 2.0);
  auto ones = Tensor::full({2, 1, 3, 3}, 1.0f);
  auto zeros = Tensor::create({2, 1, 3, 3});
  CHECK(tseg::test::bitwise_equal(*scale_broadcast<float>(nullptr, ones, x), *x));
  auto zeroed = scale_broadcast<float>(nullptr, zeros, x);
  for (float v : zeroed->data()) CHECK(v == 0.0f);

  auto bad_gate = Tensor::create({2, 2, 3, 3});
  CHECK_THROWS_AS(scale_broadcast<float>(nullptr, bad_gate, x), Error);
  auto bad_spatial = Tensor::create({2, 1, 2, 3});
  CHECK_THROWS_AS(scale_broadcast<float>(nullptr, bad_spatial, x), Error);
}

TEST_CASE("concat_channels layout and gradient split") {
  Rng rng(7);
  auto a = Tensor::create({1, 2, 2, 2});
  auto b = Tensor::create({1, 3, 2, 2});
  fill_uniform(*a, rng, -1.0, 1.0);
  fill_uniform(*b, rng, -1.0, 1.0);
  auto z = concat_channels<float>(nullptr, a, b);
  REQUIRE(z->shape() == Shape{1, 5, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) CHECK(z->data()[i] == a->data()[i]);
  for (std::size_t i = 0; i < 12; ++i) CHECK(z->data()[8 + i] == b->data()[i]);

  a->set_trainable(true);
  b->set_trainable(true);
  Tape tape;
  auto loss = sum_all(&tape, concat_channels(&tape, a, b));
  backward(loss, tape);
  for (float g : a->grad()) CHECK(g == 1.0f);
  for (float g : b->grad()) CHECK(g == 1.0f);

  auto mism = Tensor::create({1, 2, 3, 2});
  CHECK_THROWS_AS(concat_channels<float>(nullptr, a, mism), Error);
  // A zero-channel operand cannot even be constructed.
  CHECK_THROWS_AS(Tensor::create({1, 0, 2, 2}), Error);
}

TEST_CASE("upsample_nearest block replication and identity") {
  auto x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  CHECK(tseg::test::bitwise_equal(*upsample_nearest<float>(nullptr, x, 1), *x));
  auto y = upsample_nearest<float>(nullptr, x, 2);
  REQUIRE(y->shape() == Shape{1, 1, 4, 4});
  const std::vector<float> expect = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  CHECK(y->data() == expect);
}

TEST_CASE("upsample backward sums each block") {
  // Mean loss over the upsampled map: every source cell receives
  // factor^2 / (fH*fW) = 1 / (H*W).
  auto x = Tensor::from_data({1, 1, 2, 2}, {1, 2, 3, 4});
  x->set_trainable(true);
  Tape tape;
  auto y = upsample_nearest(&tape, x, 3);
  auto inv = Tensor::full(y->shape(), 1.0f / float(y->numel()));
  auto loss = sum_all(&tape, hadamard(&tape, y, inv));
  backward(loss, tape);
  for (float g : x->grad()) CHECK(g == doctest::Approx(1.0f / 4.0f));
}

TEST_CASE("softmax cross entropy on uniform logits is log K") {
  auto logits = Tensor::create({1, 6, 3, 3});
  LabelMask labels(Shape{1, 3, 3}, 2);
  auto loss = softmax_cross_entropy<float>(nullptr, logits, labels, 255);
  CHECK(double(loss->scalar()) == doctest::Approx(std::log(6.0)).epsilon(1e-6));
}

TEST_CASE("softmax cross entropy saturates when the true logit dominates") {
  auto logits = Tensor::create({1, 4, 2, 2});
  LabelMask labels(Shape{1, 2, 2}, 1);
  for (int i = 0; i < 4; ++i) logits->data()[std::size_t(1 * 4 + i)] = 50.0f;
  auto loss = softmax_cross_entropy<float>(nullptr, logits, labels, 255);
  CHECK(loss->scalar() < 1e-6f);
}

TEST_CASE("softmax cross entropy label handling") {
  auto logits = Tensor::create({1, 3, 2, 2});
  LabelMask bad(Shape{1, 2, 2}, 7);
  CHECK_THROWS_AS(softmax_cross_entropy<float>(nullptr, logits, bad, 255), Error);

  LabelMask all_ignored(Shape{1, 2, 2}, 255);
  logits->set_trainable(true);
  Tape tape;
  auto loss = softmax_cross_entropy(&tape, logits, all_ignored, 255);
  CHECK(loss->scalar() == 0.0f);
  backward(loss, tape);
  if (logits->has_grad()) {
    for (float g : logits->grad()) CHECK(g == 0.0f);
  }

  LabelMask wrong_shape(Shape{1, 3, 2}, 0);
  CHECK_THROWS_AS(softmax_cross_entropy<float>(nullptr, logits, wrong_shape, 255), Error);
}

TEST_CASE("ops are bit-deterministic across repeated evaluation") {
  Rng rng(99);
  auto x = Tensor::create({2, 3, 6, 6});
  auto w = Tensor::create({4, 3, 3, 3});
  auto b = Tensor::create({4});
  fill_uniform(*x, rng, -1.0, 1.0);
  fill_uniform(*w, rng, -1.0, 1.0);
  fill_uniform(*b, rng, -1.0, 1.0);
  auto y1 = conv2d<float>(nullptr, x, w, b, 2, 2, 3);
  auto y2 = conv2d<float>(nullptr, x, w, b, 2, 2, 3);
  CHECK(tseg::test::bitwise_equal(*y1, *y2));
  auto s1 = sigmoid<float>(nullptr, y1);
  auto s2 = sigmoid<float>(nullptr, y2);
  CHECK(tseg::test::bitwise_equal(*s1, *s2));
}
