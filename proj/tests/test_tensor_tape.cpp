#include <doctest.h>

#include "support/util.hpp"
#include "tseg/ops.hpp"
#include "tseg/tape.hpp"
#include "tseg/tensor.hpp"

using namespace tseg;

TEST_CASE("tensor shape and data invariants") {
  auto t = Tensor::create({2, 3, 4, 5});
  CHECK(t->numel() == 120);
  CHECK(int(t->data().size()) == 120);
  CHECK_FALSE(t->has_grad());
  CHECK(int(t->grad().size()) == 120);  // materialized on demand, zero-filled
  CHECK(t->has_grad());
  for (float g : t->grad()) CHECK(g == 0.0f);
}

TEST_CASE("tensor rejects non-positive extents") {
  CHECK_THROWS_AS(Tensor::create({2, 0, 3}), Error);
  CHECK_THROWS_AS(Tensor::create({-1}), Error);
  CHECK_THROWS_AS(Tensor::create({}), Error);
  try {
    Tensor::create({3, 0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::precondition);
  }
}

TEST_CASE("tensor from_data validates length") {
  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0f, 2.0f, 3.0f}), Error);
  auto t = Tensor::from_data({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f});
  CHECK(t->data()[3] == 4.0f);
}

TEST_CASE("scalar access requires a single element") {
  auto s = Tensor::from_data({1}, {2.5f});
  CHECK(s->scalar() == 2.5f);
  auto v = Tensor::create({2});
  CHECK_THROWS_AS(v->scalar(), Error);
}

TEST_CASE("backward requires a scalar loss on the tape") {
  Tape tape;
  auto x = Tensor::from_data({3}, {1.0f, 2.0f, 3.0f});
  x->set_trainable(true);
  auto vec_out = add(&tape, x, x);
  CHECK_THROWS_AS(backward(vec_out, tape), Error);

  auto off_tape = Tensor::from_data({1}, {1.0f});
  CHECK_THROWS_AS(backward(off_tape, tape), Error);
}

TEST_CASE("loss = sum(x) gives all-ones gradient") {
  Tape tape;
  auto x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  x->set_trainable(true);
  auto loss = sum_all(&tape, x);
  CHECK(loss->scalar() == 21.0f);
  backward(loss, tape);
  for (float g : x->grad()) CHECK(g == 1.0f);
  CHECK(tape.empty());  // cleared by backward
}

TEST_CASE("loss = sum(x*x) gives gradient 2x") {
  Tape tape;
  auto x = Tensor::from_data({4}, {1.5f, -2.0f, 0.0f, 3.0f});
  x->set_trainable(true);
  auto loss = sum_all(&tape, hadamard(&tape, x, x));
  backward(loss, tape);
  for (std::size_t i = 0; i < 4; ++i) CHECK(x->grad()[i] == doctest::Approx(2.0f * x->data()[i]));
}

TEST_CASE("trainable ancestors all receive gradients") {
  Tape tape;
  auto a = Tensor::from_data({2}, {1.0f, 2.0f});
  auto b = Tensor::from_data({2}, {3.0f, 4.0f});
  a->set_trainable(true);
  b->set_trainable(true);
  auto mid = add(&tape, a, b);
  auto loss = sum_all(&tape, hadamard(&tape, mid, mid));
  backward(loss, tape);
  CHECK(a->has_grad());
  CHECK(b->has_grad());
  CHECK(a->grad()[0] == doctest::Approx(8.0f));   // 2*(a+b)
  CHECK(b->grad()[1] == doctest::Approx(12.0f));
}

TEST_CASE("plain leaf inputs are skipped by backward") {
  Tape tape;
  auto x = Tensor::from_data({2}, {1.0f, 2.0f});  // not trainable, not produced
  auto loss = sum_all(&tape, sigmoid(&tape, x));
  backward(loss, tape);
  CHECK_FALSE(x->has_grad());
}

TEST_CASE("non-finite op output raises a numeric error") {
  Tape tape;
  auto big = Tensor::from_data({1}, {3e38f});
  CHECK_THROWS_AS(add<float>(nullptr, big, big), Error);
  try {
    add<float>(nullptr, big, big);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::numeric);
  }
}
