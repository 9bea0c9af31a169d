#include <benchmark/benchmark.h>

#include "tseg/eval.hpp"
#include "tseg/ops.hpp"
#include "tseg/rng.hpp"
#include "tseg/synthscene.hpp"
#include "tseg/tape.hpp"
#include "tseg/training.hpp"

using namespace tseg;

namespace {

void fill(Tensor& t, Rng& rng, float lo, float hi) {
  for (float& v : t.data()) v = rng.uniform(lo, hi);
}

void BM_Conv2dForward(benchmark::State& state) {
  const int dilation = int(state.range(0));
  Rng rng(1);
  auto x = Tensor::create({1, 16, 16, 16});
  auto w = Tensor::create({16, 16, 3, 3});
  auto b = Tensor::create({16});
  fill(*x, rng, -1.0f, 1.0f);
  fill(*w, rng, -0.3f, 0.3f);
  for (auto _ : state) {
    auto y = conv2d<float>(nullptr, x, w, b, 1, dilation, dilation);
    benchmark::DoNotOptimize(y->data().data());
  }
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(2)->Arg(4);

void BM_Conv2dTrainStep(benchmark::State& state) {
  Rng rng(2);
  auto x = Tensor::create({1, 16, 16, 16});
  auto w = Tensor::create({16, 16, 3, 3});
  auto b = Tensor::create({16});
  auto wt = Tensor::create({1, 16, 16, 16});
  fill(*x, rng, -1.0f, 1.0f);
  fill(*w, rng, -0.3f, 0.3f);
  fill(*wt, rng, -1.0f, 1.0f);
  w->set_trainable(true);
  b->set_trainable(true);
  for (auto _ : state) {
    Tape tape;
    auto loss = sum_all(&tape, hadamard(&tape, conv2d(&tape, x, w, b, 1, 1, 1), wt));
    backward(loss, tape);
    benchmark::DoNotOptimize(w->grad().data());
    w->zero_grad();
    b->zero_grad();
  }
}
BENCHMARK(BM_Conv2dTrainStep);

void BM_ConvLstmStep(benchmark::State& state) {
  ModelConfig cfg;
  auto model = SegModel::create(cfg, 3);
  Rng rng(4);
  auto f = Tensor::create({1, cfg.feat_channels, 16, 16});
  fill(*f, rng, -1.0f, 1.0f);
  MemoryState s = model.reset_state(1, 64, 64);
  for (auto _ : state) {
    s = model.memory.step(nullptr, f, s);
    benchmark::DoNotOptimize(s.h->data().data());
  }
}
BENCHMARK(BM_ConvLstmStep);

void BM_ModelStepInference(benchmark::State& state) {
  auto model = SegModel::create(ModelConfig{}, 5);
  Rng rng(6);
  auto frame = Tensor::create({1, 3, 64, 64});
  fill(*frame, rng, 0.0f, 1.0f);
  MemoryState s = model.reset_state(1, 64, 64);
  for (auto _ : state) {
    auto [pred, next] = model.step(nullptr, frame, s);
    s = next;
    benchmark::DoNotOptimize(pred.logits_full->data().data());
  }
}
BENCHMARK(BM_ModelStepInference);

void BM_GenerateSequence(benchmark::State& state) {
  SceneSpec spec;
  spec.seed = 7;
  int index = 0;
  for (auto _ : state) {
    LabeledSequence seq = generate_sequence(spec, index++);
    benchmark::DoNotOptimize(seq.frames.back()->data().data());
  }
}
BENCHMARK(BM_GenerateSequence);

void BM_SoftmaxCrossEntropy(benchmark::State& state) {
  Rng rng(8);
  auto logits = Tensor::create({4, 6, 64, 64});
  fill(*logits, rng, -2.0f, 2.0f);
  LabelMask labels(Shape{4, 64, 64});
  for (std::size_t i = 0; i < labels.data.size(); ++i) labels.data[i] = std::uint8_t(i % 6);
  for (auto _ : state) {
    auto loss = softmax_cross_entropy<float>(nullptr, logits, labels, 255);
    benchmark::DoNotOptimize(loss->scalar());
  }
}
BENCHMARK(BM_SoftmaxCrossEntropy);

}  // namespace

BENCHMARK_MAIN();
