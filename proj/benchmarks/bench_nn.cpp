#include <benchmark/benchmark.h>

#include <vector>

#include "sefun/nn.hpp"
#include "sefun/rng.hpp"

using namespace sefun;
using nn::Vec;

namespace {

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

std::vector<Vec> random_seq(std::size_t len, std::size_t dim, Rng& rng) {
  std::vector<Vec> xs(len);
  for (Vec& x : xs) x = random_vec(dim, rng);
  return xs;
}

}  // namespace

static void BM_MatVec(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  Rng rng(5);
  Tensor W(std::vector<std::size_t>{n, n});
  nn::init_uniform(W, rng);
  Vec x = random_vec(n, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::matvec(W, x));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatVec)->RangeMultiplier(4)->Range(64, 1024)->Complexity();

static void BM_GruCellForward(benchmark::State& state) {
  const auto h = std::size_t(state.range(0));
  Rng rng(5);
  nn::GruCell cell;
  cell.init("g", h, h, rng, -0.1, 0.1);
  Vec x = random_vec(h, rng), hprev = random_vec(h, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cell.forward(x, hprev));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GruCellForward)->RangeMultiplier(4)->Range(64, 1024)->Complexity();

static void BM_BiGruEncode(benchmark::State& state) {
  const auto len = std::size_t(state.range(0));
  Rng rng(5);
  nn::BiGru gru;
  gru.init("g", 64, 64, rng, -0.1, 0.1);
  auto xs = random_seq(len, 64, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gru.encode(xs, nullptr));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BiGruEncode)->RangeMultiplier(2)->Range(4, 64)->Complexity();

static void BM_AttentionForward(benchmark::State& state) {
  const auto len = std::size_t(state.range(0));
  Rng rng(5);
  nn::Attention att;
  att.init("a", 64, 128, 64, rng, -0.1, 0.1);
  Vec s = random_vec(64, rng);
  auto hs = random_seq(len, 128, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(att.forward(s, hs, nullptr));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AttentionForward)->RangeMultiplier(2)->Range(4, 64)->Complexity();

static void BM_SoftmaxXent(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  Rng rng(5);
  Vec logits = random_vec(n, rng), dlogits;
  for (auto _ : state) {
    benchmark::DoNotOptimize(nn::softmax_xent(logits, n / 2, &dlogits));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SoftmaxXent)->RangeMultiplier(8)->Range(1024, 65536)->Complexity();

static void BM_AdamStep(benchmark::State& state) {
  const auto n = std::size_t(state.range(0));
  Rng rng(5);
  nn::Param p;
  p.init("p", {n});
  nn::init_uniform(p.value, rng);
  nn::init_uniform(p.grad, rng);
  std::vector<nn::Param*> params{&p};
  nn::AdamState adam;
  for (auto _ : state) {
    nn::adam_step(params, adam, 1e-4);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AdamStep)->RangeMultiplier(8)->Range(4096, 262144)->Complexity();

BENCHMARK_MAIN();
