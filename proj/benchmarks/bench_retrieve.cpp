#include <benchmark/benchmark.h>

#include <vector>

#include "sefun/retrieve.hpp"
#include "sefun/rng.hpp"
#include "sefun/synthetic.hpp"

using namespace sefun;

namespace {

Corpus corpus_of(std::size_t n) { return gen_synthetic_corpus(default_template_spec(), n, {}, 17); }

std::vector<std::vector<std::string>> probes_of(std::size_t n) {
  Corpus c = gen_synthetic_corpus(default_template_spec(), n, {}, 18);
  std::vector<std::vector<std::string>> out;
  out.reserve(n);
  for (const ConversationPair& p : c.pairs) out.push_back(p.query_segments[0].tokens);
  return out;
}

}  // namespace

static void BM_Jaccard(benchmark::State& state) {
  auto probes = probes_of(2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(jaccard(probes[0], probes[1]));
  }
}
BENCHMARK(BM_Jaccard);

static void BM_BuildIndex(benchmark::State& state) {
  Corpus corpus = corpus_of(std::size_t(state.range(0)));
  for (auto _ : state) {
    RetrievalIndex index = build_index(corpus);
    benchmark::DoNotOptimize(index.postings.size());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildIndex)->RangeMultiplier(4)->Range(512, 8192)->Complexity();

static void BM_RetrieveTopK(benchmark::State& state) {
  RetrievalIndex index = build_index(corpus_of(std::size_t(state.range(0))));
  auto probes = probes_of(64);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(retrieve_topk(index, probes[i++ % probes.size()], 20));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RetrieveTopK)->RangeMultiplier(4)->Range(512, 8192)->Complexity();

static void BM_BruteForceTopK(benchmark::State& state) {
  RetrievalIndex index = build_index(corpus_of(std::size_t(state.range(0))));
  auto probes = probes_of(64);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(brute_force_topk(index, probes[i++ % probes.size()], 20));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BruteForceTopK)->RangeMultiplier(4)->Range(512, 8192)->Complexity();

static void BM_RerankScored(benchmark::State& state) {
  Rng rng(7);
  std::vector<RankedCandidate> base(std::size_t(state.range(0)));
  for (std::size_t i = 0; i < base.size(); ++i) {
    base[i].pair_id = i;
    base[i].base_score = 1.0 - double(i) * 1e-3;
    base[i].penalty = rng.uniform();
  }
  const std::size_t k = base.size();
  for (auto _ : state) {
    std::vector<RankedCandidate> c = base;
    benchmark::DoNotOptimize(rerank_scored(std::move(c), 1.0, k));
  }
}
BENCHMARK(BM_RerankScored)->Arg(20)->Arg(100);

BENCHMARK_MAIN();
