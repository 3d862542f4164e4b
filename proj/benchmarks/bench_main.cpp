#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "copypaste/capture.hpp"
#include "copypaste/fragments.hpp"
#include "copypaste/metrics.hpp"
#include "copypaste/textseg.hpp"

namespace {

std::string random_text(std::size_t words, unsigned seed, std::size_t vocab = 200) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    out += "w" + std::to_string(pick(rng));
    out += (i % 17 == 16) ? ". " : " ";
  }
  return out;
}

// Answer that copies runs of the context with some noise between them.
std::string copied_answer(const std::string& context, std::size_t words, unsigned seed) {
  const copypaste::TokenSeq ctx = copypaste::tokenize(context);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::size_t> start(0, ctx.content().size() - 1);
  std::string out;
  std::size_t n = 0;
  while (n < words) {
    std::size_t s = start(rng);
    for (std::size_t t = 0; t < 8 && s + t < ctx.content().size() && n < words; ++t, ++n) {
      out += ctx.content()[s + t] + " ";
    }
    out += "novel ";
    ++n;
  }
  return out;
}

void BM_Tokenize(benchmark::State& state) {
  const std::string text = random_text(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(copypaste::tokenize(text));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(256)->Arg(2048)->Arg(16384);

void BM_DetectFragments(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::string context = random_text(n, 2);
  const copypaste::TokenSeq ctx = copypaste::tokenize(context);
  const copypaste::TokenSeq ans = copypaste::tokenize(copied_answer(context, n / 4, 3));
  for (auto _ : state) benchmark::DoNotOptimize(copypaste::detect_fragments(ctx, ans));
  state.SetComplexityN(static_cast<int64_t>(n));
}
BENCHMARK(BM_DetectFragments)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_CopyScore(benchmark::State& state) {
  const std::string context = random_text(2048, 4);
  const copypaste::TokenSeq ctx = copypaste::tokenize(context);
  const copypaste::TokenSeq ans = copypaste::tokenize(copied_answer(context, 300, 5));
  const copypaste::CopyScoreConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(copypaste::copy_score(copypaste::copy_metrics(copypaste::detect_fragments(ctx, ans)), cfg));
  }
}
BENCHMARK(BM_CopyScore);

void BM_CommonSubstrings(benchmark::State& state) {
  const std::string context = random_text(4096, 6);
  const copypaste::TokenSeq ctx = copypaste::tokenize(context);
  const copypaste::TokenSeq para = copypaste::tokenize(copied_answer(context, 400, 7));
  for (auto _ : state) benchmark::DoNotOptimize(copypaste::common_substrings(ctx, para, 3));
}
BENCHMARK(BM_CommonSubstrings);

}  // namespace

BENCHMARK_MAIN();
