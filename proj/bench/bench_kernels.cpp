#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "labelassoc/encoder.hpp"
#include "labelassoc/kernels.hpp"

namespace {

using namespace labelassoc;

std::vector<float> random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  std::vector<float> m(rows * dim);
  for (auto& x : m) x = dist(rng);
  return m;
}

constexpr std::size_t kDim = 64;
constexpr std::size_t kQueries = 16;

void BM_top1_serial(benchmark::State& state) {
  const auto rows = random_matrix(state.range(0), kDim, 1);
  const auto queries = random_matrix(kQueries, kDim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::top1_rows(rows, queries, kDim));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_top1_parallel(benchmark::State& state) {
  const auto rows = random_matrix(state.range(0), kDim, 1);
  const auto queries = random_matrix(kQueries, kDim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::top1_rows(rows, queries, kDim));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_nearest_serial(benchmark::State& state) {
  const auto rows = random_matrix(state.range(0), kDim, 3);
  const auto queries = random_matrix(256, kDim, 4);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::nearest_rows(rows, queries, kDim));
}

void BM_nearest_parallel(benchmark::State& state) {
  const auto rows = random_matrix(state.range(0), kDim, 3);
  const auto queries = random_matrix(256, kDim, 4);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::nearest_rows(rows, queries, kDim));
}

std::vector<std::string> bench_texts(std::size_t n) {
  std::mt19937_64 rng(5);
  std::vector<std::string> texts(n);
  for (auto& t : texts) {
    for (int w = 0; w < 100; ++w) t += "w" + std::to_string(rng() % 5000) + ' ';
  }
  return texts;
}

const EncoderModel& bench_model() {
  static const EncoderModel model = [] {
    std::vector<std::string> tokens{std::string(Vocabulary::kUnkToken)};
    for (int i = 0; i < 5000; ++i) tokens.push_back("w" + std::to_string(i));
    return EncoderModel::initialize(Vocabulary::from_tokens(tokens), kDim, kDefaultMaxSeqLen, 9);
  }();
  return model;
}

void BM_encode_serial(benchmark::State& state) {
  const auto texts = bench_texts(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(encode_batch_serial(bench_model(), texts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_encode_parallel(benchmark::State& state) {
  const auto texts = bench_texts(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(encode_batch(bench_model(), texts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_top1_serial)->Arg(10000)->Arg(100000);
BENCHMARK(BM_top1_parallel)->Arg(10000)->Arg(100000);
BENCHMARK(BM_nearest_serial)->Arg(10000);
BENCHMARK(BM_nearest_parallel)->Arg(10000);
BENCHMARK(BM_encode_serial)->Arg(2000);
BENCHMARK(BM_encode_parallel)->Arg(2000);

BENCHMARK_MAIN();
