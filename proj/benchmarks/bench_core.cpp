#include "decompeval/diagnostics.hpp"
#include "decompeval/functionality.hpp"
#include "decompeval/manifest.hpp"
#include "decompeval/util.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

using namespace decompeval;

namespace {

std::string diagnostics_corpus() {
  std::string all;
  const auto dir = std::filesystem::path(DECOMPEVAL_SOURCE_DIR) / "tests/fixtures/diagnostics";
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".stderr") all += read_text_file(e.path());
  }
  return all;
}

void BM_ParseDiagnostics(benchmark::State& state) {
  const auto text = diagnostics_corpus();
  for (auto _ : state) benchmark::DoNotOptimize(parse_diagnostics(text, Phase::Compile, Compiler::GCC));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseDiagnostics);

void BM_SeqSimilarity(benchmark::State& state) {
  std::mt19937 rng(1);
  std::uniform_int_distribution<int> sym(0, 15);
  std::vector<int> a(static_cast<std::size_t>(state.range(0))), b(a.size());
  for (auto& x : a) x = sym(rng);
  for (auto& x : b) x = sym(rng);
  for (auto _ : state) benchmark::DoNotOptimize(seq_similarity(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SeqSimilarity)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNSquared);

void BM_ExpandMatrix(benchmark::State& state) {
  std::vector<DimensionSourceFile> files;
  for (auto d : kAllDimensions) files.push_back({d, std::string(slug(d)) + ".c", {}, {}});
  const auto axes = BuildAxes::defaults();
  for (auto _ : state) benchmark::DoNotOptimize(expand_matrix(files, axes));
}
BENCHMARK(BM_ExpandMatrix);

void BM_ClassifyProgram(benchmark::State& state) {
  std::vector<Observation> orig, rec;
  for (int i = 0; i < 200; ++i) {
    orig.push_back({"CF-L1-01", std::to_string(i), i});
    rec.push_back({"CF-L1-01", std::to_string(i % 7 == 0 ? -i : i), i});
  }
  for (auto _ : state) benchmark::DoNotOptimize(classify_program(orig, rec, false));
}
BENCHMARK(BM_ClassifyProgram);

}  // namespace

BENCHMARK_MAIN();
