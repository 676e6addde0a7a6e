// Parallel kernels against their serial references on a corpus built by
// repeating the golden sentences.

#include <filesystem>
#include <map>

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "finespan/aggregate.hpp"
#include "finespan/corpus.hpp"
#include "finespan/pipeline.hpp"
#include "finespan/weaklabel.hpp"

using namespace finespan;

namespace {

struct Workload {
  corpus::Corpus corpus;
  weaklabel::FunctionSet functions;
  std::vector<aggregate::VoteMatrix> matrices;
  aggregate::AggregationModel model;
};

const Workload& workload(std::size_t copies) {
  static std::map<std::size_t, Workload> cache;
  auto it = cache.find(copies);
  if (it != cache.end()) return it->second;
  const std::filesystem::path data = FINESPAN_SOURCE_DIR "/data";
  Workload w;
  const auto golden = corpus::ingest(data / "golden" / "corpus.jsonl", corpus::Format::jsonl);
  for (std::size_t c = 0; c < copies; ++c)
    for (const auto& s : golden.sentences)
      w.corpus.sentences.push_back(corpus::make_sentence(s.id + "-" + std::to_string(c), s.text));
  w.functions = load_function_set(data / "rules" / "rules-v1.json", data / "gazetteers");
  const auto scheme = load_scheme(std::nullopt);
  const auto spans = weaklabel::annotate(w.corpus, w.functions);
  w.matrices = aggregate::build_vote_matrices(w.corpus, spans, w.functions.names(), scheme);
  w.model = aggregate::initialize_model(w.matrices, scheme, w.functions.names());
  return cache.emplace(copies, std::move(w)).first->second;
}

void BM_annotate_serial(benchmark::State& state) {
  const auto& w = workload(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(weaklabel::annotate_serial(w.corpus, w.functions));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.corpus.size()));
}

void BM_annotate_parallel(benchmark::State& state) {
  const auto& w = workload(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(weaklabel::annotate(w.corpus, w.functions));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.corpus.size()));
}

void BM_estep_serial(benchmark::State& state) {
  const auto& w = workload(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(aggregate::expected_counts_serial(w.model, w.matrices));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.matrices.size()));
}

void BM_estep_parallel(benchmark::State& state) {
  const auto& w = workload(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(aggregate::expected_counts(w.model, w.matrices));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.matrices.size()));
}

}  // namespace

BENCHMARK(BM_annotate_serial)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_annotate_parallel)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_estep_serial)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_estep_parallel)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond)->UseRealTime();

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
