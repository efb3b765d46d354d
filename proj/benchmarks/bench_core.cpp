#include <benchmark/benchmark.h>

#include <random>

#include "tas/filter.hpp"
#include "tas/metrics.hpp"
#include "tas/table_store.hpp"
#include "tas/web_env.hpp"

namespace {

using nlohmann::json;

tas::Schema bench_schema() {
  tas::Schema s;
  s.task_mode = tas::TaskMode::Wide;
  s.columns = {{"Name", tas::ColumnKind::Key, "", std::nullopt},
               {"City", tas::ColumnKind::Info, "", std::nullopt},
               {"Email", tas::ColumnKind::Info, "", std::nullopt},
               {"Phone", tas::ColumnKind::Info, "", std::nullopt}};
  return s;
}

tas::TableState bench_table(std::size_t rows) {
  tas::TableState t;
  t.table_id.value = "t1";
  t.schema = bench_schema();
  std::mt19937 rng(7);
  for (std::size_t i = 0; i < rows; ++i) {
    tas::Record r;
    r.record_id.value = "r" + std::to_string(i + 1);
    r.key["Name"] = "Entity " + std::to_string(i);
    r.cells["City"] = rng() % 3 == 0 ? tas::CellValue{tas::Pending{}} : tas::Filled{"City " + std::to_string(i % 17), std::nullopt, 1};
    r.cells["Email"] = rng() % 4 == 0 ? tas::CellValue{tas::NotApplicable{}} : tas::Filled{"e" + std::to_string(i) + "@x.example", std::nullopt, 1};
    r.cells["Phone"] = tas::Filled{std::to_string(1000 + i), std::nullopt, 1};
    r.dedup_key = tas::make_dedup_key(t.schema, r.key);
    t.records.push_back(std::move(r));
  }
  return t;
}

void BM_Normalize(benchmark::State& state) {
  const std::string value = "  “Long   Beach, California.”  ";
  for (auto _ : state) benchmark::DoNotOptimize(tas::normalize(value));
}
BENCHMARK(BM_Normalize);

void BM_FilterEval(benchmark::State& state) {
  const tas::TableState t = bench_table(static_cast<std::size_t>(state.range(0)));
  const auto q = tas::FilterQuery::parse(
      json{{"$or", {{{"City", {{"$exists", false}}}}, {{"$and", {{{"Email", {{"$ne", "NA"}}}}, {{"Phone", "1003"}}}}}}}},
      t.schema);
  for (auto _ : state) {
    std::size_t hits = 0;
    for (const auto& r : t.records) hits += q.matches(r) ? 1 : 0;
    benchmark::DoNotOptimize(hits);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FilterEval)->Arg(100)->Arg(10000);

void BM_Search(benchmark::State& state) {
  const tas::Corpus corpus = tas::load_corpus(std::string(TAS_FIXTURE_DIR) + "/merchants/corpus.json");
  for (auto _ : state) benchmark::DoNotOptimize(corpus.search("local US-based lighting merchant Email", 10));
}
BENCHMARK(BM_Search);

void BM_ScoreTable(benchmark::State& state) {
  const tas::TableState pred = bench_table(static_cast<std::size_t>(state.range(0)));
  const tas::GroundTruthTable gt = tas::ground_truth_from_json(tas::table_to_ground_truth_json(bench_table(static_cast<std::size_t>(state.range(0)))));
  for (auto _ : state) benchmark::DoNotOptimize(tas::score_table(pred, gt));
}
BENCHMARK(BM_ScoreTable)->Arg(20)->Arg(1000);

void BM_SnapshotRoundTrip(benchmark::State& state) {
  const tas::TableState t = bench_table(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(tas::decode_snapshot(tas::encode_snapshot(t)));
}
BENCHMARK(BM_SnapshotRoundTrip)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
