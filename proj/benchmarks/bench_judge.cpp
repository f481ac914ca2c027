#include <benchmark/benchmark.h>

#include <fmt/format.h>

#include "cypherforge/judge.hpp"

using namespace cypherforge;

namespace {

// Worst-ish case: every record shares most values, so the matcher has to
// hunt through the bipartite graph.
void BM_StructuralMatch(benchmark::State& state) {
    size_t n = static_cast<size_t>(state.range(0));
    Json records = Json::array();
    for (size_t i = 0; i < n; ++i) {
        records.push_back({{"name", fmt::format("user{}", i % 4)},
                           {"id", static_cast<int64_t>(i)},
                           {"country", "USA"}});
    }
    judge::GroundTruth gt = judge::GroundTruth::from_value(records);

    graph::ResultTable result;
    result.columns = {"name", "id"};
    for (size_t i = n; i > 0; --i) {
        result.rows.push_back({graph::Value::text(fmt::format("user{}", (i - 1) % 4)),
                               graph::Value::integer(static_cast<int64_t>(i - 1))});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(judge::structural_match("q", gt, result));
    }
}
BENCHMARK(BM_StructuralMatch)->Arg(5)->Arg(20)->Arg(50);

void BM_NormalizeValue(benchmark::State& state) {
    Json value = Json::parse(R"({
        "name": "  Mixed CASE value ",
        "when": "2024-06-01T00:00:00",
        "scores": [1, 2.5, "Three", "2023-01-02T10:30:00"],
        "nested": {"b": "X", "a": 45000}
    })");
    for (auto _ : state) {
        benchmark::DoNotOptimize(judge::normalize_value(value));
    }
}
BENCHMARK(BM_NormalizeValue);

}  // namespace
