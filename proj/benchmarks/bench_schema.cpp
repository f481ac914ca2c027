#include <benchmark/benchmark.h>

#include <fmt/format.h>

#include "cypherforge/schema.hpp"

using namespace cypherforge::schema;

namespace {

std::string big_schema_text(size_t nodes) {
    std::string text = "Node properties:\n";
    for (size_t i = 0; i < nodes; ++i) {
        text += fmt::format("Entity{} {{name: STRING, rank: INTEGER, seen: DATE}}\n", i);
    }
    text += "\nRelationship properties:\nLINKS {weight: FLOAT}\n\nThe relationships:\n";
    for (size_t i = 0; i + 1 < nodes; ++i) {
        text += fmt::format("(:Entity{})-[:LINKS]->(:Entity{})\n", i, i + 1);
    }
    return text;
}

void BM_ParseSchema(benchmark::State& state) {
    std::string text = big_schema_text(static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_schema(text));
    }
}
BENCHMARK(BM_ParseSchema)->Arg(4)->Arg(32)->Arg(128);

void BM_PrintSchema(benchmark::State& state) {
    GraphSchema schema = parse_schema(big_schema_text(static_cast<size_t>(state.range(0))));
    for (auto _ : state) {
        benchmark::DoNotOptimize(print_schema(schema));
    }
}
BENCHMARK(BM_PrintSchema)->Arg(4)->Arg(32)->Arg(128);

void BM_ValidateSchema(benchmark::State& state) {
    GraphSchema schema = parse_schema(big_schema_text(64));
    for (auto _ : state) {
        benchmark::DoNotOptimize(validate_schema(schema));
    }
}
BENCHMARK(BM_ValidateSchema);

}  // namespace
