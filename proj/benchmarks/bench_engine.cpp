#include <benchmark/benchmark.h>

#include <random>

#include <fmt/format.h>

#include "cypherforge/graph/engine.hpp"

using namespace cypherforge::graph;

namespace {

GraphStore build_store(size_t people, size_t follows) {
    GraphStore store = fresh_store();
    std::mt19937_64 rng(42);
    std::vector<EntityId> ids;
    for (size_t i = 0; i < people; ++i) {
        PropertyMap props;
        props["name"] = Value::text(fmt::format("person{}", i));
        props["age"] = Value::integer(static_cast<int64_t>(20 + rng() % 50));
        props["city"] = Value::text(fmt::format("city{}", rng() % 10));
        ids.push_back(store.create_node({"Person"}, std::move(props)));
    }
    for (size_t i = 0; i < follows; ++i) {
        PropertyMap props;
        props["since"] = Value::integer(static_cast<int64_t>(2000 + rng() % 24));
        store.create_edge("FOLLOWS", ids[rng() % ids.size()], ids[rng() % ids.size()],
                          std::move(props));
    }
    return store;
}

void BM_ParseCypher(benchmark::State& state) {
    const std::string query =
        "MATCH (a:Person)-[f:FOLLOWS]->(b:Person) WHERE a.age > 30 AND b.city = 'city3' "
        "RETURN a.name AS follower, b.name AS followed, f.since AS since "
        "ORDER BY since DESC LIMIT 10";
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_cypher(query));
    }
}
BENCHMARK(BM_ParseCypher);

void BM_ExecuteFilter(benchmark::State& state) {
    GraphStore store = build_store(static_cast<size_t>(state.range(0)), 0);
    ast::Query query = parse_cypher("MATCH (p:Person) WHERE p.age > 40 RETURN p.name");
    for (auto _ : state) {
        benchmark::DoNotOptimize(execute(store, query));
    }
}
BENCHMARK(BM_ExecuteFilter)->Arg(10)->Arg(100)->Arg(1000);

void BM_ExecuteJoinAggregate(benchmark::State& state) {
    size_t n = static_cast<size_t>(state.range(0));
    GraphStore store = build_store(n, n * 3);
    ast::Query query = parse_cypher(
        "MATCH (a:Person)-[:FOLLOWS]->(b:Person) RETURN b.city AS city, count(*) AS n "
        "ORDER BY n DESC");
    for (auto _ : state) {
        benchmark::DoNotOptimize(execute(store, query));
    }
}
BENCHMARK(BM_ExecuteJoinAggregate)->Arg(10)->Arg(50)->Arg(200);

void BM_VariableLength(benchmark::State& state) {
    GraphStore store = build_store(30, 60);
    ast::Query query =
        parse_cypher("MATCH (a:Person)-[:FOLLOWS*1..3]->(b:Person) RETURN count(*) AS n");
    for (auto _ : state) {
        benchmark::DoNotOptimize(execute(store, query));
    }
}
BENCHMARK(BM_VariableLength);

void BM_ApplyPopulation(benchmark::State& state) {
    std::vector<std::string> statements;
    for (int i = 0; i < 10; ++i) {
        statements.push_back(fmt::format("CREATE (p:Person {{name: 'p{}', age: {}}})", i, i));
    }
    for (int i = 0; i + 1 < 10; ++i) {
        statements.push_back(fmt::format(
            "MATCH (a:Person {{name: 'p{}'}}) MATCH (b:Person {{name: 'p{}'}}) "
            "CREATE (a)-[:FOLLOWS]->(b)",
            i, i + 1));
    }
    for (auto _ : state) {
        GraphStore store = fresh_store();
        benchmark::DoNotOptimize(apply_text(store, statements));
    }
}
BENCHMARK(BM_ApplyPopulation);

}  // namespace
