#pragma once

#include <fmt/format.h>

#include "cypherforge/graph/engine.hpp"
#include "generators.hpp"
#include "oracle.hpp"

namespace cypherforge::testsupport {

struct DifferentialOutcome {
    size_t executed = 0;
    size_t mismatches = 0;
    std::string first_mismatch;
};

/// Runs `count` random queries from the supported grammar over random stores
/// and compares the engine against the brute-force oracle exactly: rows,
/// columns, and ordering.
inline DifferentialOutcome run_differential(uint64_t seed, size_t count) {
    Rng rng(seed);
    DifferentialOutcome out;
    while (out.executed < count) {
        graph::GraphStore store = random_store(rng);
        for (int q = 0; q < 5 && out.executed < count; ++q) {
            std::string text = random_query(rng);
            graph::ast::Query query = graph::parse_cypher(text);
            ++out.executed;

            graph::ResultTable engine_result;
            graph::ResultTable oracle_result;
            bool engine_failed = false;
            bool oracle_failed = false;
            try {
                engine_result = graph::execute(store, query);
            } catch (const graph::ExecError&) {
                engine_failed = true;
            }
            try {
                oracle_result = oracle_execute(store, query);
            } catch (const graph::ExecError&) {
                oracle_failed = true;
            }
            bool agree = engine_failed == oracle_failed &&
                         (engine_failed || engine_result == oracle_result);
            if (!agree) {
                ++out.mismatches;
                if (out.first_mismatch.empty()) {
                    out.first_mismatch = fmt::format(
                        "query: {}\nengine: {}\noracle: {}", text,
                        engine_failed ? "<error>" : engine_result.to_json().dump(),
                        oracle_failed ? "<error>" : oracle_result.to_json().dump());
                }
            }
        }
    }
    return out;
}

}  // namespace cypherforge::testsupport
