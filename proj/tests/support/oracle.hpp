#pragma once

#include "cypherforge/graph/engine.hpp"

namespace cypherforge::testsupport {

/// Brute-force reference evaluator for read queries: enumerates every
/// candidate binding tuple over the store (nodes and edges in id order,
/// nested in pattern position order) and filters, with its own expression
/// evaluator. Shares only the AST and the Value vocabulary with the engine.
graph::ResultTable oracle_execute(const graph::GraphStore& store,
                                  const graph::ast::Query& query);

}  // namespace cypherforge::testsupport
