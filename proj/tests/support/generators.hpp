#pragma once

#include <random>
#include <string>

#include "cypherforge/graph/store.hpp"
#include "cypherforge/schema.hpp"

namespace cypherforge::testsupport {

using Rng = std::mt19937_64;

/// Random valid GraphSchema: unique labels/relationship names, patterns over
/// declared entities, occasional empty property sets and pattern-less
/// relationships.
schema::GraphSchema random_schema(Rng& rng);

/// Random store of up to `max_nodes` nodes: labels A/B/C, properties from a
/// small pool with mixed types and gaps, random typed edges.
graph::GraphStore random_store(Rng& rng, size_t max_nodes = 10);

/// Random read query text from the supported grammar over the generator's
/// label/property pools; always scope-valid.
std::string random_query(Rng& rng);

}  // namespace cypherforge::testsupport
