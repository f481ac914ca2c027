#pragma once

#include <string_view>

namespace cypherforge::graph {

/// The published EBNF for the supported subset; a golden test keeps this
/// constant identical to docs/cypher_subset.ebnf.
std::string_view supported_grammar();

}  // namespace cypherforge::graph
