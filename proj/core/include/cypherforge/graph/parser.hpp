#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cypherforge/graph/ast.hpp"

namespace cypherforge::graph {

enum class QueryErrorKind { Syntax, Unsupported, UnboundVariable };

class QueryError : public std::runtime_error {
public:
    QueryError(QueryErrorKind kind, std::string token, size_t offset, const std::string& message)
        : std::runtime_error(message), kind_(kind), token_(std::move(token)), offset_(offset) {}

    QueryErrorKind kind() const { return kind_; }
    const std::string& token() const { return token_; }
    size_t offset() const { return offset_; }

private:
    QueryErrorKind kind_;
    std::string token_;
    size_t offset_;
};

/// Parses one statement of the supported Cypher subset (see
/// docs/cypher_subset.ebnf). Unsupported openCypher constructs raise
/// QueryError{Unsupported} carrying the offending token and its offset;
/// unbound variable references raise QueryError{UnboundVariable}.
ast::Query parse_cypher(const std::string& text);

/// Splits a script on top-level semicolons (quote- and comment-aware),
/// dropping empty statements and // comment-only lines.
std::vector<std::string> split_statements(const std::string& script);

}  // namespace cypherforge::graph
