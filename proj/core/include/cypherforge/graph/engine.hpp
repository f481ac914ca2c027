#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cypherforge/graph/parser.hpp"
#include "cypherforge/graph/store.hpp"

namespace cypherforge::graph {

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;

    bool operator==(const ResultTable& other) const;

    Json to_json() const;
    static ResultTable from_json(const Json& j);
};

/// Raised by apply() with the failing statement index, and by execute() for
/// resource-limit or internal failures. Expression-level type errors do not
/// raise; they surface as Null per three-valued logic.
class ExecError : public std::runtime_error {
public:
    ExecError(size_t statement_index, const std::string& cause)
        : std::runtime_error(cause), statement_index_(statement_index), cause_(cause) {}

    explicit ExecError(const std::string& cause) : ExecError(0, cause) {}

    size_t statement_index() const { return statement_index_; }
    const std::string& cause() const { return cause_; }

private:
    size_t statement_index_;
    std::string cause_;
};

/// Executes one parsed statement. Read queries produce a ResultTable; write
/// statements mutate the store and report what changed.
struct ExecOutcome {
    ResultTable table;
    MutationSummary mutations;
};

ExecOutcome execute_statement(GraphStore& store, const ast::Query& query);

/// Read-query entry point per the module contract.
ResultTable execute(GraphStore& store, const ast::Query& query);

/// Applies write statements in order; a failure aborts at that statement
/// (earlier effects remain) and reports its index via ExecError.
MutationSummary apply(GraphStore& store, const std::vector<ast::Query>& statements);

/// Convenience: parse then apply.
MutationSummary apply_text(GraphStore& store, const std::vector<std::string>& statements);

}  // namespace cypherforge::graph
