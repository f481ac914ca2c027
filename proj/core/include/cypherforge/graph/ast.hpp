#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cypherforge/graph/value.hpp"

namespace cypherforge::graph::ast {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    Contains,
    StartsWith,
    EndsWith,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
};

enum class UnaryOp { Not, Minus };

struct Literal {
    Value value;
};

struct Variable {
    std::string name;
};

struct PropertyAccess {
    ExprPtr base;
    std::string property;
};

struct ListLiteral {
    std::vector<ExprPtr> items;
};

struct MapLiteral {
    std::vector<std::pair<std::string, ExprPtr>> entries;
};

struct Unary {
    UnaryOp op;
    ExprPtr operand;
};

struct Binary {
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

struct IsNull {
    ExprPtr operand;
    bool negated = false;
};

/// Function call; covers aggregates (count/sum/avg/min/max/collect),
/// scalar functions, and count(*).
struct FnCall {
    std::string name;  // lowercased
    std::vector<ExprPtr> args;
    bool distinct = false;
    bool star = false;
};

struct Expr {
    std::variant<Literal, Variable, PropertyAccess, ListLiteral, MapLiteral, Unary, Binary,
                 IsNull, FnCall>
        node;
    std::string text;  // source text, used for column naming
};

bool is_aggregate_fn(std::string_view name);
bool contains_aggregate(const Expr& e);

// --- patterns ---

struct NodePattern {
    std::optional<std::string> variable;
    std::vector<std::string> labels;
    std::vector<std::pair<std::string, ExprPtr>> properties;
};

enum class Direction { Right, Left, Undirected };

struct VarLength {
    uint32_t min_hops = 1;
    uint32_t max_hops = 1;
};

struct EdgePattern {
    std::optional<std::string> variable;
    std::vector<std::string> types;
    Direction direction = Direction::Right;
    std::vector<std::pair<std::string, ExprPtr>> properties;
    std::optional<VarLength> var_length;
};

/// Linear path: node (edge node)*. `shortest_path` marks a
/// shortestPath(...) wrapper, which requires exactly one hop pattern.
struct PatternPart {
    std::optional<std::string> path_variable;
    bool shortest_path = false;
    std::vector<NodePattern> nodes;
    std::vector<EdgePattern> edges;
};

// --- clauses ---

struct MatchClause {
    bool optional = false;
    std::vector<PatternPart> patterns;
    ExprPtr where;  // may be null
};

struct CreateClause {
    std::vector<PatternPart> patterns;
};

/// MERGE restricted to single-node patterns.
struct MergeClause {
    NodePattern node;
};

struct SetItem {
    std::string variable;
    std::string property;
    ExprPtr value;
};

struct SetClause {
    std::vector<SetItem> items;
};

struct ProjectionItem {
    ExprPtr expr;
    std::optional<std::string> alias;

    const std::string& output_name() const { return alias ? *alias : expr->text; }
};

struct SortItem {
    ExprPtr expr;
    bool ascending = true;
};

/// Shared body of WITH and RETURN.
struct Projection {
    bool distinct = false;
    std::vector<ProjectionItem> items;
    std::vector<SortItem> order_by;
    std::optional<int64_t> skip;
    std::optional<int64_t> limit;
    ExprPtr where;  // WITH ... WHERE only
};

struct WithClause {
    Projection projection;
};

struct ReturnClause {
    Projection projection;
};

using Clause =
    std::variant<MatchClause, CreateClause, MergeClause, SetClause, WithClause, ReturnClause>;

struct Query {
    std::string raw;
    std::vector<Clause> clauses;

    bool has_return() const;
    bool is_write() const;
};

}  // namespace cypherforge::graph::ast
