#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cypherforge/judge.hpp"
#include "cypherforge/schema.hpp"

namespace cypherforge::spider {

struct Column {
    std::string name;
    std::string type;  // SQL type token
    bool is_pk = false;
};

struct Table {
    std::string name;
    std::vector<Column> columns;
};

/// Composite keys list all column pairs; they join simultaneously.
struct ForeignKey {
    std::string from_table;
    std::vector<std::string> from_columns;
    std::string to_table;
    std::vector<std::string> to_columns;
};

struct RelationalSchema {
    std::vector<Table> tables;
    std::vector<ForeignKey> foreign_keys;

    static RelationalSchema from_json(const Json& j);
    const Table* find_table(const std::string& name) const;
};

enum class SpiderErrorKind { UnmappableType, DanglingFk, Parse };

class SpiderError : public std::runtime_error {
public:
    SpiderError(SpiderErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    SpiderErrorKind kind() const { return kind_; }

private:
    SpiderErrorKind kind_;
};

struct BenchmarkTask {
    std::string id;
    schema::GraphSchema graph_schema;
    std::vector<std::string> population_statements;
    std::string question;
    judge::GroundTruth gold_result;
    bool graded = true;
    std::string gold_cypher;  // empty when the result came from a file

    Json to_json() const;
    static BenchmarkTask from_json(const Json& j);
};

/// True iff every column of `table` participates in some foreign key.
/// Junction tables remain nodes under the conversion.
bool is_junction_table(const RelationalSchema& rel, const Table& table);

/// Tables -> nodes (SQL types mapped onto schema property types), foreign
/// keys -> HAS_<TO_TABLE> relationships with (:From)-[:R]->(:To) patterns.
/// `rel_name_overrides` keys are "from_table.from_column".
schema::GraphSchema convert_schema(
    const RelationalSchema& rel,
    const std::map<std::string, std::string>& rel_name_overrides = {});

struct RowConversion {
    std::vector<std::string> statements;  // all node CREATEs precede edges
    std::vector<std::string> warnings;    // orphan rows: edge skipped
};

/// One CREATE per row (with a synthetic _rowid), then MATCH-MATCH-CREATE per
/// satisfied foreign key pair.
RowConversion convert_rows(const RelationalSchema& rel,
                           const std::map<std::string, std::vector<Json>>& rows_per_table);

/// Builds one task per question. Gold results come from executing the gold
/// Cypher on the converted store, else from an inline expected value; tasks
/// with neither are marked ungraded.
std::vector<BenchmarkTask> load_tasks(const std::string& schema_path,
                                      const std::string& data_path,
                                      const std::string& questions_path);

}  // namespace cypherforge::spider
