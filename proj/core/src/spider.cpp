#include "cypherforge/spider.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "cypherforge/graph/backend.hpp"

namespace cypherforge::spider {

namespace {

schema::PropertyType map_sql_type(const std::string& raw) {
    std::string t = util::to_lower(raw);
    if (size_t paren = t.find('('); paren != std::string::npos) t = t.substr(0, paren);
    t = std::string(util::trim(t));
    using PT = schema::PropertyType;
    if (t == "int" || t == "integer" || t == "bigint" || t == "smallint" || t == "tinyint" ||
        t == "number") {
        return PT::Integer;
    }
    if (t == "real" || t == "numeric" || t == "decimal" || t == "float" || t == "double") {
        return PT::Float;
    }
    if (t == "text" || t == "varchar" || t == "char" || t == "string" || t == "nvarchar") {
        return PT::String;
    }
    if (t == "boolean" || t == "bool") return PT::Boolean;
    if (t == "date") return PT::Date;
    if (t == "time" || t == "datetime" || t == "timestamp") return PT::LocalDatetime;
    throw SpiderError(SpiderErrorKind::UnmappableType,
                      fmt::format("no mapping for SQL type '{}'", raw));
}

std::string upper_snake(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        } else {
            out += '_';
        }
    }
    return out;
}

std::string cypher_literal(const Json& v) {
    if (v.is_string()) {
        std::string escaped;
        for (char c : v.get<std::string>()) {
            if (c == '\\' || c == '\'') escaped += '\\';
            escaped += c;
        }
        return fmt::format("'{}'", escaped);
    }
    return v.dump();
}

const Column* find_column(const Table& table, const std::string& name) {
    for (const auto& c : table.columns) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

}  // namespace

RelationalSchema RelationalSchema::from_json(const Json& j) {
    RelationalSchema rel;
    for (const auto& t : j.at("tables")) {
        Table table;
        table.name = t.at("name").get<std::string>();
        for (const auto& c : t.at("columns")) {
            Column col;
            col.name = c.at("name").get<std::string>();
            col.type = c.at("type").get<std::string>();
            col.is_pk = c.value("is_pk", false);
            table.columns.push_back(std::move(col));
        }
        rel.tables.push_back(std::move(table));
    }
    for (const auto& f : j.value("foreign_keys", Json::array())) {
        ForeignKey fk;
        fk.from_table = f.at("from_table").get<std::string>();
        fk.to_table = f.at("to_table").get<std::string>();
        if (f.contains("from_columns")) {
            fk.from_columns = f.at("from_columns").get<std::vector<std::string>>();
            fk.to_columns = f.at("to_columns").get<std::vector<std::string>>();
        } else {
            fk.from_columns = {f.at("from_column").get<std::string>()};
            fk.to_columns = {f.at("to_column").get<std::string>()};
        }
        if (fk.from_columns.size() != fk.to_columns.size() || fk.from_columns.empty()) {
            throw SpiderError(SpiderErrorKind::Parse,
                              "foreign key column lists must be parallel and nonempty");
        }
        rel.foreign_keys.push_back(std::move(fk));
    }
    // Referential check up front.
    for (const auto& fk : rel.foreign_keys) {
        const Table* from = rel.find_table(fk.from_table);
        const Table* to = rel.find_table(fk.to_table);
        if (!from || !to) {
            throw SpiderError(SpiderErrorKind::DanglingFk,
                              fmt::format("foreign key references missing table '{}'",
                                          from ? fk.to_table : fk.from_table));
        }
        for (const auto& c : fk.from_columns) {
            if (!find_column(*from, c)) {
                throw SpiderError(SpiderErrorKind::DanglingFk,
                                  fmt::format("foreign key references missing column '{}.{}'",
                                              fk.from_table, c));
            }
        }
        for (const auto& c : fk.to_columns) {
            if (!find_column(*to, c)) {
                throw SpiderError(SpiderErrorKind::DanglingFk,
                                  fmt::format("foreign key references missing column '{}.{}'",
                                              fk.to_table, c));
            }
        }
    }
    return rel;
}

const Table* RelationalSchema::find_table(const std::string& name) const {
    for (const auto& t : tables) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

bool is_junction_table(const RelationalSchema& rel, const Table& table) {
    if (table.columns.empty()) return false;
    for (const auto& column : table.columns) {
        bool in_fk = false;
        for (const auto& fk : rel.foreign_keys) {
            if (fk.from_table != table.name) continue;
            if (std::find(fk.from_columns.begin(), fk.from_columns.end(), column.name) !=
                fk.from_columns.end()) {
                in_fk = true;
                break;
            }
        }
        if (!in_fk) return false;
    }
    return true;
}

schema::GraphSchema convert_schema(
    const RelationalSchema& rel,
    const std::map<std::string, std::string>& rel_name_overrides) {
    schema::GraphSchema out;
    // Junction tables (all columns in FKs) are still nodes.
    for (const auto& table : rel.tables) {
        schema::NodeDef node;
        node.label = table.name;
        for (const auto& column : table.columns) {
            node.properties.push_back({column.name, map_sql_type(column.type)});
        }
        out.nodes.push_back(std::move(node));
    }
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& fk : rel.foreign_keys) {
        std::string rel_name = "HAS_" + upper_snake(fk.to_table);
        auto override_it = rel_name_overrides.find(fk.from_table + "." + fk.from_columns[0]);
        if (override_it != rel_name_overrides.end()) rel_name = override_it->second;

        if (!out.find_relationship(rel_name)) {
            out.relationships.push_back({rel_name, {}});
        }
        if (seen.insert({fk.from_table, rel_name, fk.to_table}).second) {
            out.patterns.push_back({fk.from_table, rel_name, fk.to_table});
        }
    }
    return out;
}

RowConversion convert_rows(const RelationalSchema& rel,
                           const std::map<std::string, std::vector<Json>>& rows_per_table) {
    RowConversion out;

    // Nodes first, in schema table order.
    for (const auto& table : rel.tables) {
        auto it = rows_per_table.find(table.name);
        if (it == rows_per_table.end()) continue;
        for (size_t i = 0; i < it->second.size(); ++i) {
            const Json& row = it->second[i];
            std::string props = fmt::format("_rowid: {}", i);
            for (const auto& column : table.columns) {
                if (!row.contains(column.name) || row.at(column.name).is_null()) continue;
                props += fmt::format(", {}: {}", column.name,
                                     cypher_literal(row.at(column.name)));
            }
            out.statements.push_back(
                fmt::format("CREATE (n:{} {{{}}})", table.name, props));
        }
    }

    // Then edges, joining on the referenced key values.
    for (const auto& fk : rel.foreign_keys) {
        auto from_rows = rows_per_table.find(fk.from_table);
        auto to_rows = rows_per_table.find(fk.to_table);
        if (from_rows == rows_per_table.end()) continue;
        std::string rel_name = "HAS_" + upper_snake(fk.to_table);

        for (size_t i = 0; i < from_rows->second.size(); ++i) {
            const Json& row = from_rows->second[i];
            bool has_all = true;
            for (const auto& c : fk.from_columns) {
                if (!row.contains(c) || row.at(c).is_null()) {
                    has_all = false;
                    break;
                }
            }
            if (!has_all) continue;

            std::optional<size_t> target;
            if (to_rows != rows_per_table.end()) {
                for (size_t j = 0; j < to_rows->second.size(); ++j) {
                    const Json& candidate = to_rows->second[j];
                    bool all_equal = true;
                    for (size_t k = 0; k < fk.from_columns.size(); ++k) {
                        if (!candidate.contains(fk.to_columns[k]) ||
                            candidate.at(fk.to_columns[k]) != row.at(fk.from_columns[k])) {
                            all_equal = false;
                            break;
                        }
                    }
                    if (all_equal) {
                        target = j;
                        break;
                    }
                }
            }
            if (!target) {
                out.warnings.push_back(fmt::format(
                    "orphan row: {}[{}] references no {} row via {}; edge skipped",
                    fk.from_table, i, fk.to_table, fk.from_columns[0]));
                continue;
            }
            out.statements.push_back(fmt::format(
                "MATCH (a:{} {{_rowid: {}}}) MATCH (b:{} {{_rowid: {}}}) "
                "CREATE (a)-[:{}]->(b)",
                fk.from_table, i, fk.to_table, *target, rel_name));
        }
    }
    return out;
}

Json BenchmarkTask::to_json() const {
    Json j;
    j["id"] = id;
    j["graph_schema"] = schema::schema_to_json(graph_schema);
    j["schema_text"] = schema::print_schema(graph_schema);
    j["population_statements"] = population_statements;
    j["question"] = question;
    j["gold_result"] = gold_result.to_json();
    j["graded"] = graded;
    if (!gold_cypher.empty()) j["gold_cypher"] = gold_cypher;
    return j;
}

BenchmarkTask BenchmarkTask::from_json(const Json& j) {
    BenchmarkTask t;
    t.id = j.at("id").get<std::string>();
    t.graph_schema = schema::schema_from_json(j.at("graph_schema"));
    t.population_statements = j.at("population_statements").get<std::vector<std::string>>();
    t.question = j.at("question").get<std::string>();
    t.gold_result = judge::GroundTruth::from_value(j.at("gold_result"));
    t.graded = j.value("graded", true);
    t.gold_cypher = j.value("gold_cypher", "");
    return t;
}

std::vector<BenchmarkTask> load_tasks(const std::string& schema_path,
                                      const std::string& data_path,
                                      const std::string& questions_path) {
    RelationalSchema rel = RelationalSchema::from_json(Json::parse(util::read_file(schema_path)));
    Json data = Json::parse(util::read_file(data_path));
    std::map<std::string, std::vector<Json>> rows;
    for (const auto& [table, table_rows] : data.items()) {
        rows[table] = table_rows.get<std::vector<Json>>();
    }

    schema::GraphSchema graph = convert_schema(rel);
    RowConversion conversion = convert_rows(rel, rows);
    for (const auto& warning : conversion.warnings) {
        fmt::print(stderr, "warning: {}\n", warning);
    }

    Json questions = Json::parse(util::read_file(questions_path));
    std::vector<BenchmarkTask> tasks;
    for (const auto& q : questions) {
        BenchmarkTask task;
        task.id = q.value("id", fmt::format("task{:04}", tasks.size()));
        task.graph_schema = graph;
        task.population_statements = conversion.statements;
        task.question = q.at("question").get<std::string>();
        if (q.contains("gold_cypher")) {
            task.gold_cypher = q.at("gold_cypher").get<std::string>();
            graph::GraphStore store = graph::fresh_store();
            graph::apply_text(store, conversion.statements);
            graph::ResultTable table =
                graph::execute(store, graph::parse_cypher(task.gold_cypher));
            // Result rows become the gold records, keyed by column name.
            Json records = Json::array();
            for (const auto& row : table.rows) {
                Json record = Json::object();
                for (size_t c = 0; c < table.columns.size() && c < row.size(); ++c) {
                    record[table.columns[c]] = row[c].to_json();
                }
                records.push_back(std::move(record));
            }
            task.gold_result = judge::GroundTruth::from_value(records);
        } else if (q.contains("gold_result")) {
            task.gold_result = judge::GroundTruth::from_value(q.at("gold_result"));
        } else {
            task.graded = false;
        }
        tasks.push_back(std::move(task));
    }
    return tasks;
}

}  // namespace cypherforge::spider
