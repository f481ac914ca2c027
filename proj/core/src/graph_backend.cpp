#include "cypherforge/graph/backend.hpp"

#include <fmt/format.h>

#include <httplib.h>

#include "cypherforge/util.hpp"

namespace cypherforge::graph {

namespace {

class EmbeddedSession final : public GraphSession {
public:
    EmbeddedSession() : store_(fresh_store()) {}

    MutationSummary apply(const std::vector<std::string>& statements) override {
        return apply_text(store_, statements);
    }

    ResultTable execute(const std::string& query) override {
        return graph::execute(store_, parse_cypher(query));
    }

    std::vector<ResultTable> run(const std::vector<std::string>& statements) override {
        std::vector<ResultTable> tables;
        for (size_t i = 0; i < statements.size(); ++i) {
            try {
                tables.push_back(execute_statement(store_, parse_cypher(statements[i])).table);
            } catch (const QueryError& e) {
                throw ExecError(i, e.what());
            } catch (const ExecError& e) {
                throw ExecError(i, e.cause());
            }
        }
        return tables;
    }

    GraphStore* store() override { return &store_; }

private:
    GraphStore store_;
};

class EmbeddedBackend final : public GraphBackend {
public:
    std::unique_ptr<GraphSession> open_session(const std::string&) override {
        return std::make_unique<EmbeddedSession>();
    }
};

class RemoteSession final : public GraphSession {
public:
    RemoteSession(RemoteConfig config, std::string database)
        : config_(std::move(config)), database_(std::move(database)) {
        if (!config_.multi_database) {
            // Shared database: wipe to guarantee isolation.
            post_statements({"MATCH (n) DETACH DELETE n"}, /*include_stats=*/false);
        }
    }

    MutationSummary apply(const std::vector<std::string>& statements) override {
        Json response = post_statements(statements, /*include_stats=*/true);
        MutationSummary total;
        for (const auto& result : response.value("results", Json::array())) {
            if (!result.contains("stats")) continue;
            const Json& stats = result["stats"];
            total.nodes_created += stats.value("nodes_created", 0ULL);
            total.edges_created += stats.value("relationships_created", 0ULL);
            total.properties_set += stats.value("properties_set", 0ULL);
        }
        return total;
    }

    ResultTable execute(const std::string& query) override {
        auto tables = run({query});
        return tables.empty() ? ResultTable{} : std::move(tables.front());
    }

    std::vector<ResultTable> run(const std::vector<std::string>& statements) override {
        Json response = post_statements(statements, /*include_stats=*/false);
        std::vector<ResultTable> tables;
        for (const auto& result : response.value("results", Json::array())) {
            ResultTable t;
            t.columns = result.value("columns", std::vector<std::string>{});
            for (const auto& datum : result.value("data", Json::array())) {
                std::vector<Value> row;
                for (const auto& cell : datum.value("row", Json::array())) {
                    row.push_back(Value::from_json(cell));
                }
                t.rows.push_back(std::move(row));
            }
            tables.push_back(std::move(t));
        }
        return tables;
    }

private:
    Json post_statements(const std::vector<std::string>& statements, bool include_stats) {
        Json body;
        body["statements"] = Json::array();
        for (const auto& s : statements) {
            Json stmt{{"statement", s}, {"parameters", Json::object()}};
            if (include_stats) stmt["includeStats"] = true;
            body["statements"].push_back(std::move(stmt));
        }

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        if (!config_.username.empty()) {
            client.set_basic_auth(config_.username, config_.password);
        }
        std::string path = fmt::format("/db/{}/tx/commit", database_);
        auto result = client.Post(path, body.dump(), "application/json");
        if (!result) {
            throw TransportError(fmt::format("POST {}{} failed: {}", config_.base_url, path,
                                             httplib::to_string(result.error())));
        }
        Json parsed;
        try {
            parsed = Json::parse(result->body);
        } catch (const Json::parse_error&) {
            if (result->status >= 400) {
                throw ServerError(fmt::format("HTTP {}", result->status), result->body);
            }
            throw TransportError("malformed JSON in server response");
        }
        const Json errors = parsed.value("errors", Json::array());
        if (!errors.empty()) {
            const Json& first = errors.at(0);
            throw ServerError(first.value("code", fmt::format("HTTP {}", result->status)),
                              first.value("message", "server reported an error"));
        }
        if (result->status >= 400) {
            throw ServerError(fmt::format("HTTP {}", result->status), result->body);
        }
        return parsed;
    }

    RemoteConfig config_;
    std::string database_;
};

class RemoteBackend final : public GraphBackend {
public:
    explicit RemoteBackend(RemoteConfig config) : config_(std::move(config)) {}

    std::unique_ptr<GraphSession> open_session(const std::string& scope) override {
        std::string database = config_.database;
        if (config_.multi_database && !scope.empty()) {
            std::string suffix;
            for (char c : scope) {
                suffix += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
            }
            database += suffix;
        }
        return std::make_unique<RemoteSession>(config_, database);
    }

private:
    RemoteConfig config_;
};

}  // namespace

std::unique_ptr<GraphBackend> make_embedded_backend() {
    return std::make_unique<EmbeddedBackend>();
}

std::unique_ptr<GraphBackend> make_remote_backend(RemoteConfig config) {
    return std::make_unique<RemoteBackend>(std::move(config));
}

std::vector<ResultTable> backend_run(GraphBackend& backend,
                                     const std::vector<std::string>& statements) {
    return backend.open_session("")->run(statements);
}

}  // namespace cypherforge::graph
