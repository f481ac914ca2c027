#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "cypherforge/graph/engine.hpp"

namespace cypherforge::graph {

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ServerError : public std::runtime_error {
public:
    ServerError(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct RemoteConfig {
    std::string base_url;  // e.g. http://localhost:7474
    std::string database = "neo4j";
    std::string username;
    std::string password;
    // With multi-database servers each session gets its own database name;
    // otherwise the shared database is wiped when a session opens.
    bool multi_database = false;
    int timeout_seconds = 30;
};

/// One isolated database: a fresh in-memory store (embedded) or a dedicated/
/// wiped remote database. Sessions are single-owner, like the stores they
/// wrap.
class GraphSession {
public:
    virtual ~GraphSession() = default;

    /// Applies write statements in order within one transaction scope.
    virtual MutationSummary apply(const std::vector<std::string>& statements) = 0;

    virtual ResultTable execute(const std::string& query) = 0;

    /// Submits all statements in one transaction, one ResultTable each.
    virtual std::vector<ResultTable> run(const std::vector<std::string>& statements) = 0;

    /// Embedded sessions expose their store for direct inspection.
    virtual GraphStore* store() { return nullptr; }
};

class GraphBackend {
public:
    virtual ~GraphBackend() = default;

    /// `scope` names the isolation unit (one per pipeline question).
    virtual std::unique_ptr<GraphSession> open_session(const std::string& scope) = 0;
};

std::unique_ptr<GraphBackend> make_embedded_backend();
std::unique_ptr<GraphBackend> make_remote_backend(RemoteConfig config);

/// One-shot convenience: anonymous session, all statements in one
/// transaction.
std::vector<ResultTable> backend_run(GraphBackend& backend,
                                     const std::vector<std::string>& statements);

}  // namespace cypherforge::graph
