#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cypherforge/graph/backend.hpp"
#include "cypherforge/judge.hpp"
#include "cypherforge/llm.hpp"
#include "cypherforge/schema.hpp"
#include "cypherforge/taxonomy.hpp"

namespace cypherforge::pipeline {

struct SkeletonRange {
    int min_nodes = 3;
    int max_nodes = 8;
    int min_relationships = 3;
    int max_relationships = 10;
};

struct PipelineConfig {
    std::vector<std::string> seed_domains;
    int target_domain_count = 700;
    int questions_per_schema = 20;
    int taxonomies_per_call = 7;
    int max_cypher_attempts = 5;
    int max_negative_points = 5;
    int max_population_attempts = 3;
    int stall_limit = 10;
    uint64_t seed = 0;
    int workers = 1;
    SkeletonRange skeleton;

    std::string provider_type = "mock";  // mock | http
    std::string mock_script_path;
    llm::HttpProviderConfig http;
    llm::RateLimit rate_limit;

    std::string backend_type = "embedded";  // embedded | remote
    graph::RemoteConfig remote;

    std::string judge_mode = "structural";  // structural | model

    std::string default_model = "gpt-4";
    std::map<std::string, std::string> step_models;
    std::map<std::string, double> step_temperatures;  // domain_expansion defaults to 0.8

    std::optional<std::string> taxonomy_file;
    std::optional<std::string> prompt_dir;
    bool include_transcripts = false;

    static PipelineConfig from_json(const Json& j);
    static PipelineConfig from_file(const std::string& path);
    void validate() const;

    std::string model_for(const std::string& step) const;
    double temperature_for(const std::string& step) const;
};

struct QuestionRecord {
    std::string id;
    std::string domain;
    schema::GraphSchema schema;
    std::string schema_text;  // canonical print
    std::string query_type;   // taxonomy id
    std::string question;
    judge::GroundTruth ground_truth;
};

struct DatasetRecord {
    std::string id;
    std::string domain;
    std::string schema_text;
    std::string query_type;
    std::string question;
    judge::GroundTruth ground_truth;
    std::vector<std::string> population_statements;
    std::string cypher;
    graph::ResultTable execution_result;
    judge::Verdict verdict;
    int attempts = 1;
    std::vector<llm::Transcript> transcripts;

    Json to_json(bool include_transcripts) const;
    static DatasetRecord from_json(const Json& j);
};

/// Why a question produced no DatasetRecord. Schema-level failures are
/// tracked on the report instead; they happen before questions exist.
enum class DiscardReason {
    GroundTruthFailed,
    PopulationGivenUp,
    CypherAttemptsExhausted,
    GatewayFailed,
};

std::string_view to_string(DiscardReason reason);

struct Discarded {
    std::string question_id;
    DiscardReason reason;
    std::string detail;
    int attempts = 0;
};

struct RunReport {
    size_t domains = 0;
    size_t schemas_built = 0;
    size_t schemas_failed = 0;
    size_t question_gen_failures = 0;
    size_t questions_attempted = 0;
    size_t records_emitted = 0;
    bool domain_expansion_stalled = false;
    std::map<std::string, size_t> discarded_by_reason;
    std::map<std::string, size_t> calls_by_step;
    double wall_seconds = 0;

    size_t discarded_total() const;
    Json to_json() const;
    std::string summary() const;
};

enum class StageErrorKind {
    ExtractionFailed,
    SchemaInvalid,
    ApplyFailed,
    PopulationGivenUp,
    NoQuestionsParsed,
};

class StageError : public std::runtime_error {
public:
    StageError(StageErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    StageErrorKind kind() const { return kind_; }

private:
    StageErrorKind kind_;
};

struct DomainExpansion {
    std::vector<std::string> domains;
    bool stalled = false;
};

struct Population {
    std::unique_ptr<graph::GraphSession> session;
    std::vector<std::string> statements;
};

struct QuestionOutcome {
    std::optional<DatasetRecord> record;
    std::optional<Discarded> discarded;
};

/// Lifts Cypher write statements out of a population response: a ```cypher
/// fence splits on semicolons; a ```python fence has its string literals
/// lifted statically (never executed). Exposed for tests.
std::vector<std::string> extract_population_statements(const std::string& content);

/// Orchestrates the five stages. Construction wires the provider, backend,
/// taxonomy registry, and prompt templates from config.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);
    Pipeline(PipelineConfig config, std::shared_ptr<llm::Provider> provider);

    // Stage operations, public so tests can drive them individually.
    DomainExpansion expand_domains();
    schema::GraphSchema generate_schema(const std::string& domain, size_t domain_index);
    std::vector<std::pair<std::string, std::string>> generate_questions(
        const schema::GraphSchema& schema, size_t domain_index);
    judge::GroundTruth generate_ground_truth(const std::string& question,
                                             const std::string& schema_text,
                                             std::vector<llm::Transcript>* transcripts = nullptr);
    Population populate_database(const QuestionRecord& question,
                                 std::vector<llm::Transcript>* transcripts = nullptr);
    std::string generate_cypher(const QuestionRecord& question,
                                std::vector<llm::Transcript>* transcripts = nullptr);
    QuestionOutcome validate_and_retain(const QuestionRecord& question, Population population,
                                        std::vector<llm::Transcript>* transcripts = nullptr);

    /// Full pipeline; dataset JSONL to `out_path`, report alongside.
    RunReport run(const std::string& out_path);

    const PipelineConfig& config() const { return config_; }
    const taxonomy::TaxonomyRegistry& registry() const { return registry_; }
    llm::Client& client() { return *client_; }

private:
    llm::ChatResponse call_step(const std::string& step_id, const std::string& template_id,
                                const std::map<std::string, std::string>& bindings,
                                std::vector<llm::Transcript>* transcripts,
                                std::vector<llm::ChatMessage> extra_messages = {});
    QuestionOutcome process_question(const QuestionRecord& question);
    bool population_sane(const QuestionRecord& question, graph::GraphSession& session,
                         const std::vector<std::string>& statements, std::string& why) const;
    std::string render_taxonomies(const std::vector<taxonomy::QueryTaxonomy>& taxonomies) const;
    uint64_t derived_seed(uint64_t stream, uint64_t index) const;

    PipelineConfig config_;
    llm::TemplateRegistry templates_;
    taxonomy::TaxonomyRegistry registry_;
    std::shared_ptr<llm::Provider> provider_;
    std::unique_ptr<llm::Client> client_;
    std::unique_ptr<graph::GraphBackend> backend_;
    std::map<std::string, size_t> calls_by_step_;
    std::mutex stats_mutex_;

    friend struct PipelineTestAccess;
};

}  // namespace cypherforge::pipeline
