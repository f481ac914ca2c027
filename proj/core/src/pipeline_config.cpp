#include <cmath>

#include <fmt/format.h>

#include "cypherforge/pipeline.hpp"

namespace cypherforge::pipeline {

namespace {

std::string expanded(const Json& j, const char* key, const std::string& fallback = "") {
    if (!j.contains(key)) return fallback;
    return util::expand_env(j.at(key).get<std::string>());
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& j) {
    PipelineConfig c;
    if (j.contains("seed_domains")) {
        c.seed_domains = j.at("seed_domains").get<std::vector<std::string>>();
    }
    c.target_domain_count = j.value("target_domain_count", c.target_domain_count);
    c.questions_per_schema = j.value("questions_per_schema", c.questions_per_schema);
    c.taxonomies_per_call = j.value("taxonomies_per_call", c.taxonomies_per_call);
    c.max_cypher_attempts = j.value("max_cypher_attempts", c.max_cypher_attempts);
    c.max_negative_points = j.value("max_negative_points", c.max_negative_points);
    c.max_population_attempts = j.value("max_population_attempts", c.max_population_attempts);
    c.stall_limit = j.value("stall_limit", c.stall_limit);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);

    if (j.contains("skeleton")) {
        const Json& s = j.at("skeleton");
        c.skeleton.min_nodes = s.value("min_nodes", c.skeleton.min_nodes);
        c.skeleton.max_nodes = s.value("max_nodes", c.skeleton.max_nodes);
        c.skeleton.min_relationships =
            s.value("min_relationships", c.skeleton.min_relationships);
        c.skeleton.max_relationships =
            s.value("max_relationships", c.skeleton.max_relationships);
    }

    if (j.contains("provider")) {
        const Json& p = j.at("provider");
        c.provider_type = p.value("type", c.provider_type);
        c.mock_script_path = expanded(p, "mock_script");
        c.http.base_url = expanded(p, "base_url");
        c.http.path = p.value("path", c.http.path);
        std::string key_env = p.value("api_key_env", "CYPHERFORGE_API_KEY");
        if (const char* key = std::getenv(key_env.c_str())) c.http.api_key = key;
        if (p.contains("api_key")) c.http.api_key = expanded(p, "api_key");
        c.http.max_retries = p.value("max_retries", c.http.max_retries);
        c.http.initial_backoff_ms = p.value("initial_backoff_ms", c.http.initial_backoff_ms);
        c.http.timeout_seconds = p.value("timeout_seconds", c.http.timeout_seconds);
    }
    if (j.contains("rate_limit")) {
        const Json& r = j.at("rate_limit");
        c.rate_limit.requests_per_second =
            r.value("requests_per_second", c.rate_limit.requests_per_second);
        c.rate_limit.burst = r.value("burst", c.rate_limit.burst);
    }

    if (j.contains("backend")) {
        const Json& b = j.at("backend");
        c.backend_type = b.value("type", c.backend_type);
        c.remote.base_url = expanded(b, "base_url");
        c.remote.database = b.value("database", c.remote.database);
        c.remote.username = expanded(b, "username");
        c.remote.password = expanded(b, "password");
        c.remote.multi_database = b.value("multi_database", c.remote.multi_database);
        c.remote.timeout_seconds = b.value("timeout_seconds", c.remote.timeout_seconds);
    }

    c.judge_mode = j.value("judge", c.judge_mode);

    if (j.contains("models")) {
        for (const auto& [step, model] : j.at("models").items()) {
            if (step == "default") {
                c.default_model = model.get<std::string>();
            } else {
                c.step_models[step] = model.get<std::string>();
            }
        }
    }
    if (j.contains("temperatures")) {
        for (const auto& [step, temp] : j.at("temperatures").items()) {
            c.step_temperatures[step] = temp.get<double>();
        }
    }

    if (j.contains("taxonomy_file")) c.taxonomy_file = expanded(j, "taxonomy_file");
    if (j.contains("prompt_dir")) c.prompt_dir = expanded(j, "prompt_dir");
    c.include_transcripts = j.value("include_transcripts", c.include_transcripts);

    c.validate();
    return c;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    return from_json(Json::parse(util::read_file(path)));
}

void PipelineConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw std::invalid_argument("config: " + what);
    };
    require(!seed_domains.empty(), "seed_domains must be nonempty");
    require(target_domain_count >= 1, "target_domain_count must be >= 1");
    require(questions_per_schema >= 1, "questions_per_schema must be >= 1");
    require(taxonomies_per_call >= 1, "taxonomies_per_call must be >= 1");
    require(max_cypher_attempts >= 1, "max_cypher_attempts must be >= 1");
    require(max_negative_points >= 1 && max_negative_points <= 5,
            "max_negative_points must be in [1, 5]");
    require(max_population_attempts >= 1, "max_population_attempts must be >= 1");
    require(stall_limit >= 1, "stall_limit must be >= 1");
    require(workers >= 1, "workers must be >= 1");
    require(skeleton.min_nodes >= 1 && skeleton.max_nodes >= skeleton.min_nodes,
            "skeleton node range invalid");
    require(skeleton.min_relationships >= 0 &&
                skeleton.max_relationships >= skeleton.min_relationships,
            "skeleton relationship range invalid");
    require(provider_type == "mock" || provider_type == "http",
            "provider.type must be mock or http");
    require(backend_type == "embedded" || backend_type == "remote",
            "backend.type must be embedded or remote");
    require(judge_mode == "structural" || judge_mode == "model",
            "judge must be structural or model");
    for (const auto& [step, temp] : step_temperatures) {
        require(std::isfinite(temp) && temp >= 0.0 && temp <= 2.0,
                fmt::format("temperature for '{}' must be finite in [0,2]", step));
    }
}

std::string PipelineConfig::model_for(const std::string& step) const {
    auto it = step_models.find(step);
    return it == step_models.end() ? default_model : it->second;
}

double PipelineConfig::temperature_for(const std::string& step) const {
    auto it = step_temperatures.find(step);
    if (it != step_temperatures.end()) return it->second;
    // Domain expansion wants diversity; everything else stays near-greedy.
    return step == "domain_expansion" ? 0.8 : 0.2;
}

Json DatasetRecord::to_json(bool include_transcripts) const {
    Json j;
    j["id"] = id;
    j["domain"] = domain;
    j["schema_text"] = schema_text;
    j["query_type"] = query_type;
    j["question"] = question;
    j["ground_truth"] = ground_truth.to_json();
    j["population_statements"] = population_statements;
    j["cypher"] = cypher;
    j["execution_result"] = execution_result.to_json();
    j["verdict"] = verdict.to_json();
    j["attempts"] = attempts;
    if (include_transcripts) {
        Json arr = Json::array();
        for (const auto& t : transcripts) arr.push_back(t.to_json());
        j["transcripts"] = std::move(arr);
    }
    return j;
}

DatasetRecord DatasetRecord::from_json(const Json& j) {
    DatasetRecord r;
    r.id = j.at("id").get<std::string>();
    r.domain = j.value("domain", "");
    r.schema_text = j.at("schema_text").get<std::string>();
    r.query_type = j.value("query_type", "");
    r.question = j.at("question").get<std::string>();
    r.ground_truth = judge::GroundTruth::from_value(j.at("ground_truth"));
    r.population_statements = j.at("population_statements").get<std::vector<std::string>>();
    r.cypher = j.at("cypher").get<std::string>();
    if (j.contains("execution_result")) {
        r.execution_result = graph::ResultTable::from_json(j.at("execution_result"));
    }
    if (j.contains("verdict")) {
        const Json& v = j.at("verdict");
        r.verdict = v.value("outcome", "") == "CORRECT"
                        ? judge::Verdict::correct(v.value("rationale", ""))
                        : judge::Verdict::incorrect(v.value("rationale", ""));
    }
    r.attempts = j.value("attempts", 1);
    return r;
}

std::string_view to_string(DiscardReason reason) {
    switch (reason) {
        case DiscardReason::GroundTruthFailed: return "ground_truth_failed";
        case DiscardReason::PopulationGivenUp: return "population_given_up";
        case DiscardReason::CypherAttemptsExhausted: return "cypher_attempts_exhausted";
        case DiscardReason::GatewayFailed: return "gateway_failed";
    }
    return "unknown";
}

size_t RunReport::discarded_total() const {
    size_t total = 0;
    for (const auto& [_, n] : discarded_by_reason) total += n;
    return total;
}

Json RunReport::to_json() const {
    Json j;
    j["domains"] = domains;
    j["schemas_built"] = schemas_built;
    j["schemas_failed"] = schemas_failed;
    j["question_gen_failures"] = question_gen_failures;
    j["questions_attempted"] = questions_attempted;
    j["records_emitted"] = records_emitted;
    j["discarded"] = discarded_by_reason;
    j["discarded_total"] = discarded_total();
    j["calls_by_step"] = calls_by_step;
    j["domain_expansion_stalled"] = domain_expansion_stalled;
    j["wall_seconds"] = wall_seconds;
    return j;
}

std::string RunReport::summary() const {
    std::string out = fmt::format(
        "domains={} schemas={} (+{} failed) questions={} emitted={} discarded={} "
        "wall={:.2f}s\n",
        domains, schemas_built, schemas_failed, questions_attempted, records_emitted,
        discarded_total(), wall_seconds);
    for (const auto& [reason, n] : discarded_by_reason) {
        out += fmt::format("  discarded[{}] = {}\n", reason, n);
    }
    size_t calls = 0;
    for (const auto& [_, n] : calls_by_step) calls += n;
    out += fmt::format("  llm calls = {}\n", calls);
    return out;
}

}  // namespace cypherforge::pipeline
