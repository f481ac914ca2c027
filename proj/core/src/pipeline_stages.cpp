#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include <fmt/format.h>

#include "cypherforge/pipeline.hpp"

namespace cypherforge::pipeline {

namespace {

std::vector<std::string> parse_numbered_list(const std::string& content) {
    std::vector<std::string> items;
    for (const auto& raw : util::split_lines(content)) {
        std::string_view line = util::trim(raw);
        size_t i = 0;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == 0 || i >= line.size()) continue;
        if (line[i] != '.' && line[i] != ')') continue;
        std::string_view body = util::trim(line.substr(i + 1));
        if (body.empty()) continue;
        if (body.size() >= 2 && body.front() == '"' && body.back() == '"') {
            body = body.substr(1, body.size() - 2);
        }
        items.emplace_back(body);
    }
    return items;
}

// Lifts string literals out of python source, in order. Handles ' " and
// triple-quoted forms; never evaluates anything.
std::vector<std::string> lift_string_literals(const std::string& source) {
    std::vector<std::string> literals;
    size_t i = 0;
    while (i < source.size()) {
        char c = source[i];
        if (c == '#') {
            while (i < source.size() && source[i] != '\n') ++i;
            continue;
        }
        if (c != '\'' && c != '"') {
            ++i;
            continue;
        }
        bool triple = source.compare(i, 3, std::string(3, c)) == 0;
        std::string quote = triple ? std::string(3, c) : std::string(1, c);
        size_t start = i + quote.size();
        std::string value;
        size_t j = start;
        bool closed = false;
        while (j < source.size()) {
            if (!triple && source[j] == '\\' && j + 1 < source.size()) {
                char esc = source[j + 1];
                switch (esc) {
                    case 'n': value += '\n'; break;
                    case 't': value += '\t'; break;
                    case '\\': value += '\\'; break;
                    case '\'': value += '\''; break;
                    case '"': value += '"'; break;
                    default: value += esc; break;
                }
                j += 2;
                continue;
            }
            if (source.compare(j, quote.size(), quote) == 0) {
                closed = true;
                break;
            }
            if (!triple && source[j] == '\n') break;  // unterminated single-line
            value += source[j++];
        }
        if (!closed) {
            i = j + 1;
            continue;
        }
        literals.push_back(std::move(value));
        i = j + quote.size();
    }
    return literals;
}

bool looks_like_cypher_statement(const std::string& text) {
    auto trimmed = util::trim(text);
    return util::starts_with_word(trimmed, "CREATE") || util::starts_with_word(trimmed, "MATCH") ||
           util::starts_with_word(trimmed, "MERGE");
}

}  // namespace

std::vector<std::string> extract_population_statements(const std::string& content) {
    // Preferred: an explicit cypher fence of semicolon-separated statements.
    try {
        std::string block = llm::extract_fenced(content, "cypher");
        auto statements = graph::split_statements(block);
        if (!statements.empty()) return statements;
    } catch (const llm::GatewayError&) {
    }
    // Else: a python function body whose string literals carry the
    // statements; lifted statically, never executed.
    for (const char* tag : {"python", ""}) {
        try {
            std::string block = llm::extract_fenced(content, tag);
            if (std::string_view(tag).empty() && looks_like_cypher_statement(block)) {
                auto statements = graph::split_statements(block);
                if (!statements.empty()) return statements;
            }
            std::vector<std::string> statements;
            for (const auto& literal : lift_string_literals(block)) {
                for (const auto& stmt : graph::split_statements(literal)) {
                    if (looks_like_cypher_statement(stmt)) statements.push_back(stmt);
                }
            }
            if (!statements.empty()) return statements;
        } catch (const llm::GatewayError&) {
        }
    }
    throw StageError(StageErrorKind::ExtractionFailed,
                     "no population statements found in response");
}

Pipeline::Pipeline(PipelineConfig config) : Pipeline(std::move(config), nullptr) {}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<llm::Provider> provider)
    : config_(std::move(config)),
      templates_(config_.prompt_dir ? llm::TemplateRegistry::with_overrides(*config_.prompt_dir)
                                    : llm::TemplateRegistry::builtin()),
      registry_(taxonomy::load_registry(config_.taxonomy_file)) {
    if (provider) {
        provider_ = std::move(provider);
    } else if (config_.provider_type == "mock") {
        if (config_.mock_script_path.empty()) {
            throw std::invalid_argument("mock provider needs provider.mock_script");
        }
        provider_ = llm::MockProvider::from_file(config_.mock_script_path);
    } else {
        provider_ = std::make_shared<llm::HttpProvider>(config_.http);
    }
    client_ = std::make_unique<llm::Client>(provider_, config_.rate_limit);
    backend_ = config_.backend_type == "embedded" ? graph::make_embedded_backend()
                                                  : graph::make_remote_backend(config_.remote);
}

uint64_t Pipeline::derived_seed(uint64_t stream, uint64_t index) const {
    // splitmix64 over (seed, stream, index); stable across runs.
    uint64_t x = config_.seed ^ (stream * 0x9E3779B97F4A7C15ULL) ^ (index + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

llm::ChatResponse Pipeline::call_step(const std::string& step_id,
                                      const std::string& template_id,
                                      const std::map<std::string, std::string>& bindings,
                                      std::vector<llm::Transcript>* transcripts,
                                      std::vector<llm::ChatMessage> extra_messages) {
    llm::ChatRequest request =
        llm::ChatRequest::user(llm::render(templates_.get(template_id), bindings));
    for (auto& m : extra_messages) request.messages.push_back(std::move(m));
    request.model_id = config_.model_for(template_id);
    request.temperature = config_.temperature_for(template_id);

    llm::ChatResponse response = client_->complete(step_id, request);
    {
        std::lock_guard<std::mutex> lock(stats_mutex_);
        ++calls_by_step_[template_id];
    }
    if (transcripts) {
        llm::Transcript t;
        t.step_id = step_id;
        t.request = request;
        t.response = response;
        t.timestamp_ms = static_cast<int64_t>(transcripts->size());
        transcripts->push_back(std::move(t));
    }
    return response;
}

DomainExpansion Pipeline::expand_domains() {
    DomainExpansion out;
    std::set<std::string> seen;  // case-insensitive dedup key
    for (const auto& d : config_.seed_domains) {
        if (seen.insert(util::to_lower(std::string(util::trim(d)))).second) {
            out.domains.emplace_back(util::trim(d));
        }
    }
    size_t target = static_cast<size_t>(config_.target_domain_count);
    int stalls = 0;
    while (out.domains.size() < target && stalls < config_.stall_limit) {
        std::string existing;
        for (const auto& d : out.domains) existing += "- " + d + "\n";
        llm::ChatResponse response = call_step(
            "domain_expansion", "domain_expansion",
            {{"count", std::to_string(target - out.domains.size())},
             {"existing_domains", existing}},
            nullptr);
        size_t before = out.domains.size();
        try {
            Json arr = llm::extract_json_block(response.content);
            if (arr.is_array()) {
                for (const auto& item : arr) {
                    if (!item.is_string()) continue;
                    std::string domain(util::trim(item.get<std::string>()));
                    if (domain.empty()) continue;
                    if (seen.insert(util::to_lower(domain)).second) {
                        out.domains.push_back(domain);
                        if (out.domains.size() == target) break;
                    }
                }
            }
        } catch (const llm::GatewayError&) {
            // unparseable response counts as a stall
        }
        stalls = out.domains.size() == before ? stalls + 1 : 0;
    }
    out.stalled = out.domains.size() < target;
    return out;
}

std::string Pipeline::render_taxonomies(
    const std::vector<taxonomy::QueryTaxonomy>& taxonomies) const {
    std::string out;
    for (const auto& t : taxonomies) {
        out += fmt::format("- {}: {}\n", t.title, t.description);
    }
    return out;
}

schema::GraphSchema Pipeline::generate_schema(const std::string& domain, size_t domain_index) {
    std::mt19937_64 rng(derived_seed(1, domain_index));
    std::uniform_int_distribution<int> node_count(config_.skeleton.min_nodes,
                                                  config_.skeleton.max_nodes);
    std::uniform_int_distribution<int> rel_count(config_.skeleton.min_relationships,
                                                 config_.skeleton.max_relationships);

    std::string last_error = "schema generation failed";
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string suffix = attempt ? fmt::format(":retry:{}", attempt) : "";
        size_t k = std::min<size_t>(config_.taxonomies_per_call, registry_.size());
        auto taxonomies =
            taxonomy::sample_taxonomies(registry_, k, derived_seed(2, domain_index + attempt));
        std::string taxonomies_text = render_taxonomies(taxonomies);

        try {
            llm::ChatResponse skeleton = call_step(
                "skeleton_schema" + suffix, "skeleton_schema",
                {{"database_name", domain},
                 {"num_nodes", std::to_string(node_count(rng))},
                 {"num_relationships", std::to_string(rel_count(rng))},
                 {"taxonomies", taxonomies_text},
                 {"node_examples", R"(["Person", "Movie"])"},
                 {"relationship_examples", R"(["ACTED_IN", "REVIEWED"])"}},
                nullptr);
            Json parsed = llm::extract_json_block(skeleton.content);
            if (!parsed.contains("nodes") || !parsed.contains("relationships")) {
                throw StageError(StageErrorKind::ExtractionFailed,
                                 "skeleton response lacks nodes/relationships keys");
            }
            auto join = [](const Json& arr) {
                std::string out;
                for (const auto& item : arr) {
                    if (!out.empty()) out += ", ";
                    out += item.get<std::string>();
                }
                return out;
            };

            llm::ChatResponse complete = call_step(
                "complete_schema" + suffix, "complete_schema",
                {{"database_name", domain},
                 {"taxonomies", taxonomies_text},
                 {"nodes_list", join(parsed.at("nodes"))},
                 {"relationships_list", join(parsed.at("relationships"))}},
                nullptr);

            // The schema block is fenced; models sometimes tag the fence, so
            // accept any fence that carries the section headers.
            std::string schema_text;
            bool found = false;
            for (const char* tag : {"", "schema", "text", "cypher"}) {
                try {
                    std::string body = llm::extract_fenced(complete.content, tag);
                    if (body.find("Node properties:") != std::string::npos) {
                        schema_text = body;
                        found = true;
                        break;
                    }
                } catch (const llm::GatewayError&) {
                }
            }
            if (!found) {
                throw StageError(StageErrorKind::ExtractionFailed,
                                 "complete-schema response has no fenced schema block");
            }

            schema::GraphSchema parsed_schema = schema::parse_schema(schema_text);
            parsed_schema.domain = domain;
            auto violations = schema::validate_schema(parsed_schema);
            if (!violations.empty()) {
                throw StageError(StageErrorKind::SchemaInvalid, violations.front().message);
            }

            llm::ChatResponse check = call_step("schema_check" + suffix, "schema_check",
                                                {{"database_name", domain},
                                                 {"Schema", schema::print_schema(parsed_schema)}},
                                                nullptr);
            if (llm::extract_verdict(check.content) != llm::JudgeVerdict::Correct) {
                throw StageError(StageErrorKind::SchemaInvalid,
                                 "model-based schema check returned INCORRECT");
            }
            return parsed_schema;
        } catch (const StageError& e) {
            last_error = e.what();
        } catch (const schema::ParseError& e) {
            last_error = fmt::format("schema text did not parse: {}", e.what());
        } catch (const llm::GatewayError& e) {
            if (e.kind() == llm::GatewayErrorKind::ScriptExhausted) throw;
            last_error = e.what();
        }
    }
    throw StageError(StageErrorKind::SchemaInvalid, last_error);
}

std::vector<std::pair<std::string, std::string>> Pipeline::generate_questions(
    const schema::GraphSchema& schema, size_t domain_index) {
    size_t k = std::min<size_t>(config_.taxonomies_per_call, registry_.size());
    auto taxonomies = taxonomy::sample_taxonomies(registry_, k, derived_seed(3, domain_index));
    std::string schema_text = schema::print_schema(schema);

    std::vector<std::pair<std::string, std::string>> kept;
    size_t quota = static_cast<size_t>(config_.questions_per_schema);
    bool any_parsed = false;

    for (const auto& taxonomy_entry : taxonomies) {
        if (kept.size() >= quota) break;
        llm::ChatResponse response = call_step(
            "question_gen", "question_gen",
            {{"Query Type",
              fmt::format("{}: {}", taxonomy_entry.title, taxonomy_entry.description)},
             {"Schema", schema_text}},
            nullptr);
        auto questions = parse_numbered_list(response.content);
        if (questions.empty()) continue;
        any_parsed = true;
        for (const auto& question : questions) {
            if (kept.size() >= quota) break;
            llm::ChatResponse verdict = call_step("question_vagueness_check",
                                                  "question_vagueness_check",
                                                  {{"Question", question}}, nullptr);
            auto token = llm::extract_final_answer_token(verdict.content);
            if (token && util::to_lower(*token) == "specific") {
                kept.emplace_back(taxonomy_entry.id, question);
            }
        }
    }
    if (!any_parsed) {
        throw StageError(StageErrorKind::NoQuestionsParsed,
                         "no numbered questions parsed from any generation call");
    }
    return kept;
}

judge::GroundTruth Pipeline::generate_ground_truth(const std::string& question,
                                                   const std::string& schema_text,
                                                   std::vector<llm::Transcript>* transcripts) {
    llm::ChatResponse response =
        call_step("ground_truth", "ground_truth",
                  {{"SCHEMA", schema_text}, {"USER_QUESTION", question}}, transcripts);
    Json parsed;
    try {
        parsed = llm::extract_json_block(response.content);
    } catch (const llm::GatewayError& e) {
        throw StageError(StageErrorKind::ExtractionFailed,
                         fmt::format("ground truth: {}", e.what()));
    }
    if (!parsed.is_object() || !parsed.contains("Answer")) {
        throw StageError(StageErrorKind::ExtractionFailed,
                         "ground truth response has no Answer key");
    }
    judge::GroundTruth gt;
    try {
        gt = judge::GroundTruth::from_value(parsed.at("Answer"));
    } catch (const judge::GroundTruthError& e) {
        throw StageError(StageErrorKind::ExtractionFailed, e.what());
    }
    // Advisory check: the generation prompt wants counts realistic and
    // generally below 50.
    for (const auto& record : gt.records) {
        for (const auto& [name, value] : record.items()) {
            if (!value.is_number_integer()) continue;
            std::string lower = util::to_lower(name);
            bool count_like = lower.find("count") != std::string::npos ||
                              lower.find("votes") != std::string::npos ||
                              lower.find("num") != std::string::npos ||
                              lower.find("followers") != std::string::npos ||
                              lower.find("times") != std::string::npos;
            if (count_like && value.get<int64_t>() > 50) {
                fmt::print(stderr, "warning: ground-truth field '{}' = {} exceeds 50\n", name,
                           value.get<int64_t>());
            }
        }
    }
    return gt;
}

bool Pipeline::population_sane(const QuestionRecord& question, graph::GraphSession& session,
                               const std::vector<std::string>& statements,
                               std::string& why) const {
    // Collect every property value in the store through the session surface
    // so the same check serves embedded and remote backends.
    std::vector<Json> all_values;
    size_t node_rows = 0;
    size_t uuid_nodes = 0;
    try {
        graph::ResultTable nodes = session.execute("MATCH (n) RETURN n");
        node_rows = nodes.rows.size();
        for (const auto& row : nodes.rows) {
            bool has_uuid = false;
            for (const auto& cell : row) {
                Json j = cell.to_json();
                if (j.is_array()) {
                    for (const auto& v : j) {
                        all_values.push_back(v);
                        if (v.is_string() && util::looks_like_uuid(v.get<std::string>())) {
                            has_uuid = true;
                        }
                    }
                } else {
                    all_values.push_back(j);
                }
            }
            if (has_uuid) ++uuid_nodes;
        }
        graph::ResultTable edges = session.execute("MATCH (a)-[r]->(b) RETURN r");
        for (const auto& row : edges.rows) {
            for (const auto& cell : row) {
                Json j = cell.to_json();
                if (j.is_array()) {
                    for (const auto& v : j) all_values.push_back(v);
                } else {
                    all_values.push_back(j);
                }
            }
        }
    } catch (const std::exception& e) {
        why = fmt::format("store inspection failed: {}", e.what());
        return false;
    }

    if (node_rows == 0) {
        why = "population created no nodes";
        return false;
    }
    if (uuid_nodes > static_cast<size_t>(config_.max_negative_points)) {
        why = fmt::format("{} negative entities exceed the limit of {}", uuid_nodes,
                          config_.max_negative_points);
        return false;
    }

    // The dummy answer must actually be in the database.
    std::vector<Json> normalized_store;
    normalized_store.reserve(all_values.size());
    for (const auto& v : all_values) normalized_store.push_back(judge::normalize_value(v));
    bool any_scalar = false;
    for (const auto& record : question.ground_truth.records) {
        for (const auto& [_, value] : record.items()) {
            if (value.is_null() || value.is_object() || value.is_array()) continue;
            any_scalar = true;
            Json needle = judge::normalize_value(value);
            for (const auto& candidate : normalized_store) {
                if (judge::normalized_equal(needle, candidate)) return true;
            }
        }
    }
    if (!any_scalar) return true;  // nothing checkable
    (void)statements;
    why = "no ground-truth value appears in the populated store";
    return false;
}

Population Pipeline::populate_database(const QuestionRecord& question,
                                       std::vector<llm::Transcript>* transcripts) {
    std::string schema_text = question.schema_text;
    std::string gt_text = question.ground_truth.to_json().dump(2);
    std::string last_error = "population failed";

    for (int attempt = 0; attempt < config_.max_population_attempts; ++attempt) {
        std::string suffix = attempt ? fmt::format(":retry:{}", attempt) : "";
        try {
            llm::ChatResponse plan = call_step("code_plan" + suffix, "code_plan",
                                               {{"SCHEMA", schema_text},
                                                {"USER_QUESTION", question.question},
                                                {"SYNTHETIC_ANSWER_RESPONSE", gt_text}},
                                               transcripts);
            llm::ChatResponse code = call_step("population_code" + suffix, "population_code",
                                               {{"SCHEMA", schema_text},
                                                {"USER_QUESTION", question.question},
                                                {"SYNTHETIC_ANSWER_RESPONSE", gt_text},
                                                {"CODE_PLAN", plan.content}},
                                               transcripts);

            std::vector<std::string> statements = extract_population_statements(code.content);

            auto session = backend_->open_session(question.id);
            graph::MutationSummary total;
            for (size_t i = 0; i < statements.size(); ++i) {
                graph::MutationSummary delta;
                try {
                    delta = session->apply({statements[i]});
                } catch (const graph::ExecError& e) {
                    throw StageError(StageErrorKind::ApplyFailed,
                                     fmt::format("statement {} failed: {}", i, e.cause()));
                }
                // A write statement with zero effect means a MATCH found
                // nothing (edges before nodes, mismatched ids); MERGE may
                // legitimately match instead of create.
                bool is_merge = util::starts_with_word(util::trim(statements[i]), "MERGE");
                if (delta.empty() && !is_merge) {
                    throw StageError(
                        StageErrorKind::ApplyFailed,
                        fmt::format("statement {} had no effect: {}", i, statements[i]));
                }
                total += delta;
            }

            std::string why;
            if (!population_sane(question, *session, statements, why)) {
                throw StageError(StageErrorKind::ApplyFailed, why);
            }
            return Population{std::move(session), std::move(statements)};
        } catch (const StageError& e) {
            last_error = e.what();
        } catch (const llm::GatewayError& e) {
            if (e.kind() == llm::GatewayErrorKind::ScriptExhausted) throw;
            last_error = e.what();
        }
    }
    throw StageError(StageErrorKind::PopulationGivenUp, last_error);
}

std::string Pipeline::generate_cypher(const QuestionRecord& question,
                                      std::vector<llm::Transcript>* transcripts) {
    std::map<std::string, std::string> bindings = {{"SCHEMA", question.schema_text},
                                                   {"USER QUESTION", question.question}};
    llm::ChatResponse s1 = call_step("cypher_step1", "cypher_step1", bindings, transcripts);
    bindings["STEP 0 RESPONSE"] = s1.content;
    llm::ChatResponse s2 = call_step("cypher_step2", "cypher_step2", bindings, transcripts);
    bindings["STEP 1 RESPONSE"] = s2.content;
    llm::ChatResponse s3 = call_step("cypher_step3", "cypher_step3", bindings, transcripts);
    bindings["STEP 2 RESPONSE"] = s3.content;
    llm::ChatResponse s4 = call_step("cypher_step4", "cypher_step4", bindings, transcripts);
    return llm::extract_fenced(s4.content, "cypher");
}

}  // namespace cypherforge::pipeline
