#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include <fmt/format.h>

#include "cypherforge/pipeline.hpp"

using namespace cypherforge;
using namespace cypherforge::pipeline;

namespace {

const char* kRetailSchema =
    "Node properties:\n"
    "Product {name: STRING, price: INTEGER}\n"
    "Customer {name: STRING}\n"
    "\n"
    "Relationship properties:\n"
    "BOUGHT {quantity: INTEGER}\n"
    "\n"
    "The relationships:\n"
    "(:Customer)-[:BOUGHT]->(:Product)\n";

PipelineConfig base_config() {
    PipelineConfig c;
    c.seed_domains = {"online retail"};
    c.target_domain_count = 1;
    c.questions_per_schema = 5;
    c.taxonomies_per_call = 3;
    c.max_cypher_attempts = 5;
    c.max_population_attempts = 2;
    c.seed = 7;
    c.provider_type = "mock";
    return c;
}

Pipeline make_pipeline(PipelineConfig config, Json script) {
    return Pipeline(std::move(config), std::make_shared<llm::MockProvider>(std::move(script)));
}

QuestionRecord retail_question(const std::string& question, const Json& gt_value) {
    QuestionRecord q;
    q.id = "q00000";
    q.domain = "online retail";
    q.schema = schema::parse_schema(kRetailSchema);
    q.schema_text = kRetailSchema;
    q.query_type = "simple-retrieval";
    q.question = question;
    q.ground_truth = judge::GroundTruth::from_value(gt_value);
    return q;
}

std::string good_population =
    "```cypher\n"
    "CREATE (c:Customer {name: 'Alice'});\n"
    "CREATE (p:Product {name: 'Laptop', price: 1200});\n"
    "MATCH (c:Customer {name: 'Alice'}) MATCH (p:Product {name: 'Laptop'})\n"
    "CREATE (c)-[:BOUGHT {quantity: 1}]->(p);\n"
    "```";

std::string good_cypher_response =
    "The plan says match buyers of Laptop.\n"
    "```cypher\n"
    "MATCH (c:Customer)-[:BOUGHT]->(p:Product {name: 'Laptop'}) RETURN c.name AS name\n"
    "```";

}  // namespace

TEST_CASE("expand_domains reaches the target in batched calls") {
    PipelineConfig config = base_config();
    config.seed_domains = {"retail", "banking"};
    config.target_domain_count = 10;
    Json script = {{"domain_expansion",
                    {R"(["logistics", "gaming", "healthcare"])",
                     R"(["education", "farming", "aviation"])",
                     R"(["insurance", "telecom", "hospitality"])"}}};
    Pipeline pipe = make_pipeline(config, script);
    DomainExpansion out = pipe.expand_domains();
    CHECK(out.domains.size() == 10);
    CHECK(!out.stalled);
    CHECK(out.domains[0] == "retail");
}

TEST_CASE("expand_domains with target equal to seeds makes zero calls") {
    PipelineConfig config = base_config();
    config.seed_domains = {"retail", "banking"};
    config.target_domain_count = 2;
    // No domain_expansion entries scripted: a call would throw.
    Pipeline pipe = make_pipeline(config, Json::object());
    DomainExpansion out = pipe.expand_domains();
    CHECK(out.domains == std::vector<std::string>{"retail", "banking"});
}

TEST_CASE("expand_domains dedups case-insensitively and flags stalls") {
    PipelineConfig config = base_config();
    config.seed_domains = {"e-commerce"};
    config.target_domain_count = 3;
    config.stall_limit = 2;
    Json script = {{"domain_expansion",
                    {R"(["E-Commerce", "Logistics"])", R"(["e-commerce"])",
                     R"(["E-COMMERCE"])"}}};
    Pipeline pipe = make_pipeline(config, script);
    DomainExpansion out = pipe.expand_domains();
    CHECK(out.domains.size() == 2);  // e-commerce + Logistics
    CHECK(out.stalled);
}

TEST_CASE("generate_schema drives skeleton, complete, and model check") {
    std::string complete_response = fmt::format(
        "Explanation: classic movie graph.\nSchema:\n```\n{}```\n",
        util::read_file(std::string(CYPHERFORGE_FIXTURE_DIR) + "/movies_schema.txt"));
    Json script = {
        {"skeleton_schema",
         {"Explanation: ok\n\nJson response: {\"nodes\": [\"Movie\", \"Person\"], "
          "\"relationships\": [\"ACTED_IN\", \"REVIEWED\", \"DIRECTED\", \"PRODUCED\", "
          "\"WROTE\", \"FOLLOWS\"]}"}},
        {"complete_schema", {complete_response}},
        {"schema_check", {"Coherent. FINAL_ANSWER: CORRECT"}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);

    std::vector<llm::Transcript> prompts;
    pipe.client().set_transcript_sink([&](const llm::Transcript& t) { prompts.push_back(t); });

    schema::GraphSchema s = pipe.generate_schema("movies", 0);
    CHECK(s.domain == "movies");
    CHECK(s.nodes.size() == 2);
    CHECK(s.relationships.size() == 6);

    // Skeleton prompt carries the sampled node/relationship counts verbatim.
    REQUIRE(!prompts.empty());
    const std::string& skeleton_prompt = prompts[0].request.messages[0].content;
    CHECK(skeleton_prompt.find("You need to design ") != std::string::npos);
    size_t pos = skeleton_prompt.find("You need to design ") + 19;
    CHECK(std::isdigit(static_cast<unsigned char>(skeleton_prompt[pos])));
    CHECK(skeleton_prompt.find("{num_nodes}") == std::string::npos);
    CHECK(skeleton_prompt.find("Database Name: movies") != std::string::npos);
}

TEST_CASE("generate_schema regenerates once then fails on dangling patterns") {
    std::string bad_schema =
        "Explanation: broken.\nSchema:\n```\nNode properties:\nPerson {name: STRING}\n\n"
        "Relationship properties:\n\nThe relationships:\n(:Person)-[:OWNS]->(:Car)\n```";
    Json script = {
        {"skeleton_schema",
         {"Json response: {\"nodes\": [\"Person\"], \"relationships\": [\"OWNS\"]}",
          "Json response: {\"nodes\": [\"Person\"], \"relationships\": [\"OWNS\"]}"}},
        {"complete_schema", {bad_schema, bad_schema}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    try {
        pipe.generate_schema("cars", 0);
        FAIL("expected SchemaInvalid");
    } catch (const StageError& e) {
        CHECK(e.kind() == StageErrorKind::SchemaInvalid);
    }
}

TEST_CASE("generate_schema rejects a schema the model check calls INCORRECT") {
    std::string complete_response = fmt::format(
        "Schema:\n```\n{}```\n",
        util::read_file(std::string(CYPHERFORGE_FIXTURE_DIR) + "/movies_schema.txt"));
    Json script = {
        {"skeleton_schema",
         {"Json response: {\"nodes\": [\"Movie\"], \"relationships\": []}",
          "Json response: {\"nodes\": [\"Movie\"], \"relationships\": []}"}},
        {"complete_schema", {complete_response, complete_response}},
        {"schema_check",
         {"Nonsense domain fit. FINAL_ANSWER: INCORRECT",
          "Still off. FINAL_ANSWER: INCORRECT"}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    CHECK_THROWS_AS(pipe.generate_schema("movies", 0), StageError);
}

TEST_CASE("generate_questions keeps specific questions tagged by taxonomy") {
    Json script = {
        {"question_gen",
         {"1. Which customers bought 'Laptop'?\n"
          "2. How many products cost more than 100?\n"
          "3. How many employees report to a specific manager?\n"
          "4. Which products did 'Bob' buy?\n"
          "5. List products bought with quantity 2.\n"
          "6. Which customers bought 'Desk'?\n"}},
        {"question_vagueness_check",
         {"FINAL_ANSWER: SPECIFIC", "FINAL_ANSWER: SPECIFIC", "FINAL_ANSWER: VAGUE",
          "FINAL_ANSWER: SPECIFIC", "FINAL_ANSWER: SPECIFIC", "FINAL_ANSWER: SPECIFIC"}},
    };
    PipelineConfig config = base_config();
    config.questions_per_schema = 5;
    Pipeline pipe = make_pipeline(config, script);
    auto questions = pipe.generate_questions(schema::parse_schema(kRetailSchema), 0);
    REQUIRE(questions.size() == 5);
    CHECK(questions[0].second == "Which customers bought 'Laptop'?");
    // The vague one was discarded.
    for (const auto& [taxonomy, question] : questions) {
        CHECK(question.find("specific manager") == std::string::npos);
        CHECK(!taxonomy.empty());
    }
}

TEST_CASE("generate_questions with no parseable list raises NoQuestionsParsed") {
    PipelineConfig config = base_config();
    config.taxonomies_per_call = 2;
    Json script = {{"question_gen", {"no numbering at all", "still prose"}}};
    Pipeline pipe = make_pipeline(config, script);
    try {
        pipe.generate_questions(schema::parse_schema(kRetailSchema), 0);
        FAIL("expected NoQuestionsParsed");
    } catch (const StageError& e) {
        CHECK(e.kind() == StageErrorKind::NoQuestionsParsed);
    }
}

TEST_CASE("generate_ground_truth parses the Disney fixture") {
    Json script = {{"ground_truth",
                    {"```json\n{\"Answer\": [{\"characterid\": \"b92\", \"characterName\": "
                     "\"Mini\", \"laughed\": 100, \"favorite_color\": \"Red\"}, "
                     "{\"characterid\": \"d989\", \"characterName\": \"Jimmi\", \"laughed\": "
                     "10, \"favorite_color\": \"Blue\"}]}\n```"}}};
    Pipeline pipe = make_pipeline(base_config(), script);
    judge::GroundTruth gt = pipe.generate_ground_truth("Which Disney character laughed?", "s");
    REQUIRE(gt.records.size() == 2);
    CHECK(gt.records[0].at("laughed") == 100);
    CHECK(gt.records[1].at("laughed") == 10);
}

TEST_CASE("generate_ground_truth parses the apples fixture") {
    Json script = {{"ground_truth",
                    {"```json\n{\"Answer\": {\"total_sales_usd\": 10000, \"employee\": "
                     "\"John Doe\"}}\n```"}}};
    Pipeline pipe = make_pipeline(base_config(), script);
    judge::GroundTruth gt = pipe.generate_ground_truth(
        "What is the total sales in USD for Apples in the California market and who made the "
        "most sales?",
        "s");
    REQUIRE(gt.records.size() == 1);
    CHECK(gt.records[0].at("total_sales_usd") == 10000);
    CHECK(gt.records[0].at("employee") == "John Doe");
}

TEST_CASE("generate_ground_truth without an Answer key fails extraction") {
    Json script = {{"ground_truth", {"```json\n{\"result\": 1}\n```"}}};
    Pipeline pipe = make_pipeline(base_config(), script);
    try {
        pipe.generate_ground_truth("q", "s");
        FAIL("expected ExtractionFailed");
    } catch (const StageError& e) {
        CHECK(e.kind() == StageErrorKind::ExtractionFailed);
    }
}

TEST_CASE("extract_population_statements handles cypher fences") {
    auto statements = extract_population_statements(good_population);
    REQUIRE(statements.size() == 3);
    CHECK(statements[0].rfind("CREATE (c:Customer", 0) == 0);
}

TEST_CASE("extract_population_statements lifts literals from python fences") {
    std::string response =
        "Here is the function:\n"
        "```python\n"
        "import uuid\n"
        "def create_data():\n"
        "    negative_id = str(uuid.uuid4())\n"
        "    queries = []\n"
        "    queries.append(\"CREATE (c:Customer {name: 'Alice'})\")\n"
        "    queries.append('CREATE (p:Product {name: \\'Laptop\\', price: 1200})')\n"
        "    queries.append(\"MATCH (c:Customer {name: 'Alice'}) \"\n"
        "                   \"MATCH (p:Product {name: 'Laptop'}) \"\n"
        "                   \"CREATE (c)-[:BOUGHT]->(p)\")\n"
        "    return queries\n"
        "```\n";
    auto statements = extract_population_statements(response);
    // The two-part literal splits into MATCH-only and CREATE-only pieces;
    // the lifter keeps statement-shaped literals in order.
    REQUIRE(statements.size() >= 3);
    CHECK(statements[0] == "CREATE (c:Customer {name: 'Alice'})");
    CHECK(statements[1] == "CREATE (p:Product {name: 'Laptop', price: 1200})");
}

TEST_CASE("populate_database applies the fruit/juice block") {
    Json script = {
        {"code_plan", {"Plan: create fruit, juice, and the JUICED edge."}},
        {"population_code",
         {"```cypher\n"
          "CREATE (fruit:Fruit {id: 'fruit1', name: 'apple'});\n"
          "CREATE (juice:Juice {id: 'juice1', name: 'apple juice'});\n"
          "MATCH (fruit:Fruit {id: 'fruit1'})\nMATCH (juice:Juice {id: 'juice1'})\n"
          "CREATE (fruit)-[:JUICED]->(juice);\n"
          "```"}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    QuestionRecord q = retail_question("Which juice comes from apples?",
                                       Json::parse(R"({"name": "apple juice"})"));
    Population population = pipe.populate_database(q);
    REQUIRE(population.statements.size() == 3);
    REQUIRE(population.session->store());
    CHECK(population.session->store()->node_count() == 2);
    CHECK(population.session->store()->edge_count() == 1);
}

TEST_CASE("populations with too many uuid-tagged negatives are regenerated") {
    std::string overloaded = "```cypher\n";
    for (int i = 0; i < 7; ++i) {
        overloaded += fmt::format(
            "CREATE (n:Customer {{id: '550e8400-e29b-41d4-a716-44665544{:04}', name: 'Neg'}});\n",
            i);
    }
    overloaded += "CREATE (c:Customer {name: 'Alice'});\n```";
    Json script = {
        {"code_plan", {"plan", "plan"}},
        {"population_code", {overloaded, overloaded}},
    };
    PipelineConfig config = base_config();
    config.max_population_attempts = 2;
    Pipeline pipe = make_pipeline(config, script);
    QuestionRecord q =
        retail_question("Which customers exist?", Json::parse(R"({"name": "Alice"})"));
    try {
        pipe.populate_database(q);
        FAIL("expected PopulationGivenUp");
    } catch (const StageError& e) {
        CHECK(e.kind() == StageErrorKind::PopulationGivenUp);
        CHECK(std::string(e.what()).find("negative entities") != std::string::npos);
    }
}

TEST_CASE("an edge statement that matches nothing triggers regeneration") {
    std::string broken =
        "```cypher\n"
        "MATCH (c:Customer {name: 'Alice'}) MATCH (p:Product {name: 'Laptop'}) "
        "CREATE (c)-[:BOUGHT]->(p);\n"
        "CREATE (c:Customer {name: 'Alice'});\n"
        "CREATE (p:Product {name: 'Laptop'});\n"
        "```";
    Json script = {
        {"code_plan", {"plan", "plan"}},
        {"population_code", {broken, good_population}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    QuestionRecord q =
        retail_question("Who bought 'Laptop'?", Json::parse(R"({"name": "Alice"})"));
    Population population = pipe.populate_database(q);
    CHECK(population.session->store()->edge_count() == 1);
}

TEST_CASE("populate_database requires a ground-truth value in the store") {
    Json script = {
        {"code_plan", {"plan", "plan"}},
        {"population_code", {good_population, good_population}},
    };
    PipelineConfig config = base_config();
    config.max_population_attempts = 2;
    Pipeline pipe = make_pipeline(config, script);
    QuestionRecord q =
        retail_question("Who bought 'Laptop'?", Json::parse(R"({"name": "Zelda"})"));
    try {
        pipe.populate_database(q);
        FAIL("expected PopulationGivenUp");
    } catch (const StageError& e) {
        CHECK(std::string(e.what()).find("ground-truth value") != std::string::npos);
    }
}

TEST_CASE("generate_cypher chains the four steps and extracts the fence") {
    Json script = {
        {"cypher_step1", {"analysis"}},
        {"cypher_step2", {"important nodes"}},
        {"cypher_step3", {"plan"}},
        {"cypher_step4", {good_cypher_response}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    QuestionRecord q =
        retail_question("Who bought 'Laptop'?", Json::parse(R"({"name": "Alice"})"));
    std::vector<llm::Transcript> transcripts;
    std::string cypher = pipe.generate_cypher(q, &transcripts);
    CHECK(cypher ==
          "MATCH (c:Customer)-[:BOUGHT]->(p:Product {name: 'Laptop'}) RETURN c.name AS name");
    CHECK(transcripts.size() == 4);
    // Step 2 receives step 1's response.
    CHECK(transcripts[1].request.messages[0].content.find("analysis") != std::string::npos);
}

TEST_CASE("validate_and_retain succeeds on attempt 2 after an execution failure") {
    Json script = {
        {"code_plan", {"plan"}},
        {"population_code", {good_population}},
        {"cypher_step1", {"analysis"}},
        {"cypher_step2", {"nodes"}},
        {"cypher_step3", {"plan"}},
        {"cypher_step4",
         {"```cypher\nMATCH (c:Customer RETURN c\n```",  // malformed on purpose
          good_cypher_response}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    QuestionRecord q =
        retail_question("Who bought 'Laptop'?", Json::parse(R"({"name": "Alice"})"));
    Population population = pipe.populate_database(q);
    QuestionOutcome outcome = pipe.validate_and_retain(q, std::move(population));
    REQUIRE(outcome.record.has_value());
    CHECK(outcome.record->attempts == 2);
    CHECK(outcome.record->verdict.outcome == judge::Outcome::Correct);
    CHECK(outcome.record->execution_result.rows.size() == 1);
}

TEST_CASE("five incorrect attempts discard the question with attempts=5") {
    std::string wrong = "```cypher\nMATCH (c:Customer) RETURN 'nobody' AS name LIMIT 1\n```";
    Json script = {
        {"code_plan", {"plan"}},
        {"population_code", {good_population}},
        {"cypher_step1", {"analysis"}},
        {"cypher_step2", {"nodes"}},
        {"cypher_step3", {"plan"}},
        {"cypher_step4", {wrong, wrong, wrong, wrong, wrong}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    QuestionRecord q =
        retail_question("Who bought 'Laptop'?", Json::parse(R"({"name": "Alice"})"));
    Population population = pipe.populate_database(q);
    QuestionOutcome outcome = pipe.validate_and_retain(q, std::move(population));
    REQUIRE(outcome.discarded.has_value());
    CHECK(outcome.discarded->reason == DiscardReason::CypherAttemptsExhausted);
    CHECK(outcome.discarded->attempts == 5);
}

TEST_CASE("a missing fence counts as a failed attempt") {
    Json script = {
        {"code_plan", {"plan"}},
        {"population_code", {good_population}},
        {"cypher_step1", {"analysis"}},
        {"cypher_step2", {"nodes"}},
        {"cypher_step3", {"plan"}},
        {"cypher_step4", {"no fence at all", good_cypher_response}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    QuestionRecord q =
        retail_question("Who bought 'Laptop'?", Json::parse(R"({"name": "Alice"})"));
    Population population = pipe.populate_database(q);
    QuestionOutcome outcome = pipe.validate_and_retain(q, std::move(population));
    REQUIRE(outcome.record.has_value());
    CHECK(outcome.record->attempts == 2);
}

TEST_CASE("retry prompts carry the failure as an appended system note") {
    Json script = {
        {"code_plan", {"plan"}},
        {"population_code", {good_population}},
        {"cypher_step1", {"analysis"}},
        {"cypher_step2", {"nodes"}},
        {"cypher_step3", {"plan"}},
        {"cypher_step4",
         {"```cypher\nMATCH (c:Customer) RETURN 'nobody' AS name LIMIT 1\n```",
          good_cypher_response}},
    };
    Pipeline pipe = make_pipeline(base_config(), script);
    std::vector<llm::Transcript> log;
    pipe.client().set_transcript_sink([&](const llm::Transcript& t) { log.push_back(t); });

    QuestionRecord q =
        retail_question("Who bought 'Laptop'?", Json::parse(R"({"name": "Alice"})"));
    Population population = pipe.populate_database(q);
    QuestionOutcome outcome = pipe.validate_and_retain(q, std::move(population));
    REQUIRE(outcome.record.has_value());

    const llm::Transcript& retry = log.back();
    CHECK(retry.step_id == "cypher_step4:retry:1");
    REQUIRE(retry.request.messages.size() == 2);
    CHECK(retry.request.messages[1].role == "system");
    CHECK(retry.request.messages[1].content.find("failed validation") != std::string::npos);
}

TEST_CASE("domain expansion runs hot, other steps near-greedy by default") {
    PipelineConfig config = base_config();
    CHECK(config.temperature_for("domain_expansion") == doctest::Approx(0.8));
    CHECK(config.temperature_for("cypher_step4") == doctest::Approx(0.2));
    config.step_temperatures["cypher_step4"] = 0.5;
    CHECK(config.temperature_for("cypher_step4") == doctest::Approx(0.5));

    Json script = {{"domain_expansion", {R"(["x"])"}}};
    PipelineConfig expand_config = base_config();
    expand_config.seed_domains = {"a"};
    expand_config.target_domain_count = 2;
    Pipeline pipe = make_pipeline(expand_config, script);
    std::vector<llm::Transcript> log;
    pipe.client().set_transcript_sink([&](const llm::Transcript& t) { log.push_back(t); });
    pipe.expand_domains();
    REQUIRE(!log.empty());
    CHECK(log[0].request.temperature == doctest::Approx(0.8));
}

TEST_CASE("per-step model bindings reach the request") {
    PipelineConfig config = base_config();
    config.default_model = "general-model";
    config.step_models["ground_truth"] = "special-model";
    Json script = {{"ground_truth", {"```json\n{\"Answer\": {\"v\": 1}}\n```"}}};
    Pipeline pipe = make_pipeline(config, script);
    std::vector<llm::Transcript> log;
    pipe.client().set_transcript_sink([&](const llm::Transcript& t) { log.push_back(t); });
    pipe.generate_ground_truth("q", "s");
    REQUIRE(log.size() == 1);
    CHECK(log[0].request.model_id == "special-model");
}

namespace {

// Stateless provider for worker-pool runs: answers are derived from the
// prompt text, so any completion order yields the same per-question data.
class SyntheticProvider final : public llm::Provider {
public:
    llm::ChatResponse complete(const std::string& step_id,
                               const llm::ChatRequest& request) override {
        std::this_thread::sleep_for(std::chrono::microseconds(hash_jitter(request)));
        std::string base = step_id.substr(0, step_id.find(":retry:"));
        const std::string& prompt = request.messages[0].content;
        llm::ChatResponse r;
        if (base == "skeleton_schema") {
            r.content = "Json response: {\"nodes\": [\"Customer\", \"Product\"], "
                        "\"relationships\": [\"BOUGHT\"]}";
        } else if (base == "complete_schema") {
            r.content = std::string("Schema:\n```\n") + kRetailSchema + "```\n";
        } else if (base == "schema_check") {
            r.content = "FINAL_ANSWER: CORRECT";
        } else if (base == "question_gen") {
            std::string list;
            for (int i = 0; i < 8; ++i) {
                list += fmt::format("{}. Which customers bought 'P{}'?\n", i + 1, i);
            }
            r.content = list;
        } else if (base == "question_vagueness_check") {
            r.content = "FINAL_ANSWER: SPECIFIC";
        } else if (base == "ground_truth") {
            r.content = fmt::format("```json\n{{\"Answer\": [{{\"name\": \"Buyer{}\"}}]}}\n```",
                                    product_of(prompt));
        } else if (base == "code_plan") {
            r.content = "plan";
        } else if (base == "population_code") {
            std::string p = product_of(prompt);
            r.content = fmt::format(
                "```cypher\n"
                "CREATE (c:Customer {{name: 'Buyer{}'}});\n"
                "CREATE (p:Product {{name: 'P{}', price: 10}});\n"
                "MATCH (c:Customer {{name: 'Buyer{}'}}) MATCH (p:Product {{name: 'P{}'}}) "
                "CREATE (c)-[:BOUGHT {{quantity: 1}}]->(p);\n```",
                p, p, p, p);
        } else if (base == "cypher_step1" || base == "cypher_step2" || base == "cypher_step3") {
            r.content = "reasoning";
        } else if (base == "cypher_step4") {
            r.content = fmt::format(
                "```cypher\nMATCH (c:Customer)-[:BOUGHT]->(p:Product {{name: 'P{}'}}) "
                "RETURN c.name AS name\n```",
                product_of(prompt));
        } else {
            r.content = "FINAL_ANSWER: CORRECT";
        }
        return r;
    }

private:
    static std::string product_of(const std::string& prompt) {
        size_t pos = prompt.find("bought 'P");
        if (pos == std::string::npos) return "?";
        size_t start = pos + 9;
        size_t end = prompt.find('\'', start);
        return prompt.substr(start, end - start);
    }
    static int hash_jitter(const llm::ChatRequest& request) {
        return static_cast<int>(std::hash<std::string>{}(request.messages[0].content) % 3000);
    }
};

}  // namespace

TEST_CASE("worker pool emits records ordered by id regardless of completion order") {
    PipelineConfig config = base_config();
    config.questions_per_schema = 8;
    config.taxonomies_per_call = 1;
    config.workers = 4;
    config.provider_type = "http";  // anything non-mock; the provider is injected
    Pipeline pipe(config, std::make_shared<SyntheticProvider>());

    auto out = std::filesystem::temp_directory_path() / "cypherforge_parallel.jsonl";
    RunReport report = pipe.run(out.string());
    CHECK(report.questions_attempted == 8);
    CHECK(report.records_emitted == 8);

    auto rows = util::read_jsonl(out.string());
    REQUIRE(rows.size() == 8);
    std::string previous;
    for (const auto& row : rows) {
        std::string id = row.at("id").get<std::string>();
        CHECK(id > previous);
        previous = id;
        CHECK(row.at("verdict").at("outcome") == "CORRECT");
    }
}

TEST_CASE("include_transcripts embeds the per-question call trail") {
    PipelineConfig config = base_config();
    config.questions_per_schema = 2;
    config.taxonomies_per_call = 1;
    config.include_transcripts = true;
    config.provider_type = "http";
    Pipeline pipe(config, std::make_shared<SyntheticProvider>());

    auto out = std::filesystem::temp_directory_path() / "cypherforge_transcripts.jsonl";
    RunReport report = pipe.run(out.string());
    REQUIRE(report.records_emitted == 2);
    auto rows = util::read_jsonl(out.string());
    REQUIRE(rows[0].contains("transcripts"));
    // ground_truth + code_plan + population_code + 4 cypher steps
    CHECK(rows[0].at("transcripts").size() == 7);
    CHECK(rows[0].at("transcripts")[0].at("step_id") == "ground_truth");
}

TEST_CASE("config strings expand environment references") {
    setenv("CYPHERFORGE_TEST_SECRET", "sk-123", 1);
    Json j = {
        {"seed_domains", {"retail"}},
        {"provider", {{"type", "http"},
                      {"base_url", "https://api.example.com"},
                      {"api_key", "${CYPHERFORGE_TEST_SECRET}"}}},
    };
    PipelineConfig config = PipelineConfig::from_json(j);
    CHECK(config.http.api_key == "sk-123");
}
