#include <doctest.h>

#include <filesystem>

#include <fmt/format.h>

#include "cypherforge/judge.hpp"
#include "cypherforge/pipeline.hpp"
#include "process.hpp"

using namespace cypherforge;
using namespace cypherforge::testsupport;

namespace {

namespace fs = std::filesystem;

std::string temp_dir() {
    auto dir = fs::temp_directory_path() / "cypherforge_cli_test";
    fs::create_directories(dir);
    return dir.string();
}

std::string demo_config() { return fixture_dir() + "/demo/config.json"; }
std::string demo_script() { return fixture_dir() + "/demo/mock_script.json"; }

ProcessResult generate(const std::string& out, const std::string& extra = "") {
    return run_command(fmt::format("{} generate --config {} --mock-script {} --out {} {}",
                                   cli_path(), demo_config(), demo_script(), out, extra));
}

}  // namespace

TEST_CASE("generate runs the scripted demo end to end") {
    std::string out = temp_dir() + "/demo.jsonl";
    ProcessResult result = generate(out);
    CAPTURE(result.output);
    CHECK(result.exit_code == 0);

    auto rows = util::read_jsonl(out);
    CHECK(rows.size() == 9);  // 10 questions, 1 scripted to exhaust retries
    for (const auto& row : rows) {
        CHECK(row.at("verdict").at("outcome") == "CORRECT");
        CHECK(row.at("attempts").get<int>() >= 1);
        CHECK(row.at("attempts").get<int>() <= 5);
    }

    // Report arithmetic: emitted + discarded = attempted.
    Json report = Json::parse(util::read_file(out + ".report.json"));
    CHECK(report.at("questions_attempted") == 10);
    CHECK(report.at("records_emitted") == 9);
    CHECK(report.at("discarded_total") == 1);
    CHECK(report.at("discarded").at("cypher_attempts_exhausted") == 1);

    // One scripted question needed a second attempt.
    bool saw_retry = false;
    for (const auto& row : rows) {
        if (row.at("attempts") == 2) saw_retry = true;
    }
    CHECK(saw_retry);

    // The transcript log covers every completed call.
    CHECK(fs::exists(out + ".transcripts.jsonl"));
    CHECK(!util::read_jsonl(out + ".transcripts.jsonl").empty());
}

TEST_CASE("generate is byte-identical across runs with the same seed") {
    std::string out1 = temp_dir() + "/run1.jsonl";
    std::string out2 = temp_dir() + "/run2.jsonl";
    CHECK(generate(out1, "--seed 7").exit_code == 0);
    CHECK(generate(out2, "--seed 7").exit_code == 0);
    CHECK(util::read_file(out1) == util::read_file(out2));
    CHECK(util::read_file(out1 + ".transcripts.jsonl") ==
          util::read_file(out2 + ".transcripts.jsonl"));
}

TEST_CASE("every emitted record replays to a CORRECT structural verdict") {
    std::string out = temp_dir() + "/replay.jsonl";
    REQUIRE(generate(out).exit_code == 0);
    for (const auto& row : util::read_jsonl(out)) {
        pipeline::DatasetRecord record = pipeline::DatasetRecord::from_json(row);
        graph::GraphStore store = graph::fresh_store();
        graph::apply_text(store, record.population_statements);
        graph::ResultTable table = graph::execute(store, graph::parse_cypher(record.cypher));
        judge::Verdict verdict =
            judge::structural_match(record.question, record.ground_truth, table);
        CAPTURE(record.id);
        CHECK(verdict.outcome == judge::Outcome::Correct);
        CHECK(table == record.execution_result);
    }
}

TEST_CASE("generate with a bad config exits 1") {
    std::string bad = temp_dir() + "/bad_config.json";
    util::write_file(bad, R"({"seed_domains": []})");
    ProcessResult result = run_command(
        fmt::format("{} generate --config {} --out {}/x.jsonl", cli_path(), bad, temp_dir()));
    CHECK(result.exit_code == 1);
    CHECK(result.output.find("fatal") != std::string::npos);
}

TEST_CASE("eval scores identity predictions at 1.000") {
    ProcessResult result = run_command(fmt::format(
        "{} eval --dataset {}/eval/dataset.jsonl --predictions {}/eval/predictions_identity.json",
        cli_path(), fixture_dir(), fixture_dir()));
    CAPTURE(result.output);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("accuracy 1.000 (20/20 graded)") != std::string::npos);
}

TEST_CASE("eval scores the 3-corrupted predictions at 0.850") {
    ProcessResult result = run_command(fmt::format(
        "{} eval --dataset {}/eval/dataset.jsonl --predictions {}/eval/predictions_3bad.json",
        cli_path(), fixture_dir(), fixture_dir()));
    CAPTURE(result.output);
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("accuracy 0.850 (17/20 graded)") != std::string::npos);
    // Per-taxonomy breakdown is printed.
    CHECK(result.output.find("simple-retrieval") != std::string::npos);
    CHECK(result.output.find("pathfinding") != std::string::npos);
}

TEST_CASE("eval with empty predictions scores 0 over graded tasks") {
    ProcessResult result = run_command(fmt::format(
        "{} eval --dataset {}/eval/dataset.jsonl --predictions {}/eval/predictions_empty.json",
        cli_path(), fixture_dir(), fixture_dir()));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("accuracy 0.000 (0/20 graded)") != std::string::npos);
}

TEST_CASE("the eval fixture itself replays cleanly") {
    for (const auto& row : util::read_jsonl(fixture_dir() + "/eval/dataset.jsonl")) {
        pipeline::DatasetRecord record = pipeline::DatasetRecord::from_json(row);
        graph::GraphStore store = graph::fresh_store();
        graph::apply_text(store, record.population_statements);
        graph::ResultTable table = graph::execute(store, graph::parse_cypher(record.cypher));
        CAPTURE(record.id);
        CHECK(judge::structural_match(record.question, record.ground_truth, table).outcome ==
              judge::Outcome::Correct);
        CHECK(table == record.execution_result);
    }
}

TEST_CASE("spider-convert writes the converted schema and tasks") {
    std::string schema_out = temp_dir() + "/spider_schema.txt";
    std::string tasks_out = temp_dir() + "/spider_tasks.jsonl";
    ProcessResult result = run_command(fmt::format(
        "{} spider-convert --schema {}/spider/schema.json --data {}/spider/data.json "
        "--questions {}/spider/questions.json --out {} --schema-out {}",
        cli_path(), fixture_dir(), fixture_dir(), fixture_dir(), tasks_out, schema_out));
    CAPTURE(result.output);
    CHECK(result.exit_code == 0);

    std::string golden =
        util::read_file(fixture_dir() + "/spider/converted_schema_golden.txt");
    CHECK(util::read_file(schema_out) == golden);

    auto tasks = util::read_jsonl(tasks_out);
    CHECK(tasks.size() == 5);
    CHECK(tasks[0].at("schema_text").get<std::string>().find("member") != std::string::npos);
}

TEST_CASE("spider-convert with a missing file exits 1") {
    ProcessResult result = run_command(fmt::format(
        "{} spider-convert --schema {}/spider/nope.json --schema-out {}/x.txt", cli_path(),
        fixture_dir(), temp_dir()));
    CHECK(result.exit_code == 1);
}

TEST_CASE("judge subcommand prints a verdict") {
    std::string gt = temp_dir() + "/gt.json";
    std::string res = temp_dir() + "/result.json";
    util::write_file(gt, R"({"Answer": [{"name": "Alice"}]})");
    util::write_file(res, R"({"columns": ["name"], "rows": [["Alice"]]})");
    ProcessResult result = run_command(fmt::format(
        "{} judge --question 'who?' --ground-truth {} --result {}", cli_path(), gt, res));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("\"outcome\": \"CORRECT\"") != std::string::npos);

    util::write_file(res, R"({"columns": ["name"], "rows": [["Alice"], ["Mallory"]]})");
    result = run_command(fmt::format(
        "{} judge --question 'who?' --ground-truth {} --result {}", cli_path(), gt, res));
    CHECK(result.output.find("\"outcome\": \"INCORRECT\"") != std::string::npos);
}

TEST_CASE("stats reports counts and verifies split disjointness") {
    ProcessResult result = run_command(fmt::format("{} stats --dataset {}/stats/train_sample.jsonl",
                                                   cli_path(), fixture_dir()));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("records 50") != std::string::npos);
    CHECK(result.output.find("distinct_schemas 4") != std::string::npos);

    result = run_command(fmt::format(
        "{} stats --dataset {}/stats/train_sample.jsonl --compare {}/stats/test_sample.jsonl",
        cli_path(), fixture_dir(), fixture_dir()));
    CHECK(result.exit_code == 0);
    CHECK(result.output.find("schema_split_disjoint: PASS") != std::string::npos);

    result = run_command(fmt::format(
        "{} stats --dataset {}/stats/train_sample.jsonl --compare {}/stats/overlap_sample.jsonl",
        cli_path(), fixture_dir(), fixture_dir()));
    CHECK(result.exit_code == 3);
    CHECK(result.output.find("schema_split_disjoint: FAIL") != std::string::npos);
}

TEST_CASE("stats on a missing dataset exits 1") {
    ProcessResult result =
        run_command(fmt::format("{} stats --dataset /nonexistent.jsonl", cli_path()));
    CHECK(result.exit_code == 1);
}

TEST_CASE("generate exits 2 when every question is discarded") {
    std::string dir = temp_dir();
    // One domain, one question, five failing attempts: zero records.
    Json script = {
        {"skeleton_schema",
         {"Json response: {\"nodes\": [\"Customer\", \"Product\"], \"relationships\": "
          "[\"BOUGHT\"]}"}},
        {"complete_schema",
         {"Schema:\n```\nNode properties:\nCustomer {name: STRING}\nProduct {name: STRING, "
          "price: INTEGER}\n\nRelationship properties:\nBOUGHT {quantity: INTEGER}\n\n"
          "The relationships:\n(:Customer)-[:BOUGHT]->(:Product)\n```\n"}},
        {"schema_check", {"FINAL_ANSWER: CORRECT"}},
        {"question_gen", {"1. Which customers bought 'Laptop'?\n"}},
        {"question_vagueness_check", {"FINAL_ANSWER: SPECIFIC"}},
        {"ground_truth", {"```json\n{\"Answer\": [{\"name\": \"Alice\"}]}\n```"}},
        {"code_plan", {"plan"}},
        {"population_code",
         {"```cypher\nCREATE (c:Customer {name: 'Alice'});\n"
          "CREATE (p:Product {name: 'Laptop', price: 1});\n"
          "MATCH (c:Customer {name: 'Alice'}) MATCH (p:Product {name: 'Laptop'}) "
          "CREATE (c)-[:BOUGHT {quantity: 1}]->(p);\n```"}},
        {"cypher_step1", {"a"}},
        {"cypher_step2", {"b"}},
        {"cypher_step3", {"c"}},
        {"cypher_step4", Json::array({"no fence", "no fence", "no fence", "no fence",
                                      "no fence"})},
    };
    util::write_file(dir + "/empty_script.json", Json(script).dump());
    Json config = {
        {"seed_domains", {"online retail"}}, {"target_domain_count", 1},
        {"questions_per_schema", 1},         {"taxonomies_per_call", 1},
        {"provider", {{"type", "mock"}, {"mock_script", dir + "/empty_script.json"}}},
        {"backend", {{"type", "embedded"}}},
    };
    util::write_file(dir + "/empty_config.json", config.dump());

    ProcessResult result = run_command(fmt::format("{} generate --config {} --out {}/empty.jsonl",
                                                   cli_path(), dir + "/empty_config.json", dir));
    CAPTURE(result.output);
    CHECK(result.exit_code == 2);
    CHECK(util::read_jsonl(dir + "/empty.jsonl").empty());
}

TEST_CASE("the config path can come from CYPHERFORGE_CONFIG") {
    std::string out = temp_dir() + "/env_config.jsonl";
    ProcessResult result = run_command(fmt::format(
        "CYPHERFORGE_CONFIG={} {} generate --mock-script {} --out {}", demo_config(),
        cli_path(), demo_script(), out));
    CAPTURE(result.output);
    CHECK(result.exit_code == 0);
    CHECK(util::read_jsonl(out).size() == 9);
}
