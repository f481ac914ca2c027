#include <cstdlib>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "cypherforge/graph/backend.hpp"
#include "cypherforge/pipeline.hpp"
#include "cypherforge/spider.hpp"

using namespace cypherforge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitEmpty = 2;
constexpr int kExitCheckFailed = 3;

struct EvalTask {
    std::string id;
    std::string question;
    std::string query_type;
    std::vector<std::string> population_statements;
    judge::GroundTruth ground_truth;
    bool graded = true;
};

EvalTask eval_task_from_json(const Json& j) {
    EvalTask t;
    t.id = j.at("id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    t.query_type = j.value("query_type", "unknown");
    t.population_statements = j.at("population_statements").get<std::vector<std::string>>();
    if (j.contains("ground_truth")) {
        t.ground_truth = judge::GroundTruth::from_value(j.at("ground_truth"));
    } else if (j.contains("gold_result")) {
        t.ground_truth = judge::GroundTruth::from_value(j.at("gold_result"));
        t.graded = j.value("graded", true);
    } else {
        t.graded = false;
    }
    return t;
}

int cmd_generate(const std::string& config_path, const std::string& mock_script,
                 const std::string& out_path, std::optional<int64_t> seed,
                 std::optional<int> workers) {
    pipeline::PipelineConfig config = pipeline::PipelineConfig::from_file(config_path);
    if (!mock_script.empty()) {
        config.provider_type = "mock";
        config.mock_script_path = mock_script;
    }
    if (seed) config.seed = static_cast<uint64_t>(*seed);
    if (workers) config.workers = *workers;
    config.validate();

    pipeline::Pipeline pipe(config);
    pipeline::RunReport report = pipe.run(out_path);
    std::cout << report.summary();
    return report.records_emitted > 0 ? kExitOk : kExitEmpty;
}

int cmd_eval(const std::string& dataset_path, const std::string& predictions_path,
             const std::string& judge_mode, const std::string& backend_type,
             const std::string& mock_script, const std::string& provider_url,
             const std::string& remote_url) {
    auto rows = util::read_jsonl(dataset_path);
    Json predictions = Json::parse(util::read_file(predictions_path));

    std::unique_ptr<graph::GraphBackend> backend;
    if (backend_type == "remote") {
        graph::RemoteConfig remote;
        remote.base_url = remote_url;
        backend = graph::make_remote_backend(remote);
    } else {
        backend = graph::make_embedded_backend();
    }

    std::unique_ptr<llm::Client> client;
    if (judge_mode == "model") {
        std::shared_ptr<llm::Provider> provider;
        if (!mock_script.empty()) {
            provider = llm::MockProvider::from_file(mock_script);
        } else {
            llm::HttpProviderConfig http;
            http.base_url = provider_url;
            if (const char* key = std::getenv("CYPHERFORGE_API_KEY")) http.api_key = key;
            provider = std::make_shared<llm::HttpProvider>(http);
        }
        client = std::make_unique<llm::Client>(provider);
    }

    size_t graded = 0;
    size_t correct = 0;
    std::map<std::string, std::pair<size_t, size_t>> by_taxonomy;  // correct, total
    for (const auto& row : rows) {
        EvalTask task = eval_task_from_json(row);
        if (!task.graded) continue;
        ++graded;
        auto& bucket = by_taxonomy[task.query_type];
        ++bucket.second;

        if (!predictions.contains(task.id)) continue;
        std::string cypher = predictions.at(task.id).get<std::string>();

        int score = 0;
        try {
            auto session = backend->open_session(task.id);
            session->apply(task.population_statements);
            graph::ResultTable result = session->execute(cypher);
            judge::Verdict verdict =
                judge_mode == "model"
                    ? judge::model_judge(*client, llm::TemplateRegistry::builtin(),
                                         task.question, task.ground_truth, result)
                    : judge::structural_match(task.question, task.ground_truth, result);
            score = verdict.score;
        } catch (const std::exception& e) {
            fmt::print(stderr, "task {}: {}\n", task.id, e.what());
        }
        correct += static_cast<size_t>(score);
        bucket.first += static_cast<size_t>(score);
    }

    double accuracy = graded ? static_cast<double>(correct) / static_cast<double>(graded) : 0.0;
    std::cout << fmt::format("accuracy {:.3f} ({}/{} graded)\n", accuracy, correct, graded);
    for (const auto& [taxonomy, bucket] : by_taxonomy) {
        std::cout << fmt::format("  {} {:.3f} ({}/{})\n", taxonomy,
                                 bucket.second ? static_cast<double>(bucket.first) /
                                                     static_cast<double>(bucket.second)
                                               : 0.0,
                                 bucket.first, bucket.second);
    }
    return kExitOk;
}

int cmd_spider_convert(const std::string& schema_path, const std::string& data_path,
                       const std::string& questions_path, const std::string& out_path,
                       const std::string& schema_out) {
    if (!schema_out.empty()) {
        spider::RelationalSchema rel =
            spider::RelationalSchema::from_json(Json::parse(util::read_file(schema_path)));
        util::write_file(schema_out, schema::print_schema(spider::convert_schema(rel)));
    }
    if (!out_path.empty()) {
        if (questions_path.empty()) {
            fmt::print(stderr, "spider-convert: --questions is required with --out\n");
            return kExitFatal;
        }
        auto tasks = spider::load_tasks(schema_path, data_path, questions_path);
        std::string lines;
        for (const auto& task : tasks) lines += task.to_json().dump() + "\n";
        util::write_file(out_path, lines);
        std::cout << fmt::format("wrote {} tasks\n", tasks.size());
    }
    return kExitOk;
}

int cmd_judge(const std::string& question, const std::string& ground_truth_path,
              const std::string& result_path, const std::string& judge_mode,
              const std::string& mock_script) {
    Json gt_value = Json::parse(util::read_file(ground_truth_path));
    if (gt_value.is_object() && gt_value.size() == 1 && gt_value.contains("Answer")) {
        gt_value = gt_value.at("Answer");
    }
    judge::GroundTruth gt = judge::GroundTruth::from_value(gt_value);
    graph::ResultTable result =
        graph::ResultTable::from_json(Json::parse(util::read_file(result_path)));

    judge::Verdict verdict;
    if (judge_mode == "model") {
        std::shared_ptr<llm::Provider> provider;
        if (!mock_script.empty()) {
            provider = llm::MockProvider::from_file(mock_script);
        } else {
            llm::HttpProviderConfig http;
            if (const char* url = std::getenv("CYPHERFORGE_PROVIDER_URL")) http.base_url = url;
            if (const char* key = std::getenv("CYPHERFORGE_API_KEY")) http.api_key = key;
            provider = std::make_shared<llm::HttpProvider>(http);
        }
        llm::Client client(provider);
        verdict = judge::model_judge(client, llm::TemplateRegistry::builtin(), question, gt,
                                     result);
    } else {
        verdict = judge::structural_match(question, gt, result);
    }
    std::cout << verdict.to_json().dump(2) << "\n";
    return kExitOk;
}

int cmd_stats(const std::string& dataset_path, const std::string& split_field,
              const std::string& compare_path) {
    auto rows = util::read_jsonl(dataset_path);
    std::set<std::string> schemas;
    std::map<std::string, size_t> by_taxonomy;
    for (const auto& row : rows) {
        if (row.contains(split_field)) {
            schemas.insert(row.at(split_field).dump());
        }
        by_taxonomy[row.value("query_type", "unknown")]++;
    }
    std::cout << fmt::format("records {}\n", rows.size());
    std::cout << fmt::format("distinct_schemas {}\n", schemas.size());
    for (const auto& [taxonomy, n] : by_taxonomy) {
        std::cout << fmt::format("  {} {}\n", taxonomy, n);
    }

    if (!compare_path.empty()) {
        auto other_rows = util::read_jsonl(compare_path);
        std::set<std::string> other_schemas;
        for (const auto& row : other_rows) {
            if (row.contains(split_field)) other_schemas.insert(row.at(split_field).dump());
        }
        std::cout << fmt::format("compare_records {}\n", other_rows.size());
        std::cout << fmt::format("compare_distinct_schemas {}\n", other_schemas.size());
        size_t shared = 0;
        for (const auto& s : schemas) shared += other_schemas.count(s);
        bool disjoint = shared == 0;
        std::cout << fmt::format("schema_split_disjoint: {} ({} shared)\n",
                                 disjoint ? "PASS" : "FAIL", shared);
        if (!disjoint) return kExitCheckFailed;
    }
    return kExitOk;
}

int cmd_engine_repl() {
    graph::GraphStore store = graph::fresh_store();
    std::string line;
    std::string pending;
    std::cout << "embedded engine repl; ':reset' clears, ':quit' exits\n";
    while (std::getline(std::cin, line)) {
        auto trimmed = util::trim(line);
        if (trimmed == ":quit" || trimmed == ":exit") break;
        if (trimmed == ":reset") {
            store = graph::fresh_store();
            std::cout << "store reset\n";
            continue;
        }
        if (trimmed == ":stats") {
            std::cout << fmt::format("{} nodes, {} edges\n", store.node_count(),
                                     store.edge_count());
            continue;
        }
        pending += line;
        pending += '\n';
        if (trimmed.empty() || trimmed.back() != ';') continue;
        for (const auto& stmt : graph::split_statements(pending)) {
            try {
                auto outcome = graph::execute_statement(store, graph::parse_cypher(stmt));
                if (!outcome.mutations.empty()) {
                    std::cout << fmt::format("nodes+{} edges+{} props+{}\n",
                                             outcome.mutations.nodes_created,
                                             outcome.mutations.edges_created,
                                             outcome.mutations.properties_set);
                }
                if (!outcome.table.columns.empty()) {
                    for (const auto& col : outcome.table.columns) std::cout << col << "\t";
                    std::cout << "\n";
                    for (const auto& row : outcome.table.rows) {
                        for (const auto& cell : row) std::cout << cell.to_display() << "\t";
                        std::cout << "\n";
                    }
                    std::cout << fmt::format("({} rows)\n", outcome.table.rows.size());
                }
            } catch (const std::exception& e) {
                std::cout << "error: " << e.what() << "\n";
            }
        }
        pending.clear();
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic text-to-Cypher dataset pipeline"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "run the data generation pipeline");
    std::string config_path;
    std::string mock_script;
    std::string out_path = "dataset.jsonl";
    std::optional<int64_t> seed;
    std::optional<int> workers;
    if (const char* env = std::getenv("CYPHERFORGE_CONFIG")) config_path = env;
    generate->add_option("--config", config_path, "pipeline config JSON")
        ->required(config_path.empty());
    generate->add_option("--mock-script", mock_script, "scripted mock provider JSON");
    generate->add_option("--out", out_path, "dataset JSONL output path");
    generate->add_option("--seed", seed, "rng seed override");
    generate->add_option("--workers", workers, "worker count override");

    // eval
    auto* eval = app.add_subcommand("eval", "grade predictions against a dataset");
    std::string dataset_path, predictions_path;
    std::string judge_mode = "structural";
    std::string backend_type = "embedded";
    std::string eval_mock, provider_url, remote_url;
    eval->add_option("--dataset", dataset_path, "dataset or tasks JSONL")->required();
    eval->add_option("--predictions", predictions_path, "JSON map id -> cypher")->required();
    eval->add_option("--judge", judge_mode, "structural | model")
        ->check(CLI::IsMember({"structural", "model"}));
    eval->add_option("--backend", backend_type, "embedded | remote")
        ->check(CLI::IsMember({"embedded", "remote"}));
    eval->add_option("--mock-script", eval_mock, "mock provider for the model judge");
    eval->add_option("--provider-url", provider_url, "chat-completions base url");
    eval->add_option("--remote-url", remote_url, "graph database base url");

    // spider-convert
    auto* convert = app.add_subcommand("spider-convert", "convert a relational benchmark");
    std::string spider_schema, spider_data, spider_questions, spider_out, spider_schema_out;
    convert->add_option("--schema", spider_schema, "relational schema JSON")->required();
    convert->add_option("--data", spider_data, "rows per table JSON");
    convert->add_option("--questions", spider_questions, "questions JSON");
    convert->add_option("--out", spider_out, "tasks JSONL output");
    convert->add_option("--schema-out", spider_schema_out, "converted schema text output");

    // judge
    auto* judge_cmd = app.add_subcommand("judge", "judge one result against a ground truth");
    std::string judge_question, judge_gt, judge_result, judge_judge = "structural", judge_mock;
    judge_cmd->add_option("--question", judge_question, "natural-language question")->required();
    judge_cmd->add_option("--ground-truth", judge_gt, "ground truth JSON file")->required();
    judge_cmd->add_option("--result", judge_result, "result table JSON file")->required();
    judge_cmd->add_option("--judge", judge_judge, "structural | model")
        ->check(CLI::IsMember({"structural", "model"}));
    judge_cmd->add_option("--mock-script", judge_mock, "mock provider for the model judge");

    // stats
    auto* stats = app.add_subcommand("stats", "dataset statistics and split checks");
    std::string stats_dataset, stats_compare;
    std::string split_field = "schema_text";
    stats->add_option("--dataset", stats_dataset, "dataset JSONL")->required();
    stats->add_option("--split-field", split_field, "field defining the schema split");
    stats->add_option("--compare", stats_compare, "second dataset; verify disjoint schemas");

    // engine-repl
    auto* repl = app.add_subcommand("engine-repl", "interactive embedded engine");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            return cmd_generate(config_path, mock_script, out_path, seed, workers);
        }
        if (eval->parsed()) {
            return cmd_eval(dataset_path, predictions_path, judge_mode, backend_type, eval_mock,
                            provider_url, remote_url);
        }
        if (convert->parsed()) {
            return cmd_spider_convert(spider_schema, spider_data, spider_questions, spider_out,
                                      spider_schema_out);
        }
        if (judge_cmd->parsed()) {
            return cmd_judge(judge_question, judge_gt, judge_result, judge_judge, judge_mock);
        }
        if (stats->parsed()) {
            return cmd_stats(stats_dataset, split_field, stats_compare);
        }
        if (repl->parsed()) {
            return cmd_engine_repl();
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "fatal: {}\n", e.what());
        return kExitFatal;
    }
    return kExitFatal;
}
