#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "cypherforge/pipeline.hpp"

namespace cypherforge::pipeline {

namespace {

std::string failure_feedback(const std::string& what) {
    return fmt::format(
        "The previous Cypher attempt failed validation: {}. Generate a corrected query, again "
        "surrounded by ```cypher```.",
        what);
}

}  // namespace

QuestionOutcome Pipeline::validate_and_retain(const QuestionRecord& question,
                                              Population population,
                                              std::vector<llm::Transcript>* transcripts) {
    std::map<std::string, std::string> bindings = {{"SCHEMA", question.schema_text},
                                                   {"USER QUESTION", question.question}};
    std::optional<std::string> cypher;
    std::string feedback;

    // Attempt 1 runs the full four-step chain; later attempts re-issue only
    // step 4 with the failure appended as a system note.
    try {
        llm::ChatResponse s1 = call_step("cypher_step1", "cypher_step1", bindings, transcripts);
        bindings["STEP 0 RESPONSE"] = s1.content;
        llm::ChatResponse s2 = call_step("cypher_step2", "cypher_step2", bindings, transcripts);
        bindings["STEP 1 RESPONSE"] = s2.content;
        llm::ChatResponse s3 = call_step("cypher_step3", "cypher_step3", bindings, transcripts);
        bindings["STEP 2 RESPONSE"] = s3.content;
        llm::ChatResponse s4 = call_step("cypher_step4", "cypher_step4", bindings, transcripts);
        try {
            cypher = llm::extract_fenced(s4.content, "cypher");
        } catch (const llm::GatewayError& e) {
            feedback = e.what();  // NoFence: a failed attempt
        }
    } catch (const llm::GatewayError& e) {
        QuestionOutcome out;
        out.discarded = Discarded{question.id, DiscardReason::GatewayFailed, e.what(), 0};
        return out;
    }

    for (int attempt = 1; attempt <= config_.max_cypher_attempts; ++attempt) {
        if (cypher) {
            std::unique_ptr<graph::GraphSession> session;
            if (attempt == 1) {
                session = std::move(population.session);
            } else {
                // Fresh isolated database per attempt; earlier failed
                // attempts may have mutated the previous one.
                session = backend_->open_session(fmt::format("{}:a{}", question.id, attempt));
                session->apply(population.statements);
            }

            std::optional<graph::ResultTable> table;
            try {
                table = session->execute(*cypher);
            } catch (const graph::QueryError& e) {
                feedback = fmt::format("query did not parse: {}", e.what());
            } catch (const graph::ExecError& e) {
                feedback = fmt::format("execution failed: {}", e.cause());
            } catch (const graph::ServerError& e) {
                feedback = fmt::format("server error {}: {}", e.code(), e.what());
            }

            if (table) {
                judge::Verdict verdict;
                if (config_.judge_mode == "model") {
                    verdict = judge::model_judge(*client_, templates_, question.question,
                                                 question.ground_truth, *table,
                                                 config_.model_for("judge"),
                                                 config_.temperature_for("judge"));
                    std::lock_guard<std::mutex> lock(stats_mutex_);
                    ++calls_by_step_["judge"];
                } else {
                    verdict = judge::structural_match(question.question, question.ground_truth,
                                                      *table);
                }
                if (verdict.outcome == judge::Outcome::Correct) {
                    DatasetRecord record;
                    record.id = question.id;
                    record.domain = question.domain;
                    record.schema_text = question.schema_text;
                    record.query_type = question.query_type;
                    record.question = question.question;
                    record.ground_truth = question.ground_truth;
                    record.population_statements = population.statements;
                    record.cypher = *cypher;
                    record.execution_result = std::move(*table);
                    record.verdict = verdict;
                    record.attempts = attempt;
                    if (transcripts) record.transcripts = *transcripts;

                    // Emit-time replay guard (embedded only): population +
                    // cypher on a fresh store must stay CORRECT.
                    if (config_.backend_type == "embedded") {
                        graph::GraphStore replay = graph::fresh_store();
                        graph::apply_text(replay, record.population_statements);
                        graph::ResultTable replayed =
                            graph::execute(replay, graph::parse_cypher(record.cypher));
                        judge::Verdict check = judge::structural_match(
                            record.question, record.ground_truth, replayed);
                        if (check.outcome != judge::Outcome::Correct) {
                            feedback = "result was not reproducible on a fresh replay";
                            verdict = check;
                        }
                    }
                    if (verdict.outcome == judge::Outcome::Correct) {
                        QuestionOutcome out;
                        out.record = std::move(record);
                        return out;
                    }
                } else {
                    feedback = verdict.rationale.empty() ? "judge returned INCORRECT"
                                                         : verdict.rationale;
                }
            }
        }

        if (attempt == config_.max_cypher_attempts) break;

        cypher.reset();
        try {
            llm::ChatResponse retry = call_step(
                fmt::format("cypher_step4:retry:{}", attempt), "cypher_step4", bindings,
                transcripts, {{"system", failure_feedback(feedback)}});
            try {
                cypher = llm::extract_fenced(retry.content, "cypher");
            } catch (const llm::GatewayError& e) {
                feedback = e.what();
            }
        } catch (const llm::GatewayError& e) {
            QuestionOutcome out;
            out.discarded =
                Discarded{question.id, DiscardReason::GatewayFailed, e.what(), attempt};
            return out;
        }
    }

    QuestionOutcome out;
    out.discarded = Discarded{question.id, DiscardReason::CypherAttemptsExhausted, feedback,
                              config_.max_cypher_attempts};
    return out;
}

QuestionOutcome Pipeline::process_question(const QuestionRecord& planned) {
    QuestionRecord question = planned;
    std::vector<llm::Transcript> transcripts;
    auto discard = [&](DiscardReason reason, const std::string& detail) {
        QuestionOutcome out;
        out.discarded = Discarded{question.id, reason, detail, 0};
        return out;
    };

    try {
        question.ground_truth =
            generate_ground_truth(question.question, question.schema_text, &transcripts);
    } catch (const StageError& e) {
        return discard(DiscardReason::GroundTruthFailed, e.what());
    } catch (const llm::GatewayError& e) {
        return discard(DiscardReason::GatewayFailed, e.what());
    }

    Population population;
    try {
        population = populate_database(question, &transcripts);
    } catch (const StageError& e) {
        return discard(DiscardReason::PopulationGivenUp, e.what());
    } catch (const llm::GatewayError& e) {
        return discard(DiscardReason::GatewayFailed, e.what());
    }

    return validate_and_retain(question, std::move(population), &transcripts);
}

RunReport Pipeline::run(const std::string& out_path) {
    auto started = std::chrono::steady_clock::now();
    RunReport report;
    calls_by_step_.clear();

    client_->set_transcript_sink(llm::jsonl_transcript_sink(out_path + ".transcripts.jsonl"));

    DomainExpansion expansion = expand_domains();
    report.domain_expansion_stalled = expansion.stalled;
    if (expansion.domains.size() > static_cast<size_t>(config_.target_domain_count)) {
        expansion.domains.resize(static_cast<size_t>(config_.target_domain_count));
    }
    report.domains = expansion.domains.size();

    std::vector<QuestionRecord> questions;
    for (size_t d = 0; d < expansion.domains.size(); ++d) {
        const std::string& domain = expansion.domains[d];
        schema::GraphSchema schema;
        try {
            schema = generate_schema(domain, d);
        } catch (const std::exception& e) {
            fmt::print(stderr, "schema generation failed for '{}': {}\n", domain, e.what());
            ++report.schemas_failed;
            continue;
        }
        ++report.schemas_built;

        std::vector<std::pair<std::string, std::string>> pairs;
        try {
            pairs = generate_questions(schema, d);
        } catch (const std::exception& e) {
            fmt::print(stderr, "question generation failed for '{}': {}\n", domain, e.what());
            ++report.question_gen_failures;
            continue;
        }
        std::string schema_text = schema::print_schema(schema);
        for (const auto& [query_type, question] : pairs) {
            QuestionRecord q;
            q.id = fmt::format("q{:05}", questions.size());
            q.domain = domain;
            q.schema = schema;
            q.schema_text = schema_text;
            q.query_type = query_type;
            q.question = question;
            questions.push_back(std::move(q));
        }
    }
    report.questions_attempted = questions.size();

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write dataset to " + out_path);
    }

    std::vector<Discarded> discards;
    // Deterministic mock scripts are consumed in request order, so scripted
    // runs process questions serially; the worker pool serves remote runs.
    bool serial = config_.workers <= 1 || provider_->deterministic();

    auto handle = [&](QuestionOutcome&& outcome) {
        if (outcome.record) {
            out << outcome.record->to_json(config_.include_transcripts).dump() << '\n';
            out.flush();
            ++report.records_emitted;
        } else if (outcome.discarded) {
            ++report.discarded_by_reason[std::string(to_string(outcome.discarded->reason))];
            discards.push_back(*outcome.discarded);
        }
    };

    if (serial) {
        for (const auto& question : questions) {
            handle(process_question(question));
        }
    } else {
        std::vector<std::optional<QuestionOutcome>> results(questions.size());
        std::mutex mutex;
        std::condition_variable cv;
        std::atomic<size_t> next{0};
        auto worker = [&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= questions.size()) return;
                QuestionOutcome outcome = process_question(questions[i]);
                {
                    std::lock_guard<std::mutex> lock(mutex);
                    results[i] = std::move(outcome);
                }
                cv.notify_one();
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < config_.workers; ++w) pool.emplace_back(worker);

        // Flush in question order as results land, so output ordering never
        // depends on completion order.
        size_t flushed = 0;
        {
            std::unique_lock<std::mutex> lock(mutex);
            while (flushed < questions.size()) {
                cv.wait(lock, [&] { return results[flushed].has_value(); });
                while (flushed < questions.size() && results[flushed].has_value()) {
                    QuestionOutcome outcome = std::move(*results[flushed]);
                    results[flushed].reset();
                    ++flushed;
                    lock.unlock();
                    handle(std::move(outcome));
                    lock.lock();
                }
            }
        }
        for (auto& t : pool) t.join();
    }

    {
        std::lock_guard<std::mutex> lock(stats_mutex_);
        report.calls_by_step = calls_by_step_;
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                        started)
                              .count();

    Json report_json = report.to_json();
    Json discard_list = Json::array();
    for (const auto& d : discards) {
        discard_list.push_back({{"question_id", d.question_id},
                                {"reason", std::string(to_string(d.reason))},
                                {"detail", d.detail},
                                {"attempts", d.attempts}});
    }
    report_json["discard_details"] = std::move(discard_list);
    util::write_file(out_path + ".report.json", report_json.dump(2) + "\n");
    return report;
}

}  // namespace cypherforge::pipeline
