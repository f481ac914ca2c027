#include <doctest.h>

#include <atomic>
#include <chrono>
#include <random>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "cypherforge/llm.hpp"

using namespace cypherforge;
using namespace cypherforge::llm;

TEST_CASE("builtin template registry covers every pipeline step") {
    const TemplateRegistry& reg = TemplateRegistry::builtin();
    for (const char* id :
         {"skeleton_schema", "complete_schema", "question_gen", "question_vagueness_check",
          "ground_truth", "code_plan", "population_code", "cypher_step1", "cypher_step2",
          "cypher_step3", "cypher_step4", "judge", "schema_check", "domain_expansion"}) {
        CAPTURE(id);
        CHECK_NOTHROW(reg.get(id));
    }
    CHECK(reg.get("question_gen").required_placeholders ==
          std::set<std::string>{"Query Type", "Schema"});
    CHECK(reg.get("cypher_step4").required_placeholders ==
          std::set<std::string>{"SCHEMA", "USER QUESTION", "STEP 0 RESPONSE", "STEP 1 RESPONSE",
                                "STEP 2 RESPONSE"});
    CHECK(reg.get("judge").required_placeholders ==
          std::set<std::string>{"task", "ground_truth", "predicted"});
    // Loader metadata lines never leak into prompt bodies.
    CHECK(reg.get("cypher_step3").body.rfind("#:", 0) != 0);
}

TEST_CASE("render substitutes placeholders verbatim") {
    const auto& tmpl = TemplateRegistry::builtin().get("question_gen");
    std::string rendered = render(tmpl, {{"Query Type", "Pathfinding Queries"},
                                         {"Schema", "Node properties:\nX {}"}});
    CHECK(rendered.find("Pathfinding Queries") != std::string::npos);
    CHECK(rendered.find("Node properties:\nX {}") != std::string::npos);
    CHECK(rendered.find("{Query Type}") == std::string::npos);
    CHECK(rendered.find("{Schema}") == std::string::npos);
}

TEST_CASE("render keeps escaped braces and literal JSON intact") {
    PromptTemplate t = PromptTemplate::from_body(
        "demo", "Format: {{\"nodes\": {n}}}\nLiteral: {\"Answer\": <X>} and {id: 'f1'}");
    CHECK(t.required_placeholders == std::set<std::string>{"n"});
    std::string rendered = render(t, {{"n", "[1]"}});
    CHECK(rendered ==
          "Format: {\"nodes\": [1]}\nLiteral: {\"Answer\": <X>} and {id: 'f1'}");
}

TEST_CASE("render with zero placeholders returns the body unchanged") {
    PromptTemplate t = PromptTemplate::from_body("plain", "no placeholders here");
    CHECK(render(t, {}) == "no placeholders here");
}

TEST_CASE("missing binding names the placeholder") {
    const auto& tmpl = TemplateRegistry::builtin().get("question_gen");
    try {
        render(tmpl, {{"Schema", "s"}});
        FAIL("expected MissingPlaceholder");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::MissingPlaceholder);
        CHECK(std::string(e.what()).find("Query Type") != std::string::npos);
    }
}

static const char* kDisneyResponse = R"(The nodes involved are Character with its laugh counter.

```json
{
  "Answer": [
    {
      "characterid": "b92",
      "characterName": "Mini",
      "laughed": 100,
      "favorite_color": "Red"
   },
   {
      "characterid": "d989",
      "characterName": "Jimmi",
      "laughed": 10,
      "favorite_color": "Blue"}]}
```
)";

TEST_CASE("extract_json_block finds the fenced ground-truth payload") {
    Json v = extract_json_block(kDisneyResponse);
    REQUIRE(v.is_object());
    const Json& answer = v.at("Answer");
    REQUIRE(answer.is_array());
    REQUIRE(answer.size() == 2);
    CHECK(answer[0].at("characterid") == "b92");
    CHECK(answer[0].at("characterName") == "Mini");
    CHECK(answer[0].at("laughed") == 100);
    CHECK(answer[0].at("favorite_color") == "Red");
    CHECK(answer[1].at("laughed") == 10);
}

TEST_CASE("extract_json_block on a bare object returns it") {
    Json v = extract_json_block(R"({"Answer": 1})");
    CHECK(v.at("Answer") == 1);
}

TEST_CASE("extract_json_block prefers the later of two inline objects") {
    Json v = extract_json_block(
        R"(First guess {"a": 1} but on reflection the answer is {"a": 2}.)");
    CHECK(v.at("a") == 2);
}

TEST_CASE("extract_json_block honors the Json response: marker") {
    Json v = extract_json_block(
        "Explanation: stuff {\"decoy\": true}\n\nJson response: {\"nodes\": [\"A\"], "
        "\"relationships\": [\"R\"]}\n");
    CHECK(v.contains("nodes"));
}

TEST_CASE("extract_json_block errors distinguish missing from malformed") {
    try {
        extract_json_block("no json here at all");
        FAIL("expected NoJsonFound");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::NoJsonFound);
    }
    try {
        extract_json_block("braces {but: not json}");
        FAIL("expected MalformedJson");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::MalformedJson);
    }
}

TEST_CASE("extract_fenced returns the first matching fence") {
    std::string content = "Plan:\n```cypher\nMATCH (n) RETURN n\n```\nAlso:\n```cypher\nRETURN "
                          "1\n```\n";
    CHECK(extract_fenced(content, "cypher") == "MATCH (n) RETURN n");
}

TEST_CASE("extract_fenced with no fence errors") {
    try {
        extract_fenced("nothing fenced", "cypher");
        FAIL("expected NoFence");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::NoFence);
    }
}

TEST_CASE("extract_verdict parses the last FINAL_ANSWER token case-insensitively") {
    CHECK(extract_verdict("...reasoning... FINAL_ANSWER: CORRECT") == JudgeVerdict::Correct);
    CHECK(extract_verdict("FINAL_ANSWER: incorrect") == JudgeVerdict::Incorrect);
    CHECK(extract_verdict("FINAL_ANSWER: INCORRECT\nwait\nFINAL_ANSWER: correct.") ==
          JudgeVerdict::Correct);
    try {
        extract_verdict("no verdict here");
        FAIL("expected NoVerdict");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::NoVerdict);
    }
    try {
        extract_verdict("FINAL_ANSWER: MAYBE");
        FAIL("expected UnknownVerdict");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::UnknownVerdict);
    }
}

TEST_CASE("mock provider consumes per-step scripts in order and is deterministic") {
    Json script = {{"ground_truth", {"one", "two"}}, {"cypher_step4", {"q1", "q2", "q3"}}};
    MockProvider mock(script);
    ChatRequest req = ChatRequest::user("ignored");
    CHECK(mock.complete("ground_truth", req).content == "one");
    CHECK(mock.complete("cypher_step4", req).content == "q1");
    // Retry variants draw from the base step's array.
    CHECK(mock.complete("cypher_step4:retry:1", req).content == "q2");
    CHECK(mock.complete("ground_truth", req).content == "two");
    try {
        mock.complete("ground_truth", req);
        FAIL("expected ScriptExhausted");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::ScriptExhausted);
    }

    MockProvider fresh(script);
    CHECK(fresh.complete("ground_truth", req).content == "one");
}

TEST_CASE("client writes one transcript per completed call with logical timestamps") {
    auto mock = std::make_shared<MockProvider>(Json{{"judge", {"a", "b"}}});
    Client client(mock);
    std::vector<Transcript> log;
    client.set_transcript_sink([&](const Transcript& t) { log.push_back(t); });
    client.complete("judge", ChatRequest::user("x"));
    client.complete("judge", ChatRequest::user("y"));
    REQUIRE(log.size() == 2);
    CHECK(log[0].step_id == "judge");
    CHECK(log[0].timestamp_ms == 0);
    CHECK(log[1].timestamp_ms == 1);
    CHECK(log[0].to_json().at("response").at("content") == "a");
}

TEST_CASE("http provider retries transient failures then succeeds") {
    std::atomic<int> hits{0};
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        int n = ++hits;
        if (n <= 2) {
            res.status = 503;
            res.set_content("overloaded", "text/plain");
            return;
        }
        Json body = Json::parse(req.body);
        CHECK(body.at("messages")[0].at("role") == "user");
        Json reply = {{"choices", Json::array({{{"message", {{"content", "hello"}}}}})},
                      {"usage", {{"total_tokens", 7}}}};
        res.set_content(reply.dump(), "application/json");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpProviderConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.max_retries = 3;
    config.initial_backoff_ms = 1;
    HttpProvider provider(config);
    ChatResponse response = provider.complete("any", ChatRequest::user("hi"));
    CHECK(response.content == "hello");
    CHECK(response.provider_meta.at("retries") == 2);
    CHECK(hits == 3);

    server.stop();
    server_thread.join();
}

TEST_CASE("http provider does not retry a 401") {
    std::atomic<int> hits{0};
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 401;
        res.set_content("bad key", "text/plain");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpProviderConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port);
    config.initial_backoff_ms = 1;
    HttpProvider provider(config);
    try {
        provider.complete("any", ChatRequest::user("hi"));
        FAIL("expected ProviderRejected");
    } catch (const GatewayError& e) {
        CHECK(e.kind() == GatewayErrorKind::ProviderRejected);
    }
    CHECK(hits == 1);

    server.stop();
    server_thread.join();
}

TEST_CASE("extraction is total over arbitrary bytes") {
    std::mt19937_64 rng(4242);
    for (int i = 0; i < 500; ++i) {
        std::string input;
        size_t len = rng() % 200;
        for (size_t c = 0; c < len; ++c) {
            input += static_cast<char>(rng() % 256);
        }
        try {
            extract_json_block(input);
        } catch (const GatewayError&) {
        }
        try {
            extract_fenced(input, "cypher");
        } catch (const GatewayError&) {
        }
        try {
            extract_verdict(input);
        } catch (const GatewayError&) {
        }
    }
}

TEST_CASE("token-bucket rate limiting spaces out bursts") {
    auto mock = std::make_shared<MockProvider>(Json{{"s", {"a", "b", "c"}}});
    RateLimit limit;
    limit.requests_per_second = 100;
    limit.burst = 1;
    Client client(mock, limit);
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 3; ++i) client.complete("s", ChatRequest::user("x"));
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
    // Two refill waits at 10ms each, minus scheduling slack.
    CHECK(elapsed.count() >= 0.015);
}
