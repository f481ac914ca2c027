#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "cypherforge/util.hpp"

namespace cypherforge::llm {

enum class GatewayErrorKind {
    MissingPlaceholder,
    UnknownTemplate,
    Transport,
    ProviderRejected,
    Timeout,
    NoJsonFound,
    MalformedJson,
    NoFence,
    NoVerdict,
    UnknownVerdict,
    ScriptExhausted,
};

class GatewayError : public std::runtime_error {
public:
    GatewayError(GatewayErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    GatewayErrorKind kind() const { return kind_; }

private:
    GatewayErrorKind kind_;
};

/// Prompt template with `{name}` placeholders. `{{` and `}}` escape literal
/// braces; a brace pair whose inside is not a plain name (letters, digits,
/// spaces, underscores) is literal text, so embedded JSON examples survive.
struct PromptTemplate {
    std::string id;
    std::string body;
    std::set<std::string> required_placeholders;

    static PromptTemplate from_body(std::string id, std::string body);
};

std::string render(const PromptTemplate& tmpl,
                   const std::map<std::string, std::string>& bindings);

/// The builtin templates (embedded from core/assets/prompts). A directory of
/// <id>.txt files can override or extend them.
class TemplateRegistry {
public:
    static const TemplateRegistry& builtin();
    static TemplateRegistry with_overrides(const std::string& directory);

    const PromptTemplate& get(const std::string& id) const;
    std::vector<std::string> ids() const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.2;
    int max_tokens = 4096;
    std::string model_id;

    static ChatRequest user(std::string prompt);
    Json to_json() const;
};

struct ChatResponse {
    std::string content;
    Json provider_meta = Json::object();
};

struct Transcript {
    std::string step_id;
    ChatRequest request;
    ChatResponse response;
    int64_t timestamp_ms = 0;

    Json to_json() const;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual ChatResponse complete(const std::string& step_id, const ChatRequest& request) = 0;
    virtual bool deterministic() const { return false; }
};

/// Scripted provider: a JSON map step_id -> array of response strings,
/// consumed in order per step. Retry step ids ("x:retry:n") draw from the
/// base step's array, so fixtures script retries by appending entries.
class MockProvider final : public Provider {
public:
    explicit MockProvider(Json script);
    static std::shared_ptr<MockProvider> from_file(const std::string& path);

    ChatResponse complete(const std::string& step_id, const ChatRequest& request) override;
    bool deterministic() const override { return true; }

private:
    std::mutex mutex_;
    std::map<std::string, std::vector<std::string>> script_;
    std::map<std::string, size_t> cursor_;
};

struct HttpProviderConfig {
    std::string base_url;                      // e.g. https://api.example.com
    std::string path = "/v1/chat/completions"; // chat-completions shape
    std::string api_key;                       // empty = no Authorization header
    int max_retries = 3;                       // transport retries, exponential backoff
    int initial_backoff_ms = 250;
    int timeout_seconds = 60;
};

class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);

    ChatResponse complete(const std::string& step_id, const ChatRequest& request) override;

private:
    HttpProviderConfig config_;
};

struct RateLimit {
    double requests_per_second = 0;  // 0 = unlimited
    int burst = 1;
};

/// Shared gateway: token-bucket rate limiting plus a transcript per
/// completed call. With a deterministic provider, timestamps are a logical
/// counter so full runs replay byte for byte.
class Client {
public:
    using TranscriptSink = std::function<void(const Transcript&)>;

    explicit Client(std::shared_ptr<Provider> provider, RateLimit limit = {});

    void set_transcript_sink(TranscriptSink sink);

    ChatResponse complete(const std::string& step_id, const ChatRequest& request);

    const Provider& provider() const { return *provider_; }

private:
    void throttle();

    std::shared_ptr<Provider> provider_;
    RateLimit limit_;
    std::mutex mutex_;
    double tokens_;
    int64_t last_refill_us_ = 0;
    int64_t logical_clock_ = 0;
    TranscriptSink sink_;
};

/// Opens `path` for appending and returns a serialized JSONL sink.
Client::TranscriptSink jsonl_transcript_sink(const std::string& path);

// --- response extraction (pure, total over arbitrary UTF-8) ---

/// Last well-formed JSON value: fenced ```json blocks first, then text after
/// a `Json response:` marker, then the last brace-balanced region.
Json extract_json_block(const std::string& content);

/// Body of the first ``` fence whose info string equals `language_tag`
/// (empty tag matches a bare fence). Leading/trailing newlines trimmed.
std::string extract_fenced(const std::string& content, const std::string& language_tag);

enum class JudgeVerdict { Correct, Incorrect };

/// Token following the last FINAL_ANSWER: marker, or nullopt.
std::optional<std::string> extract_final_answer_token(const std::string& content);

JudgeVerdict extract_verdict(const std::string& content);

}  // namespace cypherforge::llm
