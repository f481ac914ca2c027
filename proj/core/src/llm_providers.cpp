#include <chrono>
#include <thread>

#include <fmt/format.h>

#include <httplib.h>

#include "cypherforge/llm.hpp"

namespace cypherforge::llm {

ChatRequest ChatRequest::user(std::string prompt) {
    ChatRequest r;
    r.messages.push_back({"user", std::move(prompt)});
    return r;
}

Json ChatRequest::to_json() const {
    Json j;
    j["model"] = model_id;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    j["messages"] = Json::array();
    for (const auto& m : messages) {
        j["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    return j;
}

MockProvider::MockProvider(Json script) {
    for (auto& [step, responses] : script.items()) {
        std::vector<std::string> bodies;
        for (const auto& r : responses) bodies.push_back(r.get<std::string>());
        script_[step] = std::move(bodies);
    }
}

std::shared_ptr<MockProvider> MockProvider::from_file(const std::string& path) {
    return std::make_shared<MockProvider>(Json::parse(util::read_file(path)));
}

ChatResponse MockProvider::complete(const std::string& step_id, const ChatRequest&) {
    std::string base = step_id;
    size_t retry = base.find(":retry:");
    if (retry != std::string::npos) base = base.substr(0, retry);

    std::lock_guard<std::mutex> lock(mutex_);
    auto it = script_.find(base);
    if (it == script_.end()) {
        throw GatewayError(GatewayErrorKind::ScriptExhausted,
                           fmt::format("mock script has no entries for step '{}'", base));
    }
    size_t& cursor = cursor_[base];
    if (cursor >= it->second.size()) {
        throw GatewayError(
            GatewayErrorKind::ScriptExhausted,
            fmt::format("mock script for step '{}' exhausted after {} responses", base,
                        it->second.size()));
    }
    ChatResponse response;
    response.content = it->second[cursor++];
    response.provider_meta = {{"mock", true}, {"ordinal", cursor - 1}};
    return response;
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {}

ChatResponse HttpProvider::complete(const std::string&, const ChatRequest& request) {
    std::string last_error;
    int backoff_ms = config_.initial_backoff_ms;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(config_.base_url);
        client.set_connection_timeout(config_.timeout_seconds, 0);
        client.set_read_timeout(config_.timeout_seconds, 0);
        httplib::Headers headers;
        if (!config_.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + config_.api_key);
        }

        auto started = std::chrono::steady_clock::now();
        auto result =
            client.Post(config_.path, headers, request.to_json().dump(), "application/json");
        auto elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();

        if (!result) {
            if (result.error() == httplib::Error::ConnectionTimeout ||
                result.error() == httplib::Error::Read) {
                last_error = fmt::format("timeout: {}", httplib::to_string(result.error()));
            } else {
                last_error = httplib::to_string(result.error());
            }
            continue;  // transport failure: retry
        }
        if (result->status >= 400 && result->status < 500) {
            throw GatewayError(
                GatewayErrorKind::ProviderRejected,
                fmt::format("provider rejected request: HTTP {} {}", result->status,
                            result->body));
        }
        if (result->status >= 500) {
            last_error = fmt::format("HTTP {}", result->status);
            continue;  // server-side failure: retry
        }

        Json body = Json::parse(result->body, nullptr, false);
        if (body.is_discarded() || !body.contains("choices") || body["choices"].empty()) {
            last_error = "malformed completion response";
            continue;
        }
        ChatResponse response;
        response.content =
            body["choices"][0].value("message", Json::object()).value("content", "");
        response.provider_meta = {{"retries", attempt},
                                  {"latency_ms", elapsed_ms},
                                  {"status", result->status}};
        if (body.contains("usage")) response.provider_meta["usage"] = body["usage"];
        return response;
    }
    if (last_error.rfind("timeout", 0) == 0) {
        throw GatewayError(GatewayErrorKind::Timeout,
                           fmt::format("provider timed out after {} retries: {}",
                                       config_.max_retries, last_error));
    }
    throw GatewayError(GatewayErrorKind::Transport,
                       fmt::format("transport failed after {} retries: {}", config_.max_retries,
                                   last_error));
}

}  // namespace cypherforge::llm
