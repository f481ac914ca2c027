#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "cypherforge/llm.hpp"

namespace cypherforge::llm {

namespace {

struct Fence {
    std::string info;
    std::string body;
};

std::vector<Fence> find_fences(const std::string& content) {
    std::vector<Fence> fences;
    auto lines = util::split_lines(content);
    size_t i = 0;
    while (i < lines.size()) {
        std::string_view line = util::trim(lines[i]);
        if (line.substr(0, 3) != "```") {
            ++i;
            continue;
        }
        Fence fence;
        fence.info = std::string(util::trim(line.substr(3)));
        ++i;
        std::string body;
        bool closed = false;
        while (i < lines.size()) {
            std::string_view inner = util::trim(lines[i]);
            if (inner.substr(0, 3) == "```" && util::trim(inner.substr(3)).empty()) {
                closed = true;
                ++i;
                break;
            }
            body += lines[i];
            body += '\n';
            ++i;
        }
        if (!closed) break;  // unterminated fence: ignore
        fence.body = std::move(body);
        fences.push_back(std::move(fence));
    }
    return fences;
}

std::string trim_newlines(std::string s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && (s[b] == '\n' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == '\n' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

std::optional<Json> try_parse(std::string_view text) {
    auto trimmed = util::trim(text);
    if (trimmed.empty()) return std::nullopt;
    Json parsed = Json::parse(trimmed, nullptr, false);
    if (parsed.is_discarded()) return std::nullopt;
    return parsed;
}

// Brace-balanced {...} / [...] spans, quote-aware.
std::vector<std::pair<size_t, size_t>> balanced_regions(std::string_view s) {
    std::vector<std::pair<size_t, size_t>> regions;
    size_t i = 0;
    while (i < s.size()) {
        char open = s[i];
        if (open != '{' && open != '[') {
            ++i;
            continue;
        }
        int depth = 0;
        bool in_string = false;
        size_t j = i;
        size_t end = std::string_view::npos;
        for (; j < s.size(); ++j) {
            char c = s[j];
            if (in_string) {
                if (c == '\\') {
                    ++j;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{' || c == '[') {
                ++depth;
            } else if (c == '}' || c == ']') {
                --depth;
                if (depth == 0) {
                    end = j;
                    break;
                }
            }
        }
        if (end == std::string_view::npos) {
            ++i;
            continue;
        }
        regions.emplace_back(i, end + 1);
        i = end + 1;
    }
    return regions;
}

std::optional<Json> last_parseable_region(std::string_view s, bool& saw_candidate) {
    auto regions = balanced_regions(s);
    for (auto it = regions.rbegin(); it != regions.rend(); ++it) {
        saw_candidate = true;
        if (auto parsed = try_parse(s.substr(it->first, it->second - it->first))) {
            return parsed;
        }
    }
    return std::nullopt;
}

size_t find_last_case_insensitive(const std::string& haystack, std::string_view needle) {
    std::string lower = util::to_lower(haystack);
    std::string needle_lower = util::to_lower(needle);
    return lower.rfind(needle_lower);
}

}  // namespace

Json extract_json_block(const std::string& content) {
    bool saw_candidate = false;

    // Preferred: fenced ```json blocks, last parseable one.
    auto fences = find_fences(content);
    for (auto it = fences.rbegin(); it != fences.rend(); ++it) {
        if (util::to_lower(it->info) != "json") continue;
        saw_candidate = true;
        if (auto parsed = try_parse(it->body)) return *parsed;
        // A malformed fenced block may still wrap salvageable JSON.
        if (auto parsed = last_parseable_region(it->body, saw_candidate)) return *parsed;
    }

    // Then: text after the last `Json response:` marker.
    static constexpr std::string_view kMarker = "json response:";
    size_t marker = find_last_case_insensitive(content, kMarker);
    if (marker != std::string::npos) {
        std::string_view tail = std::string_view(content).substr(marker + kMarker.size());
        if (auto parsed = last_parseable_region(tail, saw_candidate)) return *parsed;
    }

    // Fallback: last brace-balanced region anywhere.
    if (auto parsed = last_parseable_region(content, saw_candidate)) return *parsed;

    if (saw_candidate) {
        throw GatewayError(GatewayErrorKind::MalformedJson,
                           "found JSON-like regions but none parsed");
    }
    throw GatewayError(GatewayErrorKind::NoJsonFound, "no JSON value in response");
}

std::string extract_fenced(const std::string& content, const std::string& language_tag) {
    for (const auto& fence : find_fences(content)) {
        if (util::to_lower(fence.info) == util::to_lower(language_tag)) {
            return trim_newlines(fence.body);
        }
    }
    throw GatewayError(GatewayErrorKind::NoFence,
                       fmt::format("no ```{} fence in response", language_tag));
}

std::optional<std::string> extract_final_answer_token(const std::string& content) {
    static constexpr std::string_view kMarker = "final_answer:";
    size_t pos = find_last_case_insensitive(content, kMarker);
    if (pos == std::string::npos) return std::nullopt;
    size_t i = pos + kMarker.size();
    while (i < content.size() && std::isspace(static_cast<unsigned char>(content[i]))) ++i;
    size_t start = i;
    while (i < content.size() && !std::isspace(static_cast<unsigned char>(content[i]))) ++i;
    std::string token = content.substr(start, i - start);
    while (!token.empty() && (token.back() == '.' || token.back() == ',' ||
                              token.back() == '!' || token.back() == '*')) {
        token.pop_back();
    }
    if (token.empty()) return std::nullopt;
    return token;
}

JudgeVerdict extract_verdict(const std::string& content) {
    auto token = extract_final_answer_token(content);
    if (!token) {
        throw GatewayError(GatewayErrorKind::NoVerdict, "no FINAL_ANSWER: marker in response");
    }
    std::string lower = util::to_lower(*token);
    if (lower == "correct") return JudgeVerdict::Correct;
    if (lower == "incorrect") return JudgeVerdict::Incorrect;
    throw GatewayError(GatewayErrorKind::UnknownVerdict,
                       fmt::format("unrecognized verdict token '{}'", *token));
}

}  // namespace cypherforge::llm
