#include <cctype>
#include <filesystem>

#include <fmt/format.h>

#include "cypherforge/llm.hpp"
#include "prompt_assets.inc"

namespace cypherforge::llm {

namespace {

bool is_placeholder_name(std::string_view inside) {
    if (inside.empty() || inside.size() > 64) return false;
    bool has_letter = false;
    for (char c : inside) {
        if (std::isalpha(static_cast<unsigned char>(c))) has_letter = true;
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ' ')) return false;
    }
    return has_letter && inside.front() != ' ' && inside.back() != ' ';
}

// Scans body for placeholder tokens; mirrors render()'s walk exactly.
std::set<std::string> scan_placeholders(std::string_view body) {
    std::set<std::string> names;
    size_t i = 0;
    while (i < body.size()) {
        if (body[i] != '{') {
            ++i;
            continue;
        }
        if (i + 1 < body.size() && body[i + 1] == '{') {
            i += 2;
            continue;
        }
        size_t close = body.find('}', i + 1);
        if (close == std::string_view::npos) break;
        std::string_view inside = body.substr(i + 1, close - i - 1);
        if (is_placeholder_name(inside)) {
            names.emplace(inside);
            i = close + 1;
        } else {
            ++i;
        }
    }
    return names;
}

// `#:` lines at the top of an asset file are loader metadata, not prompt text.
std::string strip_asset_header(std::string_view body) {
    size_t pos = 0;
    while (body.substr(pos, 2) == "#:") {
        size_t nl = body.find('\n', pos);
        if (nl == std::string_view::npos) return "";
        pos = nl + 1;
    }
    return std::string(body.substr(pos));
}

}  // namespace

PromptTemplate PromptTemplate::from_body(std::string id, std::string body) {
    PromptTemplate t;
    t.id = std::move(id);
    t.body = strip_asset_header(body);
    t.required_placeholders = scan_placeholders(t.body);
    return t;
}

std::string render(const PromptTemplate& tmpl,
                   const std::map<std::string, std::string>& bindings) {
    const std::string& body = tmpl.body;
    std::string out;
    out.reserve(body.size());
    size_t i = 0;
    while (i < body.size()) {
        char c = body[i];
        if (c == '{') {
            if (i + 1 < body.size() && body[i + 1] == '{') {
                out += '{';
                i += 2;
                continue;
            }
            size_t close = body.find('}', i + 1);
            if (close != std::string::npos) {
                std::string inside = body.substr(i + 1, close - i - 1);
                if (is_placeholder_name(inside)) {
                    auto it = bindings.find(inside);
                    if (it == bindings.end()) {
                        throw GatewayError(
                            GatewayErrorKind::MissingPlaceholder,
                            fmt::format("template '{}': placeholder '{{{}}}' is not bound",
                                        tmpl.id, inside));
                    }
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
            out += '{';
            ++i;
            continue;
        }
        if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
            out += '}';
            i += 2;
            continue;
        }
        out += c;
        ++i;
    }
    return out;
}

const TemplateRegistry& TemplateRegistry::builtin() {
    static const TemplateRegistry registry = [] {
        TemplateRegistry r;
        for (const auto& asset : assets::kAll) {
            std::string id(asset.id);
            r.templates_.emplace(id,
                                 PromptTemplate::from_body(id, std::string(asset.body)));
        }
        return r;
    }();
    return registry;
}

TemplateRegistry TemplateRegistry::with_overrides(const std::string& directory) {
    TemplateRegistry r = builtin();
    namespace fs = std::filesystem;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::string id = entry.path().stem().string();
        r.templates_[id] =
            PromptTemplate::from_body(id, util::read_file(entry.path().string()));
    }
    return r;
}

const PromptTemplate& TemplateRegistry::get(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) {
        throw GatewayError(GatewayErrorKind::UnknownTemplate,
                           fmt::format("no prompt template '{}'", id));
    }
    return it->second;
}

std::vector<std::string> TemplateRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : templates_) out.push_back(id);
    return out;
}

}  // namespace cypherforge::llm
