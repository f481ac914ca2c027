#include "cypherforge/util.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cypherforge::util {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write file: " + path);
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string_view trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(pos));
            break;
        }
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        pos = nl + 1;
    }
    return lines;
}

bool starts_with_word(std::string_view s, std::string_view word) {
    if (s.size() < word.size()) return false;
    for (size_t i = 0; i < word.size(); ++i) {
        if (std::toupper(static_cast<unsigned char>(s[i])) !=
            std::toupper(static_cast<unsigned char>(word[i]))) {
            return false;
        }
    }
    if (s.size() == word.size()) return true;
    const char next = s[word.size()];
    return !(std::isalnum(static_cast<unsigned char>(next)) || next == '_');
}

std::string expand_env(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
            size_t close = s.find('}', i + 2);
            if (close != std::string_view::npos) {
                std::string name(s.substr(i + 2, close - i - 2));
                if (const char* v = std::getenv(name.c_str())) out += v;
                i = close + 1;
                continue;
            }
        }
        out += s[i++];
    }
    return out;
}

std::vector<Json> read_jsonl(const std::string& path) {
    std::vector<Json> rows;
    for (const auto& line : split_lines(read_file(path))) {
        if (trim(line).empty()) continue;
        rows.push_back(Json::parse(line));
    }
    return rows;
}

bool looks_like_uuid(std::string_view s) {
    // 8-4-4-4-12 hex groups
    static constexpr size_t kDashes[] = {8, 13, 18, 23};
    if (s.size() != 36) return false;
    size_t d = 0;
    for (size_t i = 0; i < s.size(); ++i) {
        if (d < 4 && i == kDashes[d]) {
            if (s[i] != '-') return false;
            ++d;
        } else if (!std::isxdigit(static_cast<unsigned char>(s[i]))) {
            return false;
        }
    }
    return true;
}

}  // namespace cypherforge::util
