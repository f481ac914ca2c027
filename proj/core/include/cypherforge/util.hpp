#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cypherforge {

using Json = nlohmann::json;

namespace util {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);

bool starts_with_word(std::string_view s, std::string_view word);

/// Expands `${NAME}` references against the process environment.
/// Unset variables expand to the empty string.
std::string expand_env(std::string_view s);

std::vector<Json> read_jsonl(const std::string& path);

bool looks_like_uuid(std::string_view s);

}  // namespace util
}  // namespace cypherforge
