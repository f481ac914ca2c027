#include "cypherforge/schema.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace cypherforge::schema {

namespace {

struct TypeToken {
    std::string_view token;
    PropertyType type;
};

// Canonical spellings first; space-separated forms accepted as aliases.
constexpr std::array<TypeToken, 16> kTypeTokens = {{
    {"BOOLEAN", PropertyType::Boolean},
    {"DATE", PropertyType::Date},
    {"DURATION", PropertyType::Duration},
    {"FLOAT", PropertyType::Float},
    {"INTEGER", PropertyType::Integer},
    {"LIST", PropertyType::List},
    {"LOCAL_DATETIME", PropertyType::LocalDatetime},
    {"LOCAL_TIME", PropertyType::LocalTime},
    {"POINT", PropertyType::Point},
    {"STRING", PropertyType::String},
    {"ZONED_DATETIME", PropertyType::ZonedDatetime},
    {"ZONED_TIME", PropertyType::ZonedTime},
    {"LOCAL DATETIME", PropertyType::LocalDatetime},
    {"LOCAL TIME", PropertyType::LocalTime},
    {"ZONED DATETIME", PropertyType::ZonedDatetime},
    {"ZONED TIME", PropertyType::ZonedTime},
}};

constexpr std::string_view kNodeHeader = "Node properties:";
constexpr std::string_view kRelHeader = "Relationship properties:";
constexpr std::string_view kPatternHeader = "The relationships:";

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

bool is_rel_name(std::string_view s) {
    if (s.empty()) return false;
    if (!std::isupper(static_cast<unsigned char>(s[0]))) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isupper(static_cast<unsigned char>(c)) ||
               std::isdigit(static_cast<unsigned char>(c)) || c == '_';
    });
}

// Strips surrounding ``` fences; the opening fence may carry an info string.
std::string_view strip_fences(std::string_view text) {
    text = util::trim(text);
    if (text.substr(0, 3) != "```") return text;
    size_t open_end = text.find('\n');
    if (open_end == std::string_view::npos) return text;
    size_t close = text.rfind("```");
    if (close <= open_end) return text;
    return util::trim(text.substr(open_end + 1, close - open_end - 1));
}

std::vector<Property> parse_property_block(std::string_view body, const std::string& owner) {
    std::vector<Property> props;
    body = util::trim(body);
    if (body.empty()) return props;
    size_t pos = 0;
    while (pos < body.size()) {
        size_t comma = body.find(',', pos);
        std::string_view item = body.substr(
            pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        size_t colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw ParseError(ParseErrorKind::Syntax,
                             fmt::format("{}: property item '{}' is missing ':'", owner,
                                         std::string(util::trim(item))));
        }
        std::string name(util::trim(item.substr(0, colon)));
        std::string token(util::trim(item.substr(colon + 1)));
        if (!is_identifier(name)) {
            throw ParseError(ParseErrorKind::Syntax,
                             fmt::format("{}: bad property name '{}'", owner, name));
        }
        auto type = property_type_from_token(token);
        if (!type) {
            throw ParseError(ParseErrorKind::BadPropertyType,
                             fmt::format("{}: unknown property type '{}'", owner, token));
        }
        for (const auto& p : props) {
            if (p.name == name) {
                throw ParseError(ParseErrorKind::Syntax,
                                 fmt::format("{}: duplicate property '{}'", owner, name));
            }
        }
        props.push_back({std::move(name), *type});
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return props;
}

// `Label {name: TYPE, ...}` or `Label {}`
std::pair<std::string, std::vector<Property>> parse_property_line(std::string_view line) {
    size_t open = line.find('{');
    size_t close = line.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        throw ParseError(ParseErrorKind::Syntax,
                         fmt::format("expected 'Name {{...}}', got '{}'", std::string(line)));
    }
    std::string name(util::trim(line.substr(0, open)));
    if (!is_identifier(name)) {
        throw ParseError(ParseErrorKind::Syntax,
                         fmt::format("bad identifier '{}' in property line", name));
    }
    if (!util::trim(line.substr(close + 1)).empty()) {
        throw ParseError(ParseErrorKind::Syntax,
                         fmt::format("trailing text after '}}' in '{}'", std::string(line)));
    }
    auto props = parse_property_block(line.substr(open + 1, close - open - 1), name);
    return {std::move(name), std::move(props)};
}

// `(:A)-[:R]->(:B)`
RelPattern parse_pattern_line(std::string_view line) {
    auto fail = [&] {
        throw ParseError(ParseErrorKind::Syntax,
                         fmt::format("bad pattern line '{}'", std::string(line)));
    };
    auto expect = [&](std::string_view& s, std::string_view tok) {
        s = util::trim(s);
        if (s.substr(0, tok.size()) != tok) fail();
        s.remove_prefix(tok.size());
    };
    auto read_name = [&](std::string_view& s, char terminator) {
        s = util::trim(s);
        size_t end = s.find(terminator);
        if (end == std::string_view::npos) fail();
        std::string name(util::trim(s.substr(0, end)));
        s.remove_prefix(end);
        return name;
    };

    std::string_view s = line;
    expect(s, "(");
    expect(s, ":");
    RelPattern p;
    p.source_label = read_name(s, ')');
    expect(s, ")");
    expect(s, "-");
    expect(s, "[");
    expect(s, ":");
    p.rel_name = read_name(s, ']');
    expect(s, "]");
    expect(s, "-");
    expect(s, ">");
    expect(s, "(");
    expect(s, ":");
    p.target_label = read_name(s, ')');
    expect(s, ")");
    if (!util::trim(s).empty()) fail();
    if (!is_identifier(p.source_label) || !is_identifier(p.target_label) ||
        !is_rel_name(p.rel_name)) {
        fail();
    }
    return p;
}

std::multiset<std::string> property_key(const std::vector<Property>& props) {
    std::multiset<std::string> key;
    for (const auto& p : props) key.insert(p.name + ":" + std::string(to_token(p.type)));
    return key;
}

}  // namespace

std::string_view to_token(PropertyType t) {
    for (const auto& entry : kTypeTokens) {
        if (entry.type == t) return entry.token;
    }
    return "STRING";
}

std::optional<PropertyType> property_type_from_token(std::string_view token) {
    for (const auto& entry : kTypeTokens) {
        if (entry.token == token) return entry.type;
    }
    return std::nullopt;
}

const NodeDef* GraphSchema::find_node(std::string_view label) const {
    for (const auto& n : nodes) {
        if (n.label == label) return &n;
    }
    return nullptr;
}

const RelDef* GraphSchema::find_relationship(std::string_view name) const {
    for (const auto& r : relationships) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

bool operator==(const GraphSchema& a, const GraphSchema& b) {
    if (a.nodes.size() != b.nodes.size() || a.relationships.size() != b.relationships.size() ||
        a.patterns.size() != b.patterns.size()) {
        return false;
    }
    for (const auto& n : a.nodes) {
        const NodeDef* other = b.find_node(n.label);
        if (!other || property_key(n.properties) != property_key(other->properties)) return false;
    }
    for (const auto& r : a.relationships) {
        const RelDef* other = b.find_relationship(r.name);
        if (!other || property_key(r.properties) != property_key(other->properties)) return false;
    }
    std::set<std::tuple<std::string, std::string, std::string>> pa, pb;
    for (const auto& p : a.patterns) pa.insert({p.source_label, p.rel_name, p.target_label});
    for (const auto& p : b.patterns) pb.insert({p.source_label, p.rel_name, p.target_label});
    return pa == pb;
}

GraphSchema parse_schema(std::string_view text) {
    GraphSchema out;
    auto lines = util::split_lines(strip_fences(text));

    enum class Section { None, Nodes, Rels, Patterns };
    Section section = Section::None;
    bool saw_nodes = false, saw_rels = false, saw_patterns = false;

    for (const auto& raw : lines) {
        std::string_view line = util::trim(raw);
        if (line.empty()) continue;
        if (line == kNodeHeader) {
            if (saw_nodes || saw_rels || saw_patterns) {
                throw ParseError(ParseErrorKind::MissingSection, "sections out of order");
            }
            saw_nodes = true;
            section = Section::Nodes;
            continue;
        }
        if (line == kRelHeader) {
            if (!saw_nodes || saw_rels || saw_patterns) {
                throw ParseError(ParseErrorKind::MissingSection, "sections out of order");
            }
            saw_rels = true;
            section = Section::Rels;
            continue;
        }
        if (line == kPatternHeader) {
            if (!saw_nodes || !saw_rels || saw_patterns) {
                throw ParseError(ParseErrorKind::MissingSection, "sections out of order");
            }
            saw_patterns = true;
            section = Section::Patterns;
            continue;
        }

        switch (section) {
            case Section::None:
                throw ParseError(ParseErrorKind::Syntax,
                                 fmt::format("text before '{}': '{}'", kNodeHeader,
                                             std::string(line)));
            case Section::Nodes: {
                auto [label, props] = parse_property_line(line);
                if (out.find_node(label)) {
                    throw ParseError(ParseErrorKind::Syntax,
                                     fmt::format("duplicate node label '{}'", label));
                }
                out.nodes.push_back({std::move(label), std::move(props)});
                break;
            }
            case Section::Rels: {
                auto [name, props] = parse_property_line(line);
                if (!is_rel_name(name)) {
                    throw ParseError(ParseErrorKind::Syntax,
                                     fmt::format("relationship name '{}' is not UPPER_SNAKE_CASE",
                                                 name));
                }
                if (out.find_relationship(name)) {
                    throw ParseError(ParseErrorKind::Syntax,
                                     fmt::format("duplicate relationship '{}'", name));
                }
                out.relationships.push_back({std::move(name), std::move(props)});
                break;
            }
            case Section::Patterns: {
                RelPattern p = parse_pattern_line(line);
                if (!out.find_node(p.source_label)) {
                    throw ParseError(ParseErrorKind::DanglingReference,
                                     fmt::format("pattern references undeclared label '{}'",
                                                 p.source_label));
                }
                if (!out.find_node(p.target_label)) {
                    throw ParseError(ParseErrorKind::DanglingReference,
                                     fmt::format("pattern references undeclared label '{}'",
                                                 p.target_label));
                }
                // Relationship names are auto-declared by their first pattern.
                if (!out.find_relationship(p.rel_name)) {
                    out.relationships.push_back({p.rel_name, {}});
                }
                if (std::find(out.patterns.begin(), out.patterns.end(), p) !=
                    out.patterns.end()) {
                    throw ParseError(
                        ParseErrorKind::Syntax,
                        fmt::format("duplicate pattern (:{})-[:{}]->(:{})", p.source_label,
                                    p.rel_name, p.target_label));
                }
                out.patterns.push_back(std::move(p));
                break;
            }
        }
    }

    if (!saw_nodes || !saw_rels || !saw_patterns) {
        throw ParseError(ParseErrorKind::MissingSection,
                         fmt::format("missing section header{}{}{}",
                                     saw_nodes ? "" : " 'Node properties:'",
                                     saw_rels ? "" : " 'Relationship properties:'",
                                     saw_patterns ? "" : " 'The relationships:'"));
    }
    return out;
}

std::string print_schema(const GraphSchema& schema) {
    std::ostringstream out;
    auto print_props = [&](const std::vector<Property>& props) {
        out << '{';
        for (size_t i = 0; i < props.size(); ++i) {
            if (i) out << ", ";
            out << props[i].name << ": " << to_token(props[i].type);
        }
        out << '}';
    };

    out << kNodeHeader << '\n';
    for (const auto& n : schema.nodes) {
        out << n.label << ' ';
        print_props(n.properties);
        out << '\n';
    }
    out << '\n' << kRelHeader << '\n';
    for (const auto& r : schema.relationships) {
        // Property-less relationships that appear in a pattern are implied by
        // the pattern section; printing them here would not round-trip the
        // movies-style block byte for byte.
        bool in_pattern = std::any_of(schema.patterns.begin(), schema.patterns.end(),
                                      [&](const RelPattern& p) { return p.rel_name == r.name; });
        if (r.properties.empty() && in_pattern) continue;
        out << r.name << ' ';
        print_props(r.properties);
        out << '\n';
    }
    out << '\n' << kPatternHeader << '\n';
    for (const auto& p : schema.patterns) {
        out << "(:" << p.source_label << ")-[:" << p.rel_name << "]->(:" << p.target_label
            << ")\n";
    }
    return out.str();
}

std::vector<Violation> validate_schema(const GraphSchema& schema) {
    std::vector<Violation> violations;
    auto add = [&](ViolationKind kind, std::string location, std::string message) {
        violations.push_back({kind, std::move(location), std::move(message)});
    };

    std::set<std::string> labels;
    for (const auto& n : schema.nodes) {
        if (n.label.empty() || !is_identifier(n.label)) {
            add(ViolationKind::EmptyLabel, "node", "empty or malformed node label");
        } else if (!labels.insert(n.label).second) {
            add(ViolationKind::DuplicateLabel, "node " + n.label,
                fmt::format("duplicate node label '{}'", n.label));
        }
        std::set<std::string> names;
        for (const auto& p : n.properties) {
            if (!names.insert(p.name).second) {
                add(ViolationKind::DuplicateProperty, "node " + n.label,
                    fmt::format("duplicate property '{}' on node '{}'", p.name, n.label));
            }
        }
    }

    std::set<std::string> rel_names;
    for (const auto& r : schema.relationships) {
        if (!is_rel_name(r.name)) {
            add(ViolationKind::BadRelationshipName, "relationship " + r.name,
                fmt::format("relationship name '{}' is not UPPER_SNAKE_CASE", r.name));
        } else if (!rel_names.insert(r.name).second) {
            add(ViolationKind::DuplicateRelationship, "relationship " + r.name,
                fmt::format("duplicate relationship '{}'", r.name));
        }
        std::set<std::string> names;
        for (const auto& p : r.properties) {
            if (!names.insert(p.name).second) {
                add(ViolationKind::DuplicateProperty, "relationship " + r.name,
                    fmt::format("duplicate property '{}' on relationship '{}'", p.name, r.name));
            }
        }
    }

    std::set<std::tuple<std::string, std::string, std::string>> seen_patterns;
    for (const auto& p : schema.patterns) {
        std::string loc =
            fmt::format("(:{})-[:{}]->(:{})", p.source_label, p.rel_name, p.target_label);
        if (!schema.find_node(p.source_label)) {
            add(ViolationKind::DanglingReference, loc,
                fmt::format("pattern references undeclared label '{}'", p.source_label));
        }
        if (!schema.find_node(p.target_label)) {
            add(ViolationKind::DanglingReference, loc,
                fmt::format("pattern references undeclared label '{}'", p.target_label));
        }
        if (!schema.find_relationship(p.rel_name)) {
            add(ViolationKind::DanglingReference, loc,
                fmt::format("pattern references undeclared relationship '{}'", p.rel_name));
        }
        if (!seen_patterns.insert({p.source_label, p.rel_name, p.target_label}).second) {
            add(ViolationKind::DuplicatePattern, loc, "pattern repeated");
        }
    }
    return violations;
}

Json schema_to_json(const GraphSchema& schema) {
    Json j;
    j["domain"] = schema.domain;
    j["nodes"] = Json::array();
    for (const auto& n : schema.nodes) {
        Json props = Json::array();
        for (const auto& p : n.properties) {
            props.push_back({{"name", p.name}, {"type", std::string(to_token(p.type))}});
        }
        j["nodes"].push_back({{"label", n.label}, {"properties", props}});
    }
    j["relationships"] = Json::array();
    for (const auto& r : schema.relationships) {
        Json props = Json::array();
        for (const auto& p : r.properties) {
            props.push_back({{"name", p.name}, {"type", std::string(to_token(p.type))}});
        }
        j["relationships"].push_back({{"name", r.name}, {"properties", props}});
    }
    j["patterns"] = Json::array();
    for (const auto& p : schema.patterns) {
        j["patterns"].push_back({{"source", p.source_label},
                                 {"relationship", p.rel_name},
                                 {"target", p.target_label}});
    }
    return j;
}

GraphSchema schema_from_json(const Json& j) {
    GraphSchema s;
    s.domain = j.value("domain", "");
    auto read_props = [](const Json& arr) {
        std::vector<Property> props;
        for (const auto& p : arr) {
            auto type = property_type_from_token(p.at("type").get<std::string>());
            if (!type) {
                throw ParseError(ParseErrorKind::BadPropertyType,
                                 "unknown property type in JSON schema: " +
                                     p.at("type").get<std::string>());
            }
            props.push_back({p.at("name").get<std::string>(), *type});
        }
        return props;
    };
    for (const auto& n : j.at("nodes")) {
        s.nodes.push_back({n.at("label").get<std::string>(), read_props(n.at("properties"))});
    }
    for (const auto& r : j.at("relationships")) {
        s.relationships.push_back(
            {r.at("name").get<std::string>(), read_props(r.at("properties"))});
    }
    for (const auto& p : j.at("patterns")) {
        s.patterns.push_back({p.at("source").get<std::string>(),
                              p.at("relationship").get<std::string>(),
                              p.at("target").get<std::string>()});
    }
    return s;
}

}  // namespace cypherforge::schema
