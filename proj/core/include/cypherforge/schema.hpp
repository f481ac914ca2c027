#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cypherforge/util.hpp"

namespace cypherforge::schema {

/// Property types a graph schema may declare. Tokens are parsed in their
/// canonical underscore form; the space-separated spellings (`LOCAL DATETIME`)
/// are accepted on input and normalized.
enum class PropertyType {
    Boolean,
    Date,
    Duration,
    Float,
    Integer,
    List,
    LocalDatetime,
    LocalTime,
    Point,
    String,
    ZonedDatetime,
    ZonedTime,
};

std::string_view to_token(PropertyType t);
std::optional<PropertyType> property_type_from_token(std::string_view token);

struct Property {
    std::string name;
    PropertyType type;

    bool operator==(const Property&) const = default;
};

struct NodeDef {
    std::string label;
    std::vector<Property> properties;  // declaration order preserved
};

struct RelDef {
    std::string name;  // UPPER_SNAKE_CASE
    std::vector<Property> properties;
};

struct RelPattern {
    std::string source_label;
    std::string rel_name;
    std::string target_label;

    bool operator==(const RelPattern&) const = default;
};

/// A property-graph schema. Equality is structural: property order and the
/// `domain` carrier field are ignored, since the text format encodes neither.
struct GraphSchema {
    std::string domain;
    std::vector<NodeDef> nodes;
    std::vector<RelDef> relationships;
    std::vector<RelPattern> patterns;

    const NodeDef* find_node(std::string_view label) const;
    const RelDef* find_relationship(std::string_view name) const;
};

bool operator==(const GraphSchema& a, const GraphSchema& b);

enum class ParseErrorKind {
    MissingSection,
    BadPropertyType,
    DanglingReference,
    Syntax,
};

class ParseError : public std::runtime_error {
public:
    ParseError(ParseErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ParseErrorKind kind() const { return kind_; }

private:
    ParseErrorKind kind_;
};

enum class ViolationKind {
    EmptyLabel,
    DuplicateLabel,
    DuplicateProperty,
    BadRelationshipName,
    DuplicateRelationship,
    DanglingReference,
    DuplicatePattern,
};

struct Violation {
    ViolationKind kind;
    std::string location;
    std::string message;
};

/// Parses the three-section schema text format:
///
///   Node properties:
///   Movie {title: STRING, votes: INTEGER}
///
///   Relationship properties:
///   ACTED_IN {roles: LIST}
///
///   The relationships:
///   (:Person)-[:ACTED_IN]->(:Movie)
///
/// Surrounding ``` fences and blank lines are tolerated. Relationship names
/// that appear only in pattern lines are declared with empty property sets;
/// node labels must be declared in the first section.
GraphSchema parse_schema(std::string_view text);

/// Canonical inverse of parse_schema. One line per node, one line per
/// relationship that has properties or no pattern, one line per pattern,
/// a single blank line between sections. parse_schema(print_schema(s)) == s.
std::string print_schema(const GraphSchema& schema);

/// Structural validation; returns one Violation per failed invariant.
std::vector<Violation> validate_schema(const GraphSchema& schema);

Json schema_to_json(const GraphSchema& schema);
GraphSchema schema_from_json(const Json& j);

}  // namespace cypherforge::schema
