#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cypherforge/util.hpp"

namespace cypherforge::graph {

struct Date {
    int32_t year = 1970;
    int32_t month = 1;
    int32_t day = 1;

    auto operator<=>(const Date&) const = default;
};

struct LocalTime {
    int32_t hour = 0;
    int32_t minute = 0;
    int32_t second = 0;
    int64_t nanos = 0;

    auto operator<=>(const LocalTime&) const = default;
};

struct LocalDateTime {
    Date date;
    LocalTime time;

    auto operator<=>(const LocalDateTime&) const = default;
};

struct ZonedDateTime {
    LocalDateTime local;
    int32_t offset_minutes = 0;

    // Chronological comparison: equal instants are equal regardless of offset.
    int64_t epoch_seconds() const;
    int64_t nanos() const { return local.time.nanos; }
};

struct Duration {
    int64_t months = 0;
    int64_t days = 0;
    int64_t seconds = 0;
    int64_t nanos = 0;

    auto operator<=>(const Duration&) const = default;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    int32_t srid = 7203;  // neo4j default cartesian srid
};

/// Runtime value for property-graph data: the tagged union backing schema
/// property types, query results, and the remote wire mapping.
class Value {
public:
    using List = std::vector<Value>;

    enum class Tag {
        Null,
        Boolean,
        Integer,
        Float,
        Text,
        Date,
        LocalTime,
        LocalDateTime,
        ZonedDateTime,
        Duration,
        Point,
        List,
    };

    Value() = default;
    static Value null() { return Value(); }
    static Value boolean(bool b) { return Value(Storage(b)); }
    static Value integer(int64_t v) { return Value(Storage(v)); }
    static Value floating(double v) { return Value(Storage(v)); }
    static Value text(std::string s) { return Value(Storage(std::move(s))); }
    static Value date(Date d) { return Value(Storage(d)); }
    static Value local_time(LocalTime t) { return Value(Storage(t)); }
    static Value local_datetime(LocalDateTime dt) { return Value(Storage(dt)); }
    static Value zoned_datetime(ZonedDateTime zdt) { return Value(Storage(zdt)); }
    static Value duration(Duration d) { return Value(Storage(d)); }
    static Value point(Point p) { return Value(Storage(p)); }
    static Value list(List items) { return Value(Storage(std::move(items))); }

    Tag tag() const { return static_cast<Tag>(storage_.index()); }
    bool is_null() const { return tag() == Tag::Null; }
    bool is_numeric() const { return tag() == Tag::Integer || tag() == Tag::Float; }

    bool as_boolean() const { return std::get<bool>(storage_); }
    int64_t as_integer() const { return std::get<int64_t>(storage_); }
    double as_float() const { return std::get<double>(storage_); }
    double as_number() const;  // integer or float, promoted
    const std::string& as_text() const { return std::get<std::string>(storage_); }
    const Date& as_date() const { return std::get<Date>(storage_); }
    const LocalTime& as_local_time() const { return std::get<LocalTime>(storage_); }
    const LocalDateTime& as_local_datetime() const { return std::get<LocalDateTime>(storage_); }
    const ZonedDateTime& as_zoned_datetime() const { return std::get<ZonedDateTime>(storage_); }
    const Duration& as_duration() const { return std::get<Duration>(storage_); }
    const Point& as_point() const { return std::get<Point>(storage_); }
    const List& as_list() const { return std::get<List>(storage_); }

    /// Three-valued comparison used by predicates: nullopt when either side
    /// is Null or the tags are incomparable (cross-tag except Integer/Float).
    static std::optional<int> compare(const Value& a, const Value& b);

    /// Total order used by ORDER BY, DISTINCT, and grouping keys. Values
    /// order by tag class first (numbers, text, booleans, temporals,
    /// duration, point, list), Null sorts greatest.
    static int total_compare(const Value& a, const Value& b);

    bool operator==(const Value& other) const { return total_compare(*this, other) == 0; }

    Json to_json() const;
    static Value from_json(const Json& j);

    /// Compact single-line rendering (repl output, error messages).
    std::string to_display() const;

private:
    struct NullTag {
        bool operator==(const NullTag&) const = default;
    };
    using Storage = std::variant<NullTag, bool, int64_t, double, std::string, Date, LocalTime,
                                 LocalDateTime, ZonedDateTime, Duration, Point, List>;

    explicit Value(Storage s) : storage_(std::move(s)) {}

    Storage storage_;
};

// ISO-8601 parsing for the temporal constructors and schema-typed data.
std::optional<Date> parse_date(std::string_view s);
std::optional<LocalTime> parse_local_time(std::string_view s);
std::optional<LocalDateTime> parse_local_datetime(std::string_view s);
std::optional<ZonedDateTime> parse_zoned_datetime(std::string_view s);
std::optional<Duration> parse_duration(std::string_view s);

std::string format_date(const Date& d);
std::string format_local_time(const LocalTime& t);
std::string format_local_datetime(const LocalDateTime& dt);
std::string format_zoned_datetime(const ZonedDateTime& zdt);
std::string format_duration(const Duration& d);

}  // namespace cypherforge::graph
