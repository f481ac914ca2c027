#include "cypherforge/graph/value.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include <fmt/format.h>

namespace cypherforge::graph {

namespace {

int compare_scalar(double a, double b) { return a < b ? -1 : (a > b ? 1 : 0); }

template <typename T>
int compare_ordered(const T& a, const T& b) {
    if (a < b) return -1;
    if (b < a) return 1;
    return 0;
}

int tag_rank(Value::Tag t) {
    switch (t) {
        case Value::Tag::Integer:
        case Value::Tag::Float:
            return 0;
        case Value::Tag::Text:
            return 1;
        case Value::Tag::Boolean:
            return 2;
        case Value::Tag::Date:
            return 3;
        case Value::Tag::LocalTime:
            return 4;
        case Value::Tag::LocalDateTime:
            return 5;
        case Value::Tag::ZonedDateTime:
            return 6;
        case Value::Tag::Duration:
            return 7;
        case Value::Tag::Point:
            return 8;
        case Value::Tag::List:
            return 9;
        case Value::Tag::Null:
            return 10;
    }
    return 10;
}

int compare_points(const Point& a, const Point& b) {
    if (int c = compare_ordered(a.srid, b.srid)) return c;
    if (int c = compare_scalar(a.x, b.x)) return c;
    return compare_scalar(a.y, b.y);
}

// Days since 1970-01-01 for a proleptic Gregorian date.
int64_t days_from_civil(int32_t y, int32_t m, int32_t d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int64_t yoe = y - era * 400;
    const int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

bool read_int(std::string_view s, size_t& pos, size_t digits, int32_t& out) {
    if (pos + digits > s.size()) return false;
    int32_t v = 0;
    for (size_t i = 0; i < digits; ++i) {
        char c = s[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    pos += digits;
    return true;
}

bool valid_date(const Date& d) {
    if (d.month < 1 || d.month > 12 || d.day < 1) return false;
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int max_day = days[d.month - 1];
    bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
    if (d.month == 2 && leap) max_day = 29;
    return d.day <= max_day;
}

}  // namespace

int64_t ZonedDateTime::epoch_seconds() const {
    int64_t days = days_from_civil(local.date.year, local.date.month, local.date.day);
    int64_t secs = days * 86400 + local.time.hour * 3600 + local.time.minute * 60 +
                   local.time.second;
    return secs - static_cast<int64_t>(offset_minutes) * 60;
}

double Value::as_number() const {
    return tag() == Tag::Integer ? static_cast<double>(as_integer()) : as_float();
}

std::optional<int> Value::compare(const Value& a, const Value& b) {
    if (a.is_null() || b.is_null()) return std::nullopt;
    if (a.is_numeric() && b.is_numeric()) {
        if (a.tag() == Tag::Integer && b.tag() == Tag::Integer) {
            return compare_ordered(a.as_integer(), b.as_integer());
        }
        return compare_scalar(a.as_number(), b.as_number());
    }
    if (a.tag() != b.tag()) return std::nullopt;
    switch (a.tag()) {
        case Tag::Boolean:
            return compare_ordered(a.as_boolean(), b.as_boolean());
        case Tag::Text:
            return a.as_text().compare(b.as_text()) < 0   ? -1
                   : a.as_text().compare(b.as_text()) > 0 ? 1
                                                          : 0;
        case Tag::Date:
            return compare_ordered(a.as_date(), b.as_date());
        case Tag::LocalTime:
            return compare_ordered(a.as_local_time(), b.as_local_time());
        case Tag::LocalDateTime:
            return compare_ordered(a.as_local_datetime(), b.as_local_datetime());
        case Tag::ZonedDateTime: {
            if (int c = compare_ordered(a.as_zoned_datetime().epoch_seconds(),
                                        b.as_zoned_datetime().epoch_seconds())) {
                return c;
            }
            return compare_ordered(a.as_zoned_datetime().nanos(), b.as_zoned_datetime().nanos());
        }
        case Tag::Duration:
            return compare_ordered(a.as_duration(), b.as_duration());
        case Tag::Point:
            return compare_points(a.as_point(), b.as_point());
        case Tag::List: {
            const auto& la = a.as_list();
            const auto& lb = b.as_list();
            for (size_t i = 0; i < la.size() && i < lb.size(); ++i) {
                auto c = compare(la[i], lb[i]);
                if (!c) return std::nullopt;
                if (*c != 0) return *c;
            }
            return compare_ordered(la.size(), lb.size());
        }
        default:
            return std::nullopt;
    }
}

int Value::total_compare(const Value& a, const Value& b) {
    int ra = tag_rank(a.tag());
    int rb = tag_rank(b.tag());
    if (ra != rb) return ra < rb ? -1 : 1;
    if (a.is_null()) return 0;
    if (ra == 0) {
        // Numbers compare numerically; an Integer and Float of equal value
        // tie (45000 == 45000.0) with Integer ordered first for stability.
        if (int c = compare_scalar(a.as_number(), b.as_number())) return c;
        return compare_ordered(static_cast<int>(a.tag()), static_cast<int>(b.tag()));
    }
    if (a.tag() == Tag::List) {
        const auto& la = a.as_list();
        const auto& lb = b.as_list();
        for (size_t i = 0; i < la.size() && i < lb.size(); ++i) {
            if (int c = total_compare(la[i], lb[i])) return c;
        }
        return compare_ordered(la.size(), lb.size());
    }
    return compare(a, b).value_or(0);
}

Json Value::to_json() const {
    switch (tag()) {
        case Tag::Null:
            return nullptr;
        case Tag::Boolean:
            return as_boolean();
        case Tag::Integer:
            return as_integer();
        case Tag::Float:
            return as_float();
        case Tag::Text:
            return as_text();
        case Tag::Date:
            return format_date(as_date());
        case Tag::LocalTime:
            return format_local_time(as_local_time());
        case Tag::LocalDateTime:
            return format_local_datetime(as_local_datetime());
        case Tag::ZonedDateTime:
            return format_zoned_datetime(as_zoned_datetime());
        case Tag::Duration:
            return format_duration(as_duration());
        case Tag::Point:
            return Json{{"x", as_point().x}, {"y", as_point().y}, {"srid", as_point().srid}};
        case Tag::List: {
            Json arr = Json::array();
            for (const auto& v : as_list()) arr.push_back(v.to_json());
            return arr;
        }
    }
    return nullptr;
}

Value Value::from_json(const Json& j) {
    switch (j.type()) {
        case Json::value_t::null:
            return null();
        case Json::value_t::boolean:
            return boolean(j.get<bool>());
        case Json::value_t::number_integer:
        case Json::value_t::number_unsigned:
            return integer(j.get<int64_t>());
        case Json::value_t::number_float:
            return floating(j.get<double>());
        case Json::value_t::string:
            return text(j.get<std::string>());
        case Json::value_t::array: {
            List items;
            for (const auto& e : j) items.push_back(from_json(e));
            return list(std::move(items));
        }
        case Json::value_t::object: {
            if (j.size() == 3 && j.contains("x") && j.contains("y") && j.contains("srid")) {
                return point({j["x"].get<double>(), j["y"].get<double>(),
                              j["srid"].get<int32_t>()});
            }
            // Generic objects flatten to their values in key order; the
            // Value model is deliberately map-free.
            List items;
            for (const auto& [key, val] : j.items()) items.push_back(from_json(val));
            return list(std::move(items));
        }
        default:
            return null();
    }
}

std::string Value::to_display() const {
    switch (tag()) {
        case Tag::Null:
            return "null";
        case Tag::Text:
            return "'" + as_text() + "'";
        case Tag::List: {
            std::string out = "[";
            for (size_t i = 0; i < as_list().size(); ++i) {
                if (i) out += ", ";
                out += as_list()[i].to_display();
            }
            return out + "]";
        }
        default:
            return to_json().dump();
    }
}

std::optional<Date> parse_date(std::string_view s) {
    size_t pos = 0;
    Date d;
    bool negative = !s.empty() && s[0] == '-';
    if (negative) ++pos;
    if (!read_int(s, pos, 4, d.year)) return std::nullopt;
    if (negative) d.year = -d.year;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!read_int(s, pos, 2, d.month)) return std::nullopt;
    if (pos >= s.size() || s[pos] != '-') return std::nullopt;
    ++pos;
    if (!read_int(s, pos, 2, d.day)) return std::nullopt;
    if (pos != s.size()) return std::nullopt;
    if (!valid_date(d)) return std::nullopt;
    return d;
}

namespace {

std::optional<LocalTime> parse_time_at(std::string_view s, size_t& pos) {
    LocalTime t;
    if (!read_int(s, pos, 2, t.hour)) return std::nullopt;
    if (pos >= s.size() || s[pos] != ':') return std::nullopt;
    ++pos;
    if (!read_int(s, pos, 2, t.minute)) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') {
        ++pos;
        if (!read_int(s, pos, 2, t.second)) return std::nullopt;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            int64_t frac = 0;
            int digits = 0;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])) &&
                   digits < 9) {
                frac = frac * 10 + (s[pos] - '0');
                ++digits;
                ++pos;
            }
            if (digits == 0) return std::nullopt;
            while (digits < 9) {
                frac *= 10;
                ++digits;
            }
            t.nanos = frac;
        }
    }
    if (t.hour > 23 || t.minute > 59 || t.second > 59) return std::nullopt;
    return t;
}

}  // namespace

std::optional<LocalTime> parse_local_time(std::string_view s) {
    size_t pos = 0;
    auto t = parse_time_at(s, pos);
    if (!t || pos != s.size()) return std::nullopt;
    return t;
}

std::optional<LocalDateTime> parse_local_datetime(std::string_view s) {
    size_t sep = s.find('T');
    if (sep == std::string_view::npos) return std::nullopt;
    auto d = parse_date(s.substr(0, sep));
    if (!d) return std::nullopt;
    auto t = parse_local_time(s.substr(sep + 1));
    if (!t) return std::nullopt;
    return LocalDateTime{*d, *t};
}

std::optional<ZonedDateTime> parse_zoned_datetime(std::string_view s) {
    if (s.empty()) return std::nullopt;
    ZonedDateTime z;
    if (s.back() == 'Z') {
        auto local = parse_local_datetime(s.substr(0, s.size() - 1));
        if (!local) return std::nullopt;
        z.local = *local;
        z.offset_minutes = 0;
        return z;
    }
    // Find the offset sign after the 'T' separator.
    size_t t_pos = s.find('T');
    if (t_pos == std::string_view::npos) return std::nullopt;
    size_t sign = s.find_first_of("+-", t_pos);
    if (sign == std::string_view::npos) return std::nullopt;
    auto local = parse_local_datetime(s.substr(0, sign));
    if (!local) return std::nullopt;
    std::string_view off = s.substr(sign + 1);
    size_t pos = 0;
    int32_t hours = 0, minutes = 0;
    if (!read_int(off, pos, 2, hours)) return std::nullopt;
    if (pos < off.size()) {
        if (off[pos] != ':') return std::nullopt;
        ++pos;
        if (!read_int(off, pos, 2, minutes)) return std::nullopt;
    }
    if (pos != off.size() || hours > 18 || minutes > 59) return std::nullopt;
    z.local = *local;
    z.offset_minutes = (hours * 60 + minutes) * (s[sign] == '-' ? -1 : 1);
    return z;
}

std::optional<Duration> parse_duration(std::string_view s) {
    if (s.empty() || s[0] != 'P') return std::nullopt;
    Duration d;
    size_t pos = 1;
    bool in_time = false;
    bool any = false;
    while (pos < s.size()) {
        if (s[pos] == 'T') {
            in_time = true;
            ++pos;
            continue;
        }
        size_t start = pos;
        while (pos < s.size() &&
               (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
            ++pos;
        }
        if (pos == start || pos >= s.size()) return std::nullopt;
        double num = 0;
        auto text = std::string(s.substr(start, pos - start));
        try {
            num = std::stod(text);
        } catch (...) {
            return std::nullopt;
        }
        char unit = s[pos++];
        any = true;
        auto whole = static_cast<int64_t>(num);
        switch (unit) {
            case 'Y':
                d.months += whole * 12;
                break;
            case 'M':
                if (in_time) {
                    d.seconds += whole * 60;
                } else {
                    d.months += whole;
                }
                break;
            case 'W':
                d.days += whole * 7;
                break;
            case 'D':
                d.days += whole;
                break;
            case 'H':
                d.seconds += whole * 3600;
                break;
            case 'S': {
                d.seconds += whole;
                d.nanos += static_cast<int64_t>(std::llround((num - double(whole)) * 1e9));
                break;
            }
            default:
                return std::nullopt;
        }
    }
    if (!any) return std::nullopt;
    return d;
}

std::string format_date(const Date& d) {
    return fmt::format("{:04}-{:02}-{:02}", d.year, d.month, d.day);
}

std::string format_local_time(const LocalTime& t) {
    std::string out = fmt::format("{:02}:{:02}:{:02}", t.hour, t.minute, t.second);
    if (t.nanos) {
        std::string frac = fmt::format("{:09}", t.nanos);
        while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
        out += "." + frac;
    }
    return out;
}

std::string format_local_datetime(const LocalDateTime& dt) {
    return format_date(dt.date) + "T" + format_local_time(dt.time);
}

std::string format_zoned_datetime(const ZonedDateTime& zdt) {
    if (zdt.offset_minutes == 0) return format_local_datetime(zdt.local) + "Z";
    int32_t off = zdt.offset_minutes;
    char sign = off < 0 ? '-' : '+';
    if (off < 0) off = -off;
    return format_local_datetime(zdt.local) +
           fmt::format("{}{:02}:{:02}", sign, off / 60, off % 60);
}

std::string format_duration(const Duration& d) {
    std::string out = "P";
    int64_t months = d.months;
    if (months / 12) out += fmt::format("{}Y", months / 12);
    if (months % 12) out += fmt::format("{}M", months % 12);
    if (d.days) out += fmt::format("{}D", d.days);
    int64_t secs = d.seconds;
    if (secs || d.nanos) {
        out += "T";
        if (secs / 3600) out += fmt::format("{}H", secs / 3600);
        if ((secs % 3600) / 60) out += fmt::format("{}M", (secs % 3600) / 60);
        int64_t rem = secs % 60;
        if (rem || d.nanos) {
            if (d.nanos) {
                std::string frac = fmt::format("{:09}", d.nanos);
                while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
                out += fmt::format("{}.{}S", rem, frac);
            } else {
                out += fmt::format("{}S", rem);
            }
        }
    }
    if (out == "P") out += "T0S";
    return out;
}

}  // namespace cypherforge::graph
