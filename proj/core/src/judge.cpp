#include "cypherforge/judge.hpp"

#include <algorithm>
#include <functional>
#include <cmath>

#include <fmt/format.h>

#include "cypherforge/graph/value.hpp"

namespace cypherforge::judge {

namespace {

// Canonical temporal rendering; midnight datetimes collapse to dates so
// "2024-01-01T00:00:00" equals a plain date literal.
std::optional<std::string> canonical_temporal(const std::string& s) {
    using namespace graph;
    if (auto d = parse_date(s)) return format_date(*d);
    if (auto z = parse_zoned_datetime(s)) {
        const LocalTime& t = z->local.time;
        if (z->offset_minutes == 0 && t.hour == 0 && t.minute == 0 && t.second == 0 &&
            t.nanos == 0) {
            return format_date(z->local.date);
        }
        return format_zoned_datetime(*z);
    }
    if (auto dt = parse_local_datetime(s)) {
        const LocalTime& t = dt->time;
        if (t.hour == 0 && t.minute == 0 && t.second == 0 && t.nanos == 0) {
            return format_date(dt->date);
        }
        return format_local_datetime(*dt);
    }
    if (auto t = parse_local_time(s)) return format_local_time(*t);
    return std::nullopt;
}

std::vector<Json> record_values(const Json& record) {
    std::vector<Json> values;
    for (const auto& [_, v] : record.items()) values.push_back(normalize_value(v));
    return values;
}

// Kuhn's augmenting-path bipartite matching; `adj[l]` lists compatible
// right-side indexes. Returns match_of_right (right -> left or npos).
std::vector<size_t> max_bipartite_matching(const std::vector<std::vector<size_t>>& adj,
                                           size_t right_size) {
    constexpr size_t kUnmatched = static_cast<size_t>(-1);
    std::vector<size_t> match_right(right_size, kUnmatched);
    std::vector<char> visited;

    std::function<bool(size_t)> try_augment = [&](size_t left) -> bool {
        for (size_t right : adj[left]) {
            if (visited[right]) continue;
            visited[right] = 1;
            if (match_right[right] == kUnmatched || try_augment(match_right[right])) {
                match_right[right] = left;
                return true;
            }
        }
        return false;
    };

    for (size_t left = 0; left < adj.size(); ++left) {
        visited.assign(right_size, 0);
        try_augment(left);
    }
    return match_right;
}

// Every row value must pair with a distinct record value.
bool is_sub_multiset(const std::vector<Json>& row_values,
                     const std::vector<Json>& record_values) {
    if (row_values.size() > record_values.size()) return false;
    std::vector<std::vector<size_t>> adj(row_values.size());
    for (size_t i = 0; i < row_values.size(); ++i) {
        for (size_t j = 0; j < record_values.size(); ++j) {
            if (normalized_equal(row_values[i], record_values[j])) adj[i].push_back(j);
        }
        if (adj[i].empty()) return false;
    }
    auto match_right = max_bipartite_matching(adj, record_values.size());
    size_t matched = 0;
    for (size_t m : match_right) {
        if (m != static_cast<size_t>(-1)) ++matched;
    }
    return matched == row_values.size();
}

}  // namespace

GroundTruth GroundTruth::from_value(const Json& value) {
    GroundTruth gt;
    if (value.is_null()) {
        throw GroundTruthError("ground truth value is null");
    }
    if (value.is_array()) {
        for (const auto& item : value) {
            if (!item.is_object()) {
                throw GroundTruthError(
                    "ground truth arrays must contain objects, got: " + item.dump());
            }
            gt.records.push_back(item);
        }
        return gt;
    }
    if (value.is_object()) {
        gt.records.push_back(value);
        return gt;
    }
    gt.records.push_back(Json{{"answer", value}});
    return gt;
}

Json GroundTruth::to_json() const {
    Json arr = Json::array();
    for (const auto& r : records) arr.push_back(r);
    return arr;
}

Verdict Verdict::correct(std::string rationale) {
    Verdict v;
    v.outcome = Outcome::Correct;
    v.score = 1;
    v.rationale = std::move(rationale);
    return v;
}

Verdict Verdict::incorrect(std::string rationale) {
    Verdict v;
    v.outcome = Outcome::Incorrect;
    v.score = 0;
    v.rationale = std::move(rationale);
    return v;
}

Json Verdict::to_json() const {
    return Json{{"outcome", outcome == Outcome::Correct ? "CORRECT" : "INCORRECT"},
                {"score", score},
                {"rationale", rationale}};
}

Json normalize_value(const Json& v) {
    switch (v.type()) {
        case Json::value_t::string: {
            std::string trimmed(util::trim(v.get<std::string>()));
            if (auto temporal = canonical_temporal(trimmed)) return *temporal;
            return util::to_lower(trimmed);
        }
        case Json::value_t::array: {
            Json out = Json::array();
            for (const auto& item : v) out.push_back(normalize_value(item));
            return out;
        }
        case Json::value_t::object: {
            // Key-sorted value list; mirrors how the engine projects entities.
            Json out = Json::array();
            for (const auto& [_, val] : v.items()) out.push_back(normalize_value(val));
            return out;
        }
        default:
            return v;
    }
}

bool normalized_equal(const Json& a, const Json& b) {
    if (a.is_number() && b.is_number()) {
        double x = a.get<double>();
        double y = b.get<double>();
        double scale = std::max({1.0, std::fabs(x), std::fabs(y)});
        return std::fabs(x - y) <= 1e-9 * scale;
    }
    if (a.type() != b.type()) {
        // Arrays of different container origin already collapsed; remaining
        // mixed types are unequal.
        if (a.is_array() != b.is_array()) return false;
    }
    if (a.is_array() && b.is_array()) {
        if (a.size() != b.size()) return false;
        for (size_t i = 0; i < a.size(); ++i) {
            if (!normalized_equal(a[i], b[i])) return false;
        }
        return true;
    }
    return a == b;
}

Verdict structural_match(const std::string&, const GroundTruth& gt,
                         const graph::ResultTable& result) {
    const size_t n = gt.records.size();
    if (result.rows.size() != n) {
        return Verdict::incorrect(
            fmt::format("expected {} result rows to match the ground truth, got {}", n,
                        result.rows.size()));
    }
    if (n == 0) {
        Verdict v = Verdict::correct("both ground truth and result are empty");
        v.matching = std::vector<std::pair<size_t, size_t>>{};
        return v;
    }

    std::vector<std::vector<Json>> record_value_sets;
    record_value_sets.reserve(n);
    for (const auto& record : gt.records) record_value_sets.push_back(record_values(record));

    std::vector<std::vector<Json>> row_value_sets;
    row_value_sets.reserve(n);
    for (const auto& row : result.rows) {
        std::vector<Json> values;
        for (const auto& cell : row) {
            Json j = cell.to_json();
            if (j.is_null()) continue;
            values.push_back(normalize_value(j));
        }
        row_value_sets.push_back(std::move(values));
    }

    std::vector<std::vector<size_t>> adj(n);
    for (size_t row = 0; row < n; ++row) {
        for (size_t rec = 0; rec < n; ++rec) {
            if (is_sub_multiset(row_value_sets[row], record_value_sets[rec])) {
                adj[row].push_back(rec);
            }
        }
        if (adj[row].empty()) {
            return Verdict::incorrect(
                fmt::format("result row {} matches no ground-truth record", row));
        }
    }

    auto match_right = max_bipartite_matching(adj, n);
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t rec = 0; rec < n; ++rec) {
        if (match_right[rec] != static_cast<size_t>(-1)) {
            pairs.emplace_back(rec, match_right[rec]);
        }
    }
    if (pairs.size() != n) {
        return Verdict::incorrect("no bijection between result rows and ground-truth records");
    }
    std::sort(pairs.begin(), pairs.end());
    Verdict v = Verdict::correct(
        fmt::format("all {} rows matched distinct ground-truth records", n));
    v.matching = std::move(pairs);
    return v;
}

Verdict model_judge(llm::Client& client, const llm::TemplateRegistry& templates,
                    const std::string& question, const GroundTruth& gt,
                    const graph::ResultTable& result, const std::string& model_id,
                    double temperature) {
    // The predicted answer renders as row objects keyed by column name, as a
    // graph database driver would hand them back.
    Json predicted = Json::array();
    for (const auto& row : result.rows) {
        Json obj = Json::object();
        for (size_t c = 0; c < result.columns.size() && c < row.size(); ++c) {
            obj[result.columns[c]] = row[c].to_json();
        }
        predicted.push_back(std::move(obj));
    }

    std::string prompt = llm::render(templates.get("judge"),
                                     {{"task", question},
                                      {"ground_truth", gt.to_json().dump(2)},
                                      {"predicted", predicted.dump(2)}});
    llm::ChatRequest request = llm::ChatRequest::user(std::move(prompt));
    request.model_id = model_id;
    request.temperature = temperature;
    llm::ChatResponse response = client.complete("judge", request);

    llm::JudgeVerdict verdict = llm::extract_verdict(response.content);
    Verdict v = verdict == llm::JudgeVerdict::Correct ? Verdict::correct(response.content)
                                                      : Verdict::incorrect(response.content);
    return v;
}

}  // namespace cypherforge::judge
