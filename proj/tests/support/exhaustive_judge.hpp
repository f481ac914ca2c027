#pragma once

#include <algorithm>
#include <functional>

#include "cypherforge/judge.hpp"

namespace cypherforge::testsupport {

/// Exhaustive-assignment oracle for the structural judge: tries every
/// permutation of rows against ground-truth records, with row-value coverage
/// checked by brute-force assignment. Exponential; inputs stay at <= 6 rows.
inline bool exhaustive_structural_match(const judge::GroundTruth& gt,
                                        const graph::ResultTable& result) {
    using cypherforge::Json;
    if (gt.records.size() != result.rows.size()) return false;
    size_t n = gt.records.size();
    if (n == 0) return true;

    auto record_values = [&](size_t i) {
        std::vector<Json> out;
        for (const auto& [_, v] : gt.records[i].items()) {
            out.push_back(judge::normalize_value(v));
        }
        return out;
    };
    auto row_values = [&](size_t i) {
        std::vector<Json> out;
        for (const auto& cell : result.rows[i]) {
            Json j = cell.to_json();
            if (!j.is_null()) out.push_back(judge::normalize_value(j));
        }
        return out;
    };

    std::function<bool(std::vector<Json>, std::vector<Json>)> covers =
        [&](std::vector<Json> need, std::vector<Json> have) {
            if (need.empty()) return true;
            Json target = need.back();
            need.pop_back();
            for (size_t i = 0; i < have.size(); ++i) {
                if (judge::normalized_equal(target, have[i])) {
                    std::vector<Json> rest = have;
                    rest.erase(rest.begin() + static_cast<ptrdiff_t>(i));
                    if (covers(need, std::move(rest))) return true;
                }
            }
            return false;
        };

    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end());
    do {
        bool all = true;
        for (size_t row = 0; row < n; ++row) {
            if (!covers(row_values(row), record_values(perm[row]))) {
                all = false;
                break;
            }
        }
        if (all) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

}  // namespace cypherforge::testsupport
