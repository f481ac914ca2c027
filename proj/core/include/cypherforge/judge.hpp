#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cypherforge/graph/engine.hpp"
#include "cypherforge/llm.hpp"

namespace cypherforge::judge {

/// Dummy ground truth, normalized to a list of records:
/// scalar -> [{answer: scalar}], object -> [object], array kept as-is
/// (elements must be objects).
struct GroundTruth {
    std::vector<Json> records;

    static GroundTruth from_value(const Json& value);

    Json to_json() const;
};

class GroundTruthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Outcome { Correct, Incorrect };

struct Verdict {
    Outcome outcome = Outcome::Incorrect;
    int score = 0;  // 1 iff Correct
    std::string rationale;
    std::optional<std::vector<std::pair<size_t, size_t>>> matching;  // (gt, row) pairs

    static Verdict correct(std::string rationale);
    static Verdict incorrect(std::string rationale);

    Json to_json() const;
};

/// Canonical form for tolerant comparison: text lowercased and trimmed,
/// ISO-8601 temporals canonicalized (midnight datetimes collapse to dates),
/// objects flattened to key-sorted value lists, lists element-wise.
Json normalize_value(const Json& v);

/// Equality on normalized values; numbers compare with relative tolerance
/// 1e-9, so 45000 == 45000.0.
bool normalized_equal(const Json& a, const Json& b);

/// CORRECT iff a bijection exists between ground-truth records and result
/// rows where each row's non-null normalized values form a sub-multiset of
/// its record's normalized values. Field names are ignored entirely.
Verdict structural_match(const std::string& question, const GroundTruth& gt,
                         const graph::ResultTable& result);

/// The model-based judge: renders the judge prompt, extracts FINAL_ANSWER.
Verdict model_judge(llm::Client& client, const llm::TemplateRegistry& templates,
                    const std::string& question, const GroundTruth& gt,
                    const graph::ResultTable& result, const std::string& model_id = "",
                    double temperature = 0.0);

}  // namespace cypherforge::judge
