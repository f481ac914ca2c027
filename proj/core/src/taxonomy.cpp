#include "cypherforge/taxonomy.hpp"

#include <random>
#include <set>

#include <fmt/format.h>

#include "cypherforge/util.hpp"

namespace cypherforge::taxonomy {

namespace {

// The full production list runs to 109 query types and is supplied through a
// registry file; this builtin set covers the named categories plus common
// variants so the pipeline works out of the box.
const std::vector<QueryTaxonomy>& builtin_entries() {
    static const std::vector<QueryTaxonomy> entries = {
        {"simple-retrieval", "Simple Retrieval Queries",
         "Fetch nodes or properties matching a single stated condition."},
        {"multi-criteria-retrieval", "Multi-Criteria Retrieval Queries",
         "Fetch entities that satisfy several property or relationship conditions at once."},
        {"complex-aggregation", "Complex Aggregation Queries",
         "Aggregate values (counts, sums, averages) grouped across related entities."},
        {"sub-graph", "Sub-Graph Queries",
         "Retrieve a connected neighborhood of nodes and relationships around an anchor."},
        {"pathfinding", "Pathfinding Queries",
         "Find paths or shortest paths between two entities through typed relationships."},
        {"relationship-traversal", "Relationship Traversal Queries",
         "Follow one or more relationship hops from a named entity."},
        {"filtered-counting", "Filtered Counting Queries",
         "Count entities that satisfy a stated filter."},
        {"sorting-ranking", "Sorting and Ranking Queries",
         "Order results by a property and take the top or bottom entries."},
        {"negation", "Negation Queries",
         "Find entities that lack a relationship or fail a condition."},
        {"optional-data", "Optional Relationship Queries",
         "Return entities with optional related data that may be absent."},
        {"temporal", "Temporal Queries",
         "Filter or compare date and time valued properties."},
        {"range-filtering", "Range Filtering Queries",
         "Select entities whose numeric property falls in a stated range."},
        {"text-matching", "Text Matching Queries",
         "Match string properties by prefix, suffix, or contained text."},
        {"grouped-statistics", "Grouped Statistics Queries",
         "Compute per-group minima, maxima, or averages over related nodes."},
        {"existence-check", "Existence Check Queries",
         "Ask whether an entity or connection exists."},
        {"list-property", "List Property Queries",
         "Inspect or collect list valued properties."},
    };
    return entries;
}

}  // namespace

const QueryTaxonomy* TaxonomyRegistry::find(const std::string& id) const {
    for (const auto& e : entries) {
        if (e.id == id) return &e;
    }
    return nullptr;
}

TaxonomyRegistry load_registry(const std::optional<std::string>& path) {
    TaxonomyRegistry reg;
    if (!path) {
        reg.entries = builtin_entries();
        reg.source = RegistrySource::Builtin;
        return reg;
    }

    Json doc;
    try {
        doc = Json::parse(util::read_file(*path));
    } catch (const Json::parse_error& e) {
        throw RegistryError(RegistryErrorKind::Parse,
                            fmt::format("{}: {}", *path, e.what()));
    }
    if (!doc.is_array()) {
        throw RegistryError(RegistryErrorKind::Parse,
                            fmt::format("{}: expected a JSON array of taxonomies", *path));
    }
    std::set<std::string> ids;
    for (const auto& item : doc) {
        QueryTaxonomy t;
        try {
            t.id = item.at("id").get<std::string>();
            t.title = item.at("title").get<std::string>();
            t.description = item.value("description", "");
        } catch (const Json::exception& e) {
            throw RegistryError(RegistryErrorKind::Parse,
                                fmt::format("{}: bad taxonomy entry: {}", *path, e.what()));
        }
        if (t.id.empty() || t.title.empty()) {
            throw RegistryError(RegistryErrorKind::Parse,
                                fmt::format("{}: taxonomy id and title must be nonempty", *path));
        }
        if (!ids.insert(t.id).second) {
            throw RegistryError(RegistryErrorKind::DuplicateId,
                                fmt::format("duplicate taxonomy id '{}'", t.id));
        }
        reg.entries.push_back(std::move(t));
    }
    if (reg.entries.empty()) {
        throw RegistryError(RegistryErrorKind::Parse,
                            fmt::format("{}: registry must be non-empty", *path));
    }
    reg.source = RegistrySource::File;
    return reg;
}

std::vector<QueryTaxonomy> sample_taxonomies(const TaxonomyRegistry& registry, size_t k,
                                             uint64_t seed) {
    if (k < 1 || k > registry.entries.size()) {
        throw RegistryError(
            RegistryErrorKind::KTooLarge,
            fmt::format("k={} out of range for registry of {}", k, registry.entries.size()));
    }
    // Partial Fisher-Yates over an index vector.
    std::mt19937_64 rng(seed);
    std::vector<size_t> idx(registry.entries.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<QueryTaxonomy> out;
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<size_t> dist(i, idx.size() - 1);
        std::swap(idx[i], idx[dist(rng)]);
        out.push_back(registry.entries[idx[i]]);
    }
    return out;
}

}  // namespace cypherforge::taxonomy
