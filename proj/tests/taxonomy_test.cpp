#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "cypherforge/taxonomy.hpp"
#include "cypherforge/util.hpp"

using namespace cypherforge;
using namespace cypherforge::taxonomy;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    util::write_file(path.string(), content);
    return path.string();
}

}  // namespace

TEST_CASE("builtin registry contains the named taxonomies with unique ids") {
    TaxonomyRegistry reg = load_registry();
    CHECK(reg.source == RegistrySource::Builtin);
    CHECK(reg.size() >= 5);

    std::set<std::string> titles;
    std::set<std::string> ids;
    for (const auto& t : reg.entries) {
        titles.insert(t.title);
        CHECK(ids.insert(t.id).second);
        CHECK(!t.title.empty());
    }
    for (const char* name :
         {"Simple Retrieval Queries", "Multi-Criteria Retrieval Queries",
          "Complex Aggregation Queries", "Sub-Graph Queries", "Pathfinding Queries"}) {
        CHECK_MESSAGE(titles.count(name), name);
    }
    CHECK(reg.find("sub-graph") != nullptr);
}

TEST_CASE("registry file with 2 entries loads") {
    auto path = write_temp("tax2.json", R"([
        {"id": "a", "title": "A Queries", "description": "a"},
        {"id": "b", "title": "B Queries", "description": "b"}])");
    TaxonomyRegistry reg = load_registry(path);
    CHECK(reg.size() == 2);
    CHECK(reg.source == RegistrySource::File);
}

TEST_CASE("duplicate id in registry file errors") {
    auto path = write_temp("taxdup.json", R"([
        {"id": "a", "title": "A"}, {"id": "a", "title": "A again"}])");
    try {
        load_registry(path);
        FAIL("expected DuplicateId");
    } catch (const RegistryError& e) {
        CHECK(e.kind() == RegistryErrorKind::DuplicateId);
    }
}

TEST_CASE("malformed registry file errors") {
    auto path = write_temp("taxbad.json", "{\"not\": \"an array\"}");
    try {
        load_registry(path);
        FAIL("expected Parse");
    } catch (const RegistryError& e) {
        CHECK(e.kind() == RegistryErrorKind::Parse);
    }
}

TEST_CASE("sampling is deterministic, distinct, and seed-sensitive") {
    TaxonomyRegistry reg = load_registry();
    auto a = sample_taxonomies(reg, 7, 42);
    auto b = sample_taxonomies(reg, 7, 42);
    REQUIRE(a.size() == 7);
    std::set<std::string> ids;
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(ids.insert(a[i].id).second);
    }
    auto c = sample_taxonomies(reg, 7, 43);
    bool differs = false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].id != c[i].id) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("k equal to registry size yields a permutation") {
    TaxonomyRegistry reg = load_registry();
    auto all = sample_taxonomies(reg, reg.size(), 7);
    std::set<std::string> ids;
    for (const auto& t : all) ids.insert(t.id);
    CHECK(ids.size() == reg.size());
}

TEST_CASE("k larger than the registry errors") {
    TaxonomyRegistry reg = load_registry();
    try {
        sample_taxonomies(reg, reg.size() + 1, 0);
        FAIL("expected KTooLarge");
    } catch (const RegistryError& e) {
        CHECK(e.kind() == RegistryErrorKind::KTooLarge);
    }
}

TEST_CASE("k=1 draws are uniform within 3 sigma over 10000 seeds") {
    TaxonomyRegistry reg = load_registry();
    const size_t n = 10000;
    std::map<std::string, size_t> counts;
    for (size_t seed = 0; seed < n; ++seed) {
        counts[sample_taxonomies(reg, 1, seed)[0].id]++;
    }
    double p = 1.0 / static_cast<double>(reg.size());
    double expected = static_cast<double>(n) * p;
    double sigma = std::sqrt(static_cast<double>(n) * p * (1 - p));
    for (const auto& [id, count] : counts) {
        CAPTURE(id);
        CHECK(std::fabs(static_cast<double>(count) - expected) <= 3 * sigma);
    }
    CHECK(counts.size() == reg.size());
}
