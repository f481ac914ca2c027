#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cypherforge::taxonomy {

struct QueryTaxonomy {
    std::string id;  // slug, unique in registry
    std::string title;
    std::string description;
};

enum class RegistrySource { Builtin, File };

struct TaxonomyRegistry {
    std::vector<QueryTaxonomy> entries;
    RegistrySource source = RegistrySource::Builtin;

    size_t size() const { return entries.size(); }
    const QueryTaxonomy* find(const std::string& id) const;
};

enum class RegistryErrorKind { Parse, DuplicateId, KTooLarge };

class RegistryError : public std::runtime_error {
public:
    RegistryError(RegistryErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    RegistryErrorKind kind() const { return kind_; }

private:
    RegistryErrorKind kind_;
};

/// Without a path, returns the builtin registry. With a path, loads a JSON
/// array of {id, title, description} objects.
TaxonomyRegistry load_registry(const std::optional<std::string>& path = std::nullopt);

/// k distinct entries, uniform without replacement, deterministic per seed.
std::vector<QueryTaxonomy> sample_taxonomies(const TaxonomyRegistry& registry, size_t k,
                                             uint64_t seed);

}  // namespace cypherforge::taxonomy
