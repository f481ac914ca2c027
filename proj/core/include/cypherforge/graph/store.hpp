#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cypherforge/graph/value.hpp"

namespace cypherforge::graph {

using EntityId = uint64_t;
using PropertyMap = std::map<std::string, Value>;

struct Node {
    EntityId id = 0;
    std::vector<std::string> labels;
    PropertyMap properties;

    bool has_label(std::string_view label) const;
};

struct Edge {
    EntityId id = 0;
    std::string type;
    EntityId source = 0;
    EntityId target = 0;
    PropertyMap properties;
};

struct MutationSummary {
    uint64_t nodes_created = 0;
    uint64_t edges_created = 0;
    uint64_t properties_set = 0;

    bool empty() const { return !nodes_created && !edges_created && !properties_set; }
    MutationSummary& operator+=(const MutationSummary& other);
    bool operator==(const MutationSummary&) const = default;
};

/// In-memory property graph. Single-writer; ids come from a process-wide
/// counter so no two stores ever share an id. Iteration order is id
/// ascending, which equals insertion order.
class GraphStore {
public:
    GraphStore() = default;
    GraphStore(const GraphStore&) = delete;
    GraphStore& operator=(const GraphStore&) = delete;
    GraphStore(GraphStore&&) = default;
    GraphStore& operator=(GraphStore&&) = default;

    EntityId create_node(std::vector<std::string> labels, PropertyMap properties);
    /// Endpoints must be live node ids.
    EntityId create_edge(std::string type, EntityId source, EntityId target,
                         PropertyMap properties);

    const Node* find_node(EntityId id) const;
    const Edge* find_edge(EntityId id) const;
    Node* mutable_node(EntityId id);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    size_t node_count() const { return nodes_.size(); }
    size_t edge_count() const { return edges_.size(); }

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::map<EntityId, size_t> node_index_;
    std::map<EntityId, size_t> edge_index_;
};

/// Empty store; never shares entity ids with any other store in the process.
GraphStore fresh_store();

}  // namespace cypherforge::graph
