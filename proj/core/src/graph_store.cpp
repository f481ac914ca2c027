#include "cypherforge/graph/store.hpp"

#include <atomic>
#include <stdexcept>

namespace cypherforge::graph {

namespace {
std::atomic<EntityId> g_next_id{1};
EntityId next_id() { return g_next_id.fetch_add(1, std::memory_order_relaxed); }
}  // namespace

bool Node::has_label(std::string_view label) const {
    for (const auto& l : labels) {
        if (l == label) return true;
    }
    return false;
}

MutationSummary& MutationSummary::operator+=(const MutationSummary& other) {
    nodes_created += other.nodes_created;
    edges_created += other.edges_created;
    properties_set += other.properties_set;
    return *this;
}

EntityId GraphStore::create_node(std::vector<std::string> labels, PropertyMap properties) {
    Node n;
    n.id = next_id();
    n.labels = std::move(labels);
    n.properties = std::move(properties);
    node_index_[n.id] = nodes_.size();
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
}

EntityId GraphStore::create_edge(std::string type, EntityId source, EntityId target,
                                 PropertyMap properties) {
    if (!find_node(source) || !find_node(target)) {
        throw std::logic_error("edge endpoints must reference live nodes");
    }
    Edge e;
    e.id = next_id();
    e.type = std::move(type);
    e.source = source;
    e.target = target;
    e.properties = std::move(properties);
    edge_index_[e.id] = edges_.size();
    edges_.push_back(std::move(e));
    return edges_.back().id;
}

const Node* GraphStore::find_node(EntityId id) const {
    auto it = node_index_.find(id);
    return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

const Edge* GraphStore::find_edge(EntityId id) const {
    auto it = edge_index_.find(id);
    return it == edge_index_.end() ? nullptr : &edges_[it->second];
}

Node* GraphStore::mutable_node(EntityId id) {
    auto it = node_index_.find(id);
    return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

GraphStore fresh_store() { return GraphStore(); }

}  // namespace cypherforge::graph
