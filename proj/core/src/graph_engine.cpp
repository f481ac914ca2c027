#include "cypherforge/graph/engine.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>

namespace cypherforge::graph {

namespace {

using namespace ast;

constexpr uint32_t kMaxHops = 8;
constexpr size_t kMaxBindings = 200000;

struct NodeRef {
    EntityId id;
};
struct EdgeRef {
    EntityId id;
};
struct PathRef {
    std::vector<EntityId> nodes;
    std::vector<EntityId> edges;
};
struct EdgeListRef {
    std::vector<EntityId> edges;
};

using Bound = std::variant<Value, NodeRef, EdgeRef, PathRef, EdgeListRef>;
using Binding = std::map<std::string, Bound>;

bool is_null_bound(const Bound& b) {
    const auto* v = std::get_if<Value>(&b);
    return v && v->is_null();
}

Value project_entity_properties(const PropertyMap& props) {
    Value::List values;
    for (const auto& [_, v] : props) values.push_back(v);  // name-sorted map order
    return Value::list(std::move(values));
}

class Evaluator {
public:
    explicit Evaluator(GraphStore& store) : store_(store) {}

    ExecOutcome run(const Query& query) {
        std::vector<Binding> rows = {Binding{}};
        ExecOutcome outcome;
        for (size_t i = 0; i < query.clauses.size(); ++i) {
            const Clause& clause = query.clauses[i];
            if (const auto* m = std::get_if<MatchClause>(&clause)) {
                rows = exec_match(*m, std::move(rows));
            } else if (const auto* c = std::get_if<CreateClause>(&clause)) {
                rows = exec_create(*c, std::move(rows), outcome.mutations);
            } else if (const auto* mg = std::get_if<MergeClause>(&clause)) {
                rows = exec_merge(*mg, std::move(rows), outcome.mutations);
            } else if (const auto* s = std::get_if<SetClause>(&clause)) {
                exec_set(*s, rows, outcome.mutations);
            } else if (const auto* w = std::get_if<WithClause>(&clause)) {
                rows = project_with(w->projection, std::move(rows));
            } else if (const auto* r = std::get_if<ReturnClause>(&clause)) {
                outcome.table = project_return(r->projection, std::move(rows));
                return outcome;
            }
            if (rows.size() > kMaxBindings) {
                throw ExecError("binding row limit exceeded");
            }
        }
        return outcome;
    }

private:
    // ---- expressions ----

    Bound lookup(const Binding& binding, const std::string& name) const {
        auto it = binding.find(name);
        if (it == binding.end()) return Value::null();
        return it->second;
    }

    Value to_value(const Bound& b) const {
        if (const auto* v = std::get_if<Value>(&b)) return *v;
        if (const auto* n = std::get_if<NodeRef>(&b)) {
            const Node* node = store_.find_node(n->id);
            return node ? project_entity_properties(node->properties) : Value::null();
        }
        if (const auto* e = std::get_if<EdgeRef>(&b)) {
            const Edge* edge = store_.find_edge(e->id);
            return edge ? project_entity_properties(edge->properties) : Value::null();
        }
        if (const auto* p = std::get_if<PathRef>(&b)) {
            Value::List nodes;
            for (EntityId id : p->nodes) {
                const Node* node = store_.find_node(id);
                nodes.push_back(node ? project_entity_properties(node->properties)
                                     : Value::null());
            }
            return Value::list(std::move(nodes));
        }
        if (const auto* el = std::get_if<EdgeListRef>(&b)) {
            Value::List edges;
            for (EntityId id : el->edges) {
                const Edge* edge = store_.find_edge(id);
                edges.push_back(edge ? project_entity_properties(edge->properties)
                                     : Value::null());
            }
            return Value::list(std::move(edges));
        }
        return Value::null();
    }

    Bound eval_bound(const Expr& e, const Binding& binding) const {
        if (const auto* lit = std::get_if<Literal>(&e.node)) return lit->value;
        if (const auto* var = std::get_if<Variable>(&e.node)) return lookup(binding, var->name);
        if (const auto* pa = std::get_if<PropertyAccess>(&e.node)) {
            Bound base = eval_bound(*pa->base, binding);
            if (const auto* n = std::get_if<NodeRef>(&base)) {
                const Node* node = store_.find_node(n->id);
                if (!node) return Value::null();
                auto it = node->properties.find(pa->property);
                return it == node->properties.end() ? Value::null() : it->second;
            }
            if (const auto* ed = std::get_if<EdgeRef>(&base)) {
                const Edge* edge = store_.find_edge(ed->id);
                if (!edge) return Value::null();
                auto it = edge->properties.find(pa->property);
                return it == edge->properties.end() ? Value::null() : it->second;
            }
            return Value::null();
        }
        if (const auto* lst = std::get_if<ListLiteral>(&e.node)) {
            Value::List items;
            for (const auto& item : lst->items) items.push_back(eval(*item, binding));
            return Value::list(std::move(items));
        }
        if (std::get_if<MapLiteral>(&e.node)) {
            // Bare map values only feed point(); elsewhere they are a type
            // error and surface as Null.
            return Value::null();
        }
        if (const auto* u = std::get_if<Unary>(&e.node)) return eval_unary(*u, binding);
        if (const auto* b = std::get_if<Binary>(&e.node)) return eval_binary(*b, binding);
        if (const auto* isn = std::get_if<IsNull>(&e.node)) {
            Value v = eval(*isn->operand, binding);
            return Value::boolean(isn->negated ? !v.is_null() : v.is_null());
        }
        if (const auto* fn = std::get_if<FnCall>(&e.node)) return eval_fn(*fn, binding);
        return Value::null();
    }

    Value eval(const Expr& e, const Binding& binding) const {
        return to_value(eval_bound(e, binding));
    }

    Value eval_unary(const Unary& u, const Binding& binding) const {
        Value v = eval(*u.operand, binding);
        if (u.op == UnaryOp::Not) {
            if (v.tag() != Value::Tag::Boolean) return Value::null();
            return Value::boolean(!v.as_boolean());
        }
        if (v.tag() == Value::Tag::Integer) return Value::integer(-v.as_integer());
        if (v.tag() == Value::Tag::Float) return Value::floating(-v.as_float());
        return Value::null();
    }

    Value eval_binary(const Binary& b, const Binding& binding) const {
        switch (b.op) {
            case BinaryOp::And: {
                Value l = eval(*b.lhs, binding);
                Value r = eval(*b.rhs, binding);
                bool lf = l.tag() == Value::Tag::Boolean && !l.as_boolean();
                bool rf = r.tag() == Value::Tag::Boolean && !r.as_boolean();
                if (lf || rf) return Value::boolean(false);
                if (l.tag() != Value::Tag::Boolean || r.tag() != Value::Tag::Boolean) {
                    return Value::null();
                }
                return Value::boolean(true);
            }
            case BinaryOp::Or: {
                Value l = eval(*b.lhs, binding);
                Value r = eval(*b.rhs, binding);
                bool lt = l.tag() == Value::Tag::Boolean && l.as_boolean();
                bool rt = r.tag() == Value::Tag::Boolean && r.as_boolean();
                if (lt || rt) return Value::boolean(true);
                if (l.tag() != Value::Tag::Boolean || r.tag() != Value::Tag::Boolean) {
                    return Value::null();
                }
                return Value::boolean(false);
            }
            case BinaryOp::Eq:
            case BinaryOp::Ne:
            case BinaryOp::Lt:
            case BinaryOp::Le:
            case BinaryOp::Gt:
            case BinaryOp::Ge: {
                auto c = Value::compare(eval(*b.lhs, binding), eval(*b.rhs, binding));
                if (!c) return Value::null();
                switch (b.op) {
                    case BinaryOp::Eq: return Value::boolean(*c == 0);
                    case BinaryOp::Ne: return Value::boolean(*c != 0);
                    case BinaryOp::Lt: return Value::boolean(*c < 0);
                    case BinaryOp::Le: return Value::boolean(*c <= 0);
                    case BinaryOp::Gt: return Value::boolean(*c > 0);
                    default: return Value::boolean(*c >= 0);
                }
            }
            case BinaryOp::In: {
                Value needle = eval(*b.lhs, binding);
                Value haystack = eval(*b.rhs, binding);
                if (haystack.tag() != Value::Tag::List) return Value::null();
                bool saw_null = needle.is_null();
                for (const auto& item : haystack.as_list()) {
                    auto c = Value::compare(needle, item);
                    if (c && *c == 0) return Value::boolean(true);
                    if (!c) saw_null = true;
                }
                return saw_null ? Value::null() : Value::boolean(false);
            }
            case BinaryOp::Contains:
            case BinaryOp::StartsWith:
            case BinaryOp::EndsWith: {
                Value l = eval(*b.lhs, binding);
                Value r = eval(*b.rhs, binding);
                if (l.tag() != Value::Tag::Text || r.tag() != Value::Tag::Text) {
                    return Value::null();
                }
                const std::string& s = l.as_text();
                const std::string& sub = r.as_text();
                bool result = false;
                if (b.op == BinaryOp::Contains) {
                    result = s.find(sub) != std::string::npos;
                } else if (b.op == BinaryOp::StartsWith) {
                    result = s.size() >= sub.size() && s.compare(0, sub.size(), sub) == 0;
                } else {
                    result = s.size() >= sub.size() &&
                             s.compare(s.size() - sub.size(), sub.size(), sub) == 0;
                }
                return Value::boolean(result);
            }
            case BinaryOp::Add: {
                Value l = eval(*b.lhs, binding);
                Value r = eval(*b.rhs, binding);
                if (l.tag() == Value::Tag::Text && r.tag() == Value::Tag::Text) {
                    return Value::text(l.as_text() + r.as_text());
                }
                if (l.tag() == Value::Tag::List && r.tag() == Value::Tag::List) {
                    Value::List out = l.as_list();
                    out.insert(out.end(), r.as_list().begin(), r.as_list().end());
                    return Value::list(std::move(out));
                }
                return arith(l, r, b.op);
            }
            case BinaryOp::Sub:
            case BinaryOp::Mul:
            case BinaryOp::Div:
            case BinaryOp::Mod:
                return arith(eval(*b.lhs, binding), eval(*b.rhs, binding), b.op);
        }
        return Value::null();
    }

    static Value arith(const Value& l, const Value& r, BinaryOp op) {
        if (!l.is_numeric() || !r.is_numeric()) return Value::null();
        bool ints = l.tag() == Value::Tag::Integer && r.tag() == Value::Tag::Integer;
        if (ints) {
            int64_t a = l.as_integer();
            int64_t b = r.as_integer();
            switch (op) {
                case BinaryOp::Add: return Value::integer(a + b);
                case BinaryOp::Sub: return Value::integer(a - b);
                case BinaryOp::Mul: return Value::integer(a * b);
                case BinaryOp::Div: return b == 0 ? Value::null() : Value::integer(a / b);
                case BinaryOp::Mod: return b == 0 ? Value::null() : Value::integer(a % b);
                default: return Value::null();
            }
        }
        double a = l.as_number();
        double b = r.as_number();
        switch (op) {
            case BinaryOp::Add: return Value::floating(a + b);
            case BinaryOp::Sub: return Value::floating(a - b);
            case BinaryOp::Mul: return Value::floating(a * b);
            case BinaryOp::Div: return Value::floating(a / b);
            case BinaryOp::Mod: return Value::floating(std::fmod(a, b));
            default: return Value::null();
        }
    }

    Bound eval_fn(const FnCall& fn, const Binding& binding) const {
        if (is_aggregate_fn(fn.name)) {
            throw ExecError(fmt::format("aggregate {}() outside a projection", fn.name));
        }
        auto arg_bound = [&](size_t i) { return eval_bound(*fn.args.at(i), binding); };
        auto arg = [&](size_t i) { return to_value(arg_bound(i)); };

        if (fn.name == "coalesce") {
            for (const auto& a : fn.args) {
                Value v = eval(*a, binding);
                if (!v.is_null()) return v;
            }
            return Value::null();
        }
        if (fn.args.size() != 1 && fn.name != "point") {
            return Value::null();
        }
        if (fn.name == "id") {
            Bound b = arg_bound(0);
            if (const auto* n = std::get_if<NodeRef>(&b)) {
                return Value::integer(static_cast<int64_t>(n->id));
            }
            if (const auto* e = std::get_if<EdgeRef>(&b)) {
                return Value::integer(static_cast<int64_t>(e->id));
            }
            return Value::null();
        }
        if (fn.name == "labels") {
            Bound b = arg_bound(0);
            if (const auto* n = std::get_if<NodeRef>(&b)) {
                if (const Node* node = store_.find_node(n->id)) {
                    Value::List out;
                    for (const auto& l : node->labels) out.push_back(Value::text(l));
                    return Value::list(std::move(out));
                }
            }
            return Value::null();
        }
        if (fn.name == "type") {
            Bound b = arg_bound(0);
            if (const auto* e = std::get_if<EdgeRef>(&b)) {
                if (const Edge* edge = store_.find_edge(e->id)) return Value::text(edge->type);
            }
            return Value::null();
        }
        if (fn.name == "length") {
            Bound b = arg_bound(0);
            if (const auto* p = std::get_if<PathRef>(&b)) {
                return Value::integer(static_cast<int64_t>(p->edges.size()));
            }
            Value v = to_value(b);
            if (v.tag() == Value::Tag::Text) {
                return Value::integer(static_cast<int64_t>(v.as_text().size()));
            }
            return Value::null();
        }
        if (fn.name == "size") {
            Value v = arg(0);
            if (v.tag() == Value::Tag::List) {
                return Value::integer(static_cast<int64_t>(v.as_list().size()));
            }
            if (v.tag() == Value::Tag::Text) {
                return Value::integer(static_cast<int64_t>(v.as_text().size()));
            }
            return Value::null();
        }
        if (fn.name == "nodes") {
            Bound b = arg_bound(0);
            if (const auto* p = std::get_if<PathRef>(&b)) {
                Value::List out;
                for (EntityId id : p->nodes) {
                    const Node* node = store_.find_node(id);
                    out.push_back(node ? project_entity_properties(node->properties)
                                       : Value::null());
                }
                return Value::list(std::move(out));
            }
            return Value::null();
        }
        if (fn.name == "relationships") {
            Bound b = arg_bound(0);
            const std::vector<EntityId>* edges = nullptr;
            if (const auto* p = std::get_if<PathRef>(&b)) edges = &p->edges;
            if (const auto* el = std::get_if<EdgeListRef>(&b)) edges = &el->edges;
            if (!edges) return Value::null();
            Value::List out;
            for (EntityId id : *edges) {
                const Edge* edge = store_.find_edge(id);
                out.push_back(edge ? project_entity_properties(edge->properties)
                                   : Value::null());
            }
            return Value::list(std::move(out));
        }
        if (fn.name == "tolower" || fn.name == "toupper") {
            Value v = arg(0);
            if (v.tag() != Value::Tag::Text) return Value::null();
            std::string s = v.as_text();
            for (char& c : s) {
                c = fn.name == "tolower"
                        ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                        : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            }
            return Value::text(std::move(s));
        }
        if (fn.name == "abs") {
            Value v = arg(0);
            if (v.tag() == Value::Tag::Integer) {
                return Value::integer(std::abs(v.as_integer()));
            }
            if (v.tag() == Value::Tag::Float) return Value::floating(std::fabs(v.as_float()));
            return Value::null();
        }
        if (fn.name == "tostring") {
            Value v = arg(0);
            if (v.is_null()) return Value::null();
            if (v.tag() == Value::Tag::Text) return v;
            Json j = v.to_json();
            return Value::text(j.is_string() ? j.get<std::string>() : j.dump());
        }
        if (fn.name == "date") {
            Value v = arg(0);
            if (v.tag() == Value::Tag::Date) return v;
            if (v.tag() != Value::Tag::Text) return Value::null();
            auto d = parse_date(v.as_text());
            return d ? Value::date(*d) : Value::null();
        }
        if (fn.name == "localtime" || fn.name == "time") {
            Value v = arg(0);
            if (v.tag() != Value::Tag::Text) return Value::null();
            auto t = parse_local_time(v.as_text());
            return t ? Value::local_time(*t) : Value::null();
        }
        if (fn.name == "localdatetime") {
            Value v = arg(0);
            if (v.tag() != Value::Tag::Text) return Value::null();
            auto t = parse_local_datetime(v.as_text());
            return t ? Value::local_datetime(*t) : Value::null();
        }
        if (fn.name == "datetime") {
            Value v = arg(0);
            if (v.tag() != Value::Tag::Text) return Value::null();
            if (auto z = parse_zoned_datetime(v.as_text())) return Value::zoned_datetime(*z);
            if (auto t = parse_local_datetime(v.as_text())) {
                return Value::zoned_datetime(ZonedDateTime{*t, 0});
            }
            return Value::null();
        }
        if (fn.name == "duration") {
            Value v = arg(0);
            if (v.tag() != Value::Tag::Text) return Value::null();
            auto d = parse_duration(v.as_text());
            return d ? Value::duration(*d) : Value::null();
        }
        if (fn.name == "point") {
            if (fn.args.size() != 1) return Value::null();
            const auto* m = std::get_if<MapLiteral>(&fn.args[0]->node);
            if (!m) return Value::null();
            Point p;
            bool have_x = false, have_y = false;
            for (const auto& [key, expr] : m->entries) {
                Value v = eval(*expr, binding);
                if (!v.is_numeric()) return Value::null();
                if (key == "x") {
                    p.x = v.as_number();
                    have_x = true;
                } else if (key == "y") {
                    p.y = v.as_number();
                    have_y = true;
                } else if (key == "srid") {
                    p.srid = static_cast<int32_t>(v.as_number());
                }
            }
            return have_x && have_y ? Value::point(p) : Value::null();
        }
        throw ExecError(fmt::format("unknown function {}()", fn.name));
    }

    // ---- pattern matching ----

    bool check_inline_properties(const PropertyMap& props,
                                 const std::vector<std::pair<std::string, ExprPtr>>& pattern,
                                 const Binding& binding) const {
        for (const auto& [name, expr] : pattern) {
            auto it = props.find(name);
            if (it == props.end()) return false;
            auto c = Value::compare(it->second, eval(*expr, binding));
            if (!c || *c != 0) return false;
        }
        return true;
    }

    bool node_matches(const Node& node, const NodePattern& pattern,
                      const Binding& binding) const {
        for (const auto& label : pattern.labels) {
            if (!node.has_label(label)) return false;
        }
        return check_inline_properties(node.properties, pattern.properties, binding);
    }

    bool edge_type_matches(const Edge& edge, const EdgePattern& pattern) const {
        if (pattern.types.empty()) return true;
        return std::find(pattern.types.begin(), pattern.types.end(), edge.type) !=
               pattern.types.end();
    }

    // Enumerates matches of one linear pattern part, extending `binding`.
    void match_part(const PatternPart& part, const Binding& binding,
                    std::vector<Binding>& out) const {
        if (part.shortest_path) {
            match_shortest_path(part, binding, out);
            return;
        }
        match_from(part, 0, binding, {}, {}, 0, out);
    }

    void match_from(const PatternPart& part, size_t node_idx, Binding binding,
                    std::vector<EntityId> path_nodes, std::vector<EntityId> path_edges,
                    EntityId current, std::vector<Binding>& out) const {
        const NodePattern& np = part.nodes[node_idx];
        auto continue_with = [&](EntityId node_id, Binding b) {
            if (np.variable && !b.count(*np.variable)) {
                b[*np.variable] = NodeRef{node_id};
            }
            auto nodes = path_nodes;
            nodes.push_back(node_id);
            if (node_idx == part.edges.size()) {
                if (part.path_variable) {
                    b[*part.path_variable] = PathRef{nodes, path_edges};
                }
                out.push_back(std::move(b));
                if (out.size() > kMaxBindings) {
                    throw ExecError("binding row limit exceeded");
                }
                return;
            }
            match_edge(part, node_idx, std::move(b), nodes, path_edges, node_id, out);
        };

        // First node of the part: either pinned by an existing binding or
        // drawn from the store in id order.
        if (node_idx == 0) {
            if (np.variable && binding.count(*np.variable)) {
                const Bound& b = binding.at(*np.variable);
                const auto* nr = std::get_if<NodeRef>(&b);
                if (!nr) return;
                const Node* node = store_.find_node(nr->id);
                if (node && node_matches(*node, np, binding)) {
                    continue_with(nr->id, binding);
                }
                return;
            }
            for (const Node& node : store_.nodes()) {
                if (node_matches(node, np, binding)) {
                    continue_with(node.id, binding);
                }
            }
            return;
        }
        // Interior nodes arrive via match_edge with `current` already chosen.
        (void)current;
    }

    void match_edge(const PatternPart& part, size_t edge_idx, Binding binding,
                    std::vector<EntityId> path_nodes, std::vector<EntityId> path_edges,
                    EntityId from, std::vector<Binding>& out) const {
        const EdgePattern& ep = part.edges[edge_idx];
        const NodePattern& next_np = part.nodes[edge_idx + 1];

        auto try_next_node = [&](EntityId next_id, Binding b, std::vector<EntityId> edges_taken) {
            const Node* next = store_.find_node(next_id);
            if (!next) return;
            if (next_np.variable && b.count(*next_np.variable)) {
                const auto* nr = std::get_if<NodeRef>(&b.at(*next_np.variable));
                if (!nr || nr->id != next_id) return;
            }
            if (!node_matches(*next, next_np, b)) return;
            Binding b2 = std::move(b);
            if (next_np.variable && !b2.count(*next_np.variable)) {
                b2[*next_np.variable] = NodeRef{next_id};
            }
            auto nodes = path_nodes;
            nodes.push_back(next_id);
            auto edges = path_edges;
            edges.insert(edges.end(), edges_taken.begin(), edges_taken.end());
            if (edge_idx + 1 == part.edges.size()) {
                if (part.path_variable) {
                    b2[*part.path_variable] = PathRef{nodes, edges};
                }
                out.push_back(std::move(b2));
                if (out.size() > kMaxBindings) {
                    throw ExecError("binding row limit exceeded");
                }
                return;
            }
            match_edge(part, edge_idx + 1, std::move(b2), std::move(nodes), std::move(edges),
                       next_id, out);
        };

        if (ep.var_length) {
            uint32_t min_hops = ep.var_length->min_hops;
            uint32_t max_hops = ep.var_length->max_hops == 0
                                    ? kMaxHops
                                    : std::min(ep.var_length->max_hops, kMaxHops);
            // DFS over edge sequences without edge reuse, id-ascending at
            // each step; yields in discovery order.
            std::function<void(EntityId, std::vector<EntityId>&)> walk =
                [&](EntityId at, std::vector<EntityId>& taken) {
                    if (taken.size() >= min_hops) {
                        Binding b = binding;
                        if (ep.variable) b[ep.variable.value()] = EdgeListRef{taken};
                        try_next_node(at, std::move(b), taken);
                    }
                    if (taken.size() == max_hops) return;
                    for (const Edge& edge : store_.edges()) {
                        if (!edge_type_matches(edge, ep)) continue;
                        if (!check_inline_properties(edge.properties, ep.properties, binding)) {
                            continue;
                        }
                        if (std::find(taken.begin(), taken.end(), edge.id) != taken.end()) {
                            continue;
                        }
                        EntityId next = 0;
                        if (ep.direction == Direction::Right && edge.source == at) {
                            next = edge.target;
                        } else if (ep.direction == Direction::Left && edge.target == at) {
                            next = edge.source;
                        } else if (ep.direction == Direction::Undirected) {
                            if (edge.source == at) {
                                next = edge.target;
                            } else if (edge.target == at) {
                                next = edge.source;
                            } else {
                                continue;
                            }
                        } else {
                            continue;
                        }
                        taken.push_back(edge.id);
                        walk(next, taken);
                        taken.pop_back();
                    }
                };
            std::vector<EntityId> taken;
            walk(from, taken);
            return;
        }

        // Single hop.
        for (const Edge& edge : store_.edges()) {
            if (!edge_type_matches(edge, ep)) continue;
            if (ep.variable && binding.count(*ep.variable)) {
                const auto* er = std::get_if<EdgeRef>(&binding.at(*ep.variable));
                if (!er || er->id != edge.id) continue;
            }
            if (!check_inline_properties(edge.properties, ep.properties, binding)) continue;
            auto step = [&](EntityId next_id) {
                Binding b = binding;
                if (ep.variable && !b.count(*ep.variable)) b[*ep.variable] = EdgeRef{edge.id};
                try_next_node(next_id, std::move(b), {edge.id});
            };
            if (ep.direction == Direction::Right) {
                if (edge.source == from) step(edge.target);
            } else if (ep.direction == Direction::Left) {
                if (edge.target == from) step(edge.source);
            } else {
                if (edge.source == from) step(edge.target);
                if (edge.target == from && edge.source != edge.target) step(edge.source);
            }
        }
    }

    void match_shortest_path(const PatternPart& part, const Binding& binding,
                             std::vector<Binding>& out) const {
        const NodePattern& src_np = part.nodes[0];
        const NodePattern& dst_np = part.nodes[1];
        const EdgePattern& ep = part.edges[0];
        uint32_t min_hops = 1;
        uint32_t max_hops = kMaxHops;
        if (ep.var_length) {
            min_hops = ep.var_length->min_hops;
            max_hops = ep.var_length->max_hops == 0 ? kMaxHops
                                                    : std::min(ep.var_length->max_hops, kMaxHops);
        }

        auto candidates = [&](const NodePattern& np) {
            std::vector<EntityId> ids;
            if (np.variable && binding.count(*np.variable)) {
                if (const auto* nr = std::get_if<NodeRef>(&binding.at(*np.variable))) {
                    const Node* node = store_.find_node(nr->id);
                    if (node && node_matches(*node, np, binding)) ids.push_back(nr->id);
                }
                return ids;
            }
            for (const Node& node : store_.nodes()) {
                if (node_matches(node, np, binding)) ids.push_back(node.id);
            }
            return ids;
        };

        for (EntityId src : candidates(src_np)) {
            for (EntityId dst : candidates(dst_np)) {
                auto path = bfs_shortest(src, dst, ep, binding, min_hops, max_hops);
                if (!path) continue;
                Binding b = binding;
                if (src_np.variable) b[*src_np.variable] = NodeRef{src};
                if (dst_np.variable) b[*dst_np.variable] = NodeRef{dst};
                if (ep.variable) b[*ep.variable] = EdgeListRef{path->edges};
                if (part.path_variable) b[*part.path_variable] = *path;
                out.push_back(std::move(b));
            }
        }
    }

    std::optional<PathRef> bfs_shortest(EntityId src, EntityId dst, const EdgePattern& ep,
                                        const Binding& binding, uint32_t min_hops,
                                        uint32_t max_hops) const {
        if (src == dst) {
            if (min_hops == 0) return PathRef{{src}, {}};
            return std::nullopt;
        }
        struct Item {
            EntityId node;
            PathRef path;
        };
        std::deque<Item> frontier;
        std::set<EntityId> visited{src};
        frontier.push_back({src, PathRef{{src}, {}}});
        while (!frontier.empty()) {
            Item item = frontier.front();
            frontier.pop_front();
            if (item.path.edges.size() == max_hops) continue;
            for (const Edge& edge : store_.edges()) {
                if (!edge_type_matches(edge, ep)) continue;
                if (!check_inline_properties(edge.properties, ep.properties, binding)) continue;
                EntityId next = 0;
                if (ep.direction == Direction::Right && edge.source == item.node) {
                    next = edge.target;
                } else if (ep.direction == Direction::Left && edge.target == item.node) {
                    next = edge.source;
                } else if (ep.direction == Direction::Undirected) {
                    if (edge.source == item.node) {
                        next = edge.target;
                    } else if (edge.target == item.node) {
                        next = edge.source;
                    } else {
                        continue;
                    }
                } else {
                    continue;
                }
                if (visited.count(next)) continue;
                PathRef path = item.path;
                path.nodes.push_back(next);
                path.edges.push_back(edge.id);
                if (next == dst) {
                    if (path.edges.size() >= min_hops) return path;
                    continue;  // too short; a longer route may still qualify
                }
                visited.insert(next);
                frontier.push_back({next, std::move(path)});
            }
        }
        return std::nullopt;
    }

    std::vector<Binding> exec_match(const MatchClause& m, std::vector<Binding> rows) {
        std::vector<Binding> result;
        for (const Binding& binding : rows) {
            std::vector<Binding> extended = {binding};
            for (const auto& part : m.patterns) {
                std::vector<Binding> next;
                for (const auto& b : extended) match_part(part, b, next);
                extended = std::move(next);
            }
            if (m.where) {
                std::vector<Binding> filtered;
                for (auto& b : extended) {
                    Value keep = eval(*m.where, b);
                    if (keep.tag() == Value::Tag::Boolean && keep.as_boolean()) {
                        filtered.push_back(std::move(b));
                    }
                }
                extended = std::move(filtered);
            }
            if (extended.empty() && m.optional) {
                Binding padded = binding;
                for (const std::string& var : clause_variables(m)) {
                    if (!padded.count(var)) padded[var] = Value::null();
                }
                result.push_back(std::move(padded));
                continue;
            }
            for (auto& b : extended) result.push_back(std::move(b));
        }
        return result;
    }

    static std::vector<std::string> clause_variables(const MatchClause& m) {
        std::vector<std::string> vars;
        for (const auto& part : m.patterns) {
            if (part.path_variable) vars.push_back(*part.path_variable);
            for (const auto& n : part.nodes) {
                if (n.variable) vars.push_back(*n.variable);
            }
            for (const auto& e : part.edges) {
                if (e.variable) vars.push_back(*e.variable);
            }
        }
        return vars;
    }

    // ---- writes ----

    PropertyMap eval_properties(const std::vector<std::pair<std::string, ExprPtr>>& pattern,
                                const Binding& binding, MutationSummary& summary) {
        PropertyMap props;
        for (const auto& [name, expr] : pattern) {
            Value v = eval(*expr, binding);
            if (v.is_null()) continue;
            props[name] = std::move(v);
            ++summary.properties_set;
        }
        return props;
    }

    std::vector<Binding> exec_create(const CreateClause& c, std::vector<Binding> rows,
                                     MutationSummary& summary) {
        for (Binding& binding : rows) {
            for (const auto& part : c.patterns) {
                if (part.shortest_path) {
                    throw ExecError("CREATE cannot contain shortestPath");
                }
                std::vector<EntityId> node_ids;
                for (const auto& np : part.nodes) {
                    if (np.variable && binding.count(*np.variable)) {
                        if (!np.labels.empty() || !np.properties.empty()) {
                            throw ExecError(fmt::format(
                                "variable '{}' already bound; CREATE cannot redeclare it",
                                *np.variable));
                        }
                        const auto* nr = std::get_if<NodeRef>(&binding.at(*np.variable));
                        if (!nr) {
                            throw ExecError(fmt::format("variable '{}' is not a node",
                                                        *np.variable));
                        }
                        node_ids.push_back(nr->id);
                        continue;
                    }
                    EntityId id = store_.create_node(np.labels,
                                                     eval_properties(np.properties, binding,
                                                                     summary));
                    ++summary.nodes_created;
                    if (np.variable) binding[*np.variable] = NodeRef{id};
                    node_ids.push_back(id);
                }
                for (size_t i = 0; i < part.edges.size(); ++i) {
                    const EdgePattern& ep = part.edges[i];
                    if (ep.var_length) {
                        throw ExecError("CREATE cannot use variable-length relationships");
                    }
                    if (ep.direction == Direction::Undirected) {
                        throw ExecError("CREATE requires a directed relationship");
                    }
                    if (ep.types.size() != 1) {
                        throw ExecError("CREATE requires exactly one relationship type");
                    }
                    EntityId src = node_ids[i];
                    EntityId dst = node_ids[i + 1];
                    if (ep.direction == Direction::Left) std::swap(src, dst);
                    EntityId id = store_.create_edge(
                        ep.types[0], src, dst, eval_properties(ep.properties, binding, summary));
                    ++summary.edges_created;
                    if (ep.variable) binding[*ep.variable] = EdgeRef{id};
                }
            }
        }
        return rows;
    }

    std::vector<Binding> exec_merge(const MergeClause& m, std::vector<Binding> rows,
                                    MutationSummary& summary) {
        for (Binding& binding : rows) {
            const Node* found = nullptr;
            for (const Node& node : store_.nodes()) {
                if (node_matches(node, m.node, binding)) {
                    found = &node;
                    break;
                }
            }
            EntityId id;
            if (found) {
                id = found->id;
            } else {
                id = store_.create_node(m.node.labels,
                                        eval_properties(m.node.properties, binding, summary));
                ++summary.nodes_created;
            }
            if (m.node.variable) binding[*m.node.variable] = NodeRef{id};
        }
        return rows;
    }

    void exec_set(const SetClause& s, std::vector<Binding>& rows, MutationSummary& summary) {
        for (Binding& binding : rows) {
            for (const auto& item : s.items) {
                auto it = binding.find(item.variable);
                if (it == binding.end() || is_null_bound(it->second)) continue;
                Value v = eval(*item.value, binding);
                if (const auto* nr = std::get_if<NodeRef>(&it->second)) {
                    Node* node = store_.mutable_node(nr->id);
                    if (!node) continue;
                    if (v.is_null()) {
                        node->properties.erase(item.property);
                    } else {
                        node->properties[item.property] = std::move(v);
                    }
                    ++summary.properties_set;
                }
                // SET on relationships is out of subset scope; edges are
                // created with inline properties only.
            }
        }
    }

    // ---- projection ----

    int bound_compare(const Bound& a, const Bound& b) const {
        auto rank = [](const Bound& x) {
            if (std::holds_alternative<Value>(x)) return 0;
            if (std::holds_alternative<NodeRef>(x)) return 1;
            if (std::holds_alternative<EdgeRef>(x)) return 2;
            if (std::holds_alternative<PathRef>(x)) return 3;
            return 4;
        };
        if (rank(a) != rank(b)) return rank(a) < rank(b) ? -1 : 1;
        if (const auto* va = std::get_if<Value>(&a)) {
            return Value::total_compare(*va, std::get<Value>(b));
        }
        if (const auto* na = std::get_if<NodeRef>(&a)) {
            EntityId ib = std::get<NodeRef>(b).id;
            return na->id < ib ? -1 : (na->id > ib ? 1 : 0);
        }
        if (const auto* ea = std::get_if<EdgeRef>(&a)) {
            EntityId ib = std::get<EdgeRef>(b).id;
            return ea->id < ib ? -1 : (ea->id > ib ? 1 : 0);
        }
        // Paths and edge lists compare by projected value.
        return Value::total_compare(to_value(a), to_value(b));
    }

    struct ProjectedRows {
        std::vector<std::string> names;
        std::vector<std::vector<Bound>> rows;
    };

    ProjectedRows project_rows(const Projection& p, std::vector<Binding>& rows) {
        ProjectedRows out;
        for (const auto& item : p.items) out.names.push_back(item.output_name());

        bool aggregated = std::any_of(p.items.begin(), p.items.end(), [](const auto& item) {
            return contains_aggregate(*item.expr);
        });

        if (!aggregated) {
            for (const Binding& binding : rows) {
                std::vector<Bound> row;
                row.reserve(p.items.size());
                for (const auto& item : p.items) row.push_back(eval_bound(*item.expr, binding));
                out.rows.push_back(std::move(row));
            }
            return out;
        }

        // Group by the non-aggregated items, in first-appearance order.
        std::vector<size_t> key_items, agg_items;
        for (size_t i = 0; i < p.items.size(); ++i) {
            if (contains_aggregate(*p.items[i].expr)) {
                const auto* fn = std::get_if<FnCall>(&p.items[i].expr->node);
                if (!fn || !is_aggregate_fn(fn->name)) {
                    throw ExecError(
                        "aggregates must appear as a bare function call in a projection");
                }
                agg_items.push_back(i);
            } else {
                key_items.push_back(i);
            }
        }

        struct Group {
            std::vector<Bound> key;
            std::vector<const Binding*> members;
        };
        std::vector<Group> groups;
        for (const Binding& binding : rows) {
            std::vector<Bound> key;
            for (size_t i : key_items) key.push_back(eval_bound(*p.items[i].expr, binding));
            Group* group = nullptr;
            for (auto& g : groups) {
                bool equal = true;
                for (size_t k = 0; k < key.size(); ++k) {
                    if (bound_compare(g.key[k], key[k]) != 0) {
                        equal = false;
                        break;
                    }
                }
                if (equal) {
                    group = &g;
                    break;
                }
            }
            if (!group) {
                groups.push_back({std::move(key), {}});
                group = &groups.back();
            }
            group->members.push_back(&binding);
        }
        // With no grouping keys and no input rows there is still one
        // (empty) group, so count(*) over nothing yields 0.
        if (groups.empty() && key_items.empty()) groups.push_back({{}, {}});

        for (const auto& group : groups) {
            std::vector<Bound> row(p.items.size(), Value::null());
            for (size_t k = 0; k < key_items.size(); ++k) row[key_items[k]] = group.key[k];
            for (size_t i : agg_items) {
                const auto& fn = std::get<FnCall>(p.items[i].expr->node);
                row[i] = compute_aggregate(fn, group.members);
            }
            out.rows.push_back(std::move(row));
        }
        return out;
    }

    Value compute_aggregate(const FnCall& fn, const std::vector<const Binding*>& members) {
        if (fn.star) {
            return Value::integer(static_cast<int64_t>(members.size()));
        }
        std::vector<Value> values;
        for (const Binding* binding : members) {
            Value v = eval(*fn.args.at(0), *binding);
            if (!v.is_null()) values.push_back(std::move(v));
        }
        if (fn.distinct) {
            std::vector<Value> unique;
            for (const auto& v : values) {
                bool seen = std::any_of(unique.begin(), unique.end(), [&](const Value& u) {
                    return Value::total_compare(u, v) == 0;
                });
                if (!seen) unique.push_back(v);
            }
            values = std::move(unique);
        }
        if (fn.name == "count") {
            return Value::integer(static_cast<int64_t>(values.size()));
        }
        if (fn.name == "collect") {
            return Value::list(values);
        }
        if (fn.name == "sum") {
            bool all_int = true;
            double total = 0;
            int64_t itotal = 0;
            for (const auto& v : values) {
                if (!v.is_numeric()) return Value::null();
                if (v.tag() == Value::Tag::Float) all_int = false;
                total += v.as_number();
                if (v.tag() == Value::Tag::Integer) itotal += v.as_integer();
            }
            return all_int ? Value::integer(itotal) : Value::floating(total);
        }
        if (fn.name == "avg") {
            if (values.empty()) return Value::null();
            double total = 0;
            for (const auto& v : values) {
                if (!v.is_numeric()) return Value::null();
                total += v.as_number();
            }
            return Value::floating(total / static_cast<double>(values.size()));
        }
        if (fn.name == "min" || fn.name == "max") {
            if (values.empty()) return Value::null();
            Value best = values[0];
            for (const auto& v : values) {
                int c = Value::total_compare(v, best);
                if ((fn.name == "min" && c < 0) || (fn.name == "max" && c > 0)) best = v;
            }
            return best;
        }
        throw ExecError(fmt::format("unknown aggregate {}()", fn.name));
    }

    void order_and_page(const Projection& p, ProjectedRows& projected,
                        const std::vector<Binding>* source_rows) {
        if (p.distinct) {
            std::vector<std::vector<Bound>> unique;
            for (auto& row : projected.rows) {
                bool seen = std::any_of(
                    unique.begin(), unique.end(), [&](const std::vector<Bound>& u) {
                        for (size_t i = 0; i < row.size(); ++i) {
                            if (bound_compare(u[i], row[i]) != 0) return false;
                        }
                        return true;
                    });
                if (!seen) unique.push_back(std::move(row));
            }
            projected.rows = std::move(unique);
            source_rows = nullptr;  // underlying bindings no longer align
        }

        if (!p.order_by.empty()) {
            // Sort keys evaluate against the projected outputs, falling back
            // to the pre-projection binding when available.
            struct Keyed {
                std::vector<Value> keys;
                std::vector<Bound> row;
            };
            std::vector<Keyed> keyed;
            keyed.reserve(projected.rows.size());
            for (size_t r = 0; r < projected.rows.size(); ++r) {
                Binding scope;
                if (source_rows && r < source_rows->size()) scope = (*source_rows)[r];
                for (size_t i = 0; i < projected.names.size(); ++i) {
                    scope[projected.names[i]] = projected.rows[r][i];
                }
                Keyed k;
                for (const auto& s : p.order_by) k.keys.push_back(eval(*s.expr, scope));
                k.row = std::move(projected.rows[r]);
                keyed.push_back(std::move(k));
            }
            std::stable_sort(keyed.begin(), keyed.end(), [&](const Keyed& a, const Keyed& b) {
                for (size_t i = 0; i < p.order_by.size(); ++i) {
                    int c = Value::total_compare(a.keys[i], b.keys[i]);
                    if (c != 0) return p.order_by[i].ascending ? c < 0 : c > 0;
                }
                // Ties break by full-row lexicographic comparison.
                for (size_t i = 0; i < a.row.size(); ++i) {
                    int c = bound_compare(a.row[i], b.row[i]);
                    if (c != 0) return c < 0;
                }
                return false;
            });
            projected.rows.clear();
            for (auto& k : keyed) projected.rows.push_back(std::move(k.row));
        }

        size_t skip = p.skip ? static_cast<size_t>(std::max<int64_t>(0, *p.skip)) : 0;
        if (skip >= projected.rows.size()) {
            projected.rows.clear();
        } else if (skip > 0) {
            projected.rows.erase(projected.rows.begin(),
                                 projected.rows.begin() + static_cast<ptrdiff_t>(skip));
        }
        if (p.limit && projected.rows.size() > static_cast<size_t>(std::max<int64_t>(0, *p.limit))) {
            projected.rows.resize(static_cast<size_t>(std::max<int64_t>(0, *p.limit)));
        }
    }

    std::vector<Binding> project_with(const Projection& p, std::vector<Binding> rows) {
        ProjectedRows projected = project_rows(p, rows);

        // WITH ... WHERE filters the projected rows.
        if (p.where) {
            std::vector<std::vector<Bound>> kept;
            std::vector<Binding> kept_sources;
            for (size_t r = 0; r < projected.rows.size(); ++r) {
                Binding scope;
                if (r < rows.size()) scope = rows[r];
                for (size_t i = 0; i < projected.names.size(); ++i) {
                    scope[projected.names[i]] = projected.rows[r][i];
                }
                Value keep = eval(*p.where, scope);
                if (keep.tag() == Value::Tag::Boolean && keep.as_boolean()) {
                    kept.push_back(std::move(projected.rows[r]));
                    if (r < rows.size()) kept_sources.push_back(rows[r]);
                }
            }
            projected.rows = std::move(kept);
            rows = std::move(kept_sources);
        }

        order_and_page(p, projected, rows.size() == projected.rows.size() ? &rows : nullptr);

        std::vector<Binding> out;
        out.reserve(projected.rows.size());
        for (const auto& row : projected.rows) {
            Binding b;
            for (size_t i = 0; i < projected.names.size(); ++i) b[projected.names[i]] = row[i];
            out.push_back(std::move(b));
        }
        return out;
    }

    ResultTable project_return(const Projection& p, std::vector<Binding> rows) {
        ProjectedRows projected = project_rows(p, rows);
        order_and_page(p, projected, rows.size() == projected.rows.size() ? &rows : nullptr);
        ResultTable table;
        table.columns = projected.names;
        for (const auto& row : projected.rows) {
            std::vector<Value> cells;
            cells.reserve(row.size());
            for (const auto& b : row) cells.push_back(to_value(b));
            table.rows.push_back(std::move(cells));
        }
        return table;
    }

    GraphStore& store_;
};

}  // namespace

bool ResultTable::operator==(const ResultTable& other) const {
    if (columns != other.columns || rows.size() != other.rows.size()) return false;
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != other.rows[r].size()) return false;
        for (size_t c = 0; c < rows[r].size(); ++c) {
            if (Value::total_compare(rows[r][c], other.rows[r][c]) != 0) return false;
        }
    }
    return true;
}

Json ResultTable::to_json() const {
    Json j;
    j["columns"] = columns;
    j["rows"] = Json::array();
    for (const auto& row : rows) {
        Json r = Json::array();
        for (const auto& v : row) r.push_back(v.to_json());
        j["rows"].push_back(std::move(r));
    }
    return j;
}

ResultTable ResultTable::from_json(const Json& j) {
    ResultTable t;
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
        std::vector<Value> cells;
        for (const auto& v : row) cells.push_back(Value::from_json(v));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

ExecOutcome execute_statement(GraphStore& store, const ast::Query& query) {
    Evaluator evaluator(store);
    return evaluator.run(query);
}

ResultTable execute(GraphStore& store, const ast::Query& query) {
    return execute_statement(store, query).table;
}

MutationSummary apply(GraphStore& store, const std::vector<ast::Query>& statements) {
    MutationSummary total;
    for (size_t i = 0; i < statements.size(); ++i) {
        try {
            total += execute_statement(store, statements[i]).mutations;
        } catch (const ExecError& e) {
            throw ExecError(i, e.cause());
        }
    }
    return total;
}

MutationSummary apply_text(GraphStore& store, const std::vector<std::string>& statements) {
    MutationSummary total;
    for (size_t i = 0; i < statements.size(); ++i) {
        try {
            total += execute_statement(store, parse_cypher(statements[i])).mutations;
        } catch (const QueryError& e) {
            throw ExecError(i, e.what());
        } catch (const ExecError& e) {
            throw ExecError(i, e.cause());
        }
    }
    return total;
}

}  // namespace cypherforge::graph
