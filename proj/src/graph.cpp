#include <rsm/error.hpp>
#include <rsm/graph.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace rsm {

namespace {

std::string node_str(NodeId v) { return "node " + std::to_string(v); }

bool less_id(const Neighbor &a, NodeId b) { return a.id < b; }

template <class... Ts> struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

} // namespace

std::string mutation_name(const Mutation &m) {
    return std::visit(overloaded{
                          [](const mutation::AddNode &) { return std::string("add_node"); },
                          [](const mutation::DeleteNode &) { return std::string("delete_node"); },
                          [](const mutation::ReviveNode &) { return std::string("revive_node"); },
                          [](const mutation::AddEdge &) { return std::string("add_edge"); },
                          [](const mutation::DeleteEdge &) { return std::string("delete_edge"); },
                          [](const mutation::SetLabel &) { return std::string("set_label"); },
                          [](const mutation::ClearLabel &) { return std::string("clear_label"); },
                          [](const mutation::SetFeature &) { return std::string("set_feature"); },
                      },
                      m);
}

AttributedGraph::AttributedGraph(std::size_t node_count, std::size_t feature_dim, std::size_t class_count)
    : adjacency_(node_count), alive_(node_count, 1), labels_(node_count, kUnlabeled), names_(node_count),
      features_(node_count, feature_dim), class_count_(class_count), live_count_(node_count) {
    for (std::size_t i = 0; i < node_count; ++i)
        names_[i] = std::to_string(i);
    for (std::size_t c = 0; c < class_count; ++c)
        class_names_.push_back(std::to_string(c));
}

void AttributedGraph::check_node(NodeId v) const {
    if (!alive(v))
        throw Error(ErrorCode::invalid_node, node_str(v) + " does not exist");
}

void AttributedGraph::insert_half_edge(NodeId from, NodeId to, double weight) {
    auto &row = adjacency_[from];
    auto it = std::lower_bound(row.begin(), row.end(), to, less_id);
    row.insert(it, Neighbor{to, weight});
}

void AttributedGraph::erase_half_edge(NodeId from, NodeId to) {
    auto &row = adjacency_[from];
    auto it = std::lower_bound(row.begin(), row.end(), to, less_id);
    row.erase(it);
}

void AttributedGraph::add_edge(NodeId u, NodeId v, double weight) {
    check_node(u);
    check_node(v);
    if (u == v)
        throw Error(ErrorCode::invariant_violation, "self-loop on " + node_str(u));
    if (!(weight > 0.0) || !std::isfinite(weight))
        throw Error(ErrorCode::invariant_violation, "edge weight must be positive and finite");
    if (has_edge(u, v))
        throw Error(ErrorCode::invariant_violation,
                    "duplicate edge " + std::to_string(u) + "-" + std::to_string(v));
    insert_half_edge(u, v, weight);
    insert_half_edge(v, u, weight);
    ++edge_count_;
}

void AttributedGraph::set_label(NodeId v, ClassId label) {
    check_node(v);
    if (label != kUnlabeled && (label < 0 || static_cast<std::size_t>(label) >= class_count_))
        throw Error(ErrorCode::invariant_violation,
                    "class " + std::to_string(label) + " outside [0, " + std::to_string(class_count_) + ")");
    labels_[v] = label;
}

void AttributedGraph::set_features(NodeId v, std::span<const double> values) {
    check_node(v);
    if (values.size() != features_.cols())
        throw Error(ErrorCode::dimension, "feature row of width " + std::to_string(values.size()) +
                                              ", expected " + std::to_string(features_.cols()));
    std::copy(values.begin(), values.end(), features_.row(v).begin());
}

void AttributedGraph::set_node_name(NodeId v, std::string name) {
    if (v >= names_.size())
        throw Error(ErrorCode::invalid_node, node_str(v) + " does not exist");
    names_[v] = std::move(name);
}

void AttributedGraph::set_class_names(std::vector<std::string> names) {
    if (names.size() != class_count_)
        throw Error(ErrorCode::dimension, "expected " + std::to_string(class_count_) + " class names");
    class_names_ = std::move(names);
}

std::vector<NodeId> AttributedGraph::live_nodes() const {
    std::vector<NodeId> out;
    out.reserve(live_count_);
    for (NodeId v = 0; v < adjacency_.size(); ++v)
        if (alive_[v])
            out.push_back(v);
    return out;
}

std::span<const Neighbor> AttributedGraph::neighbors(NodeId v) const {
    if (v >= adjacency_.size())
        throw Error(ErrorCode::invalid_node, node_str(v) + " does not exist");
    return adjacency_[v];
}

bool AttributedGraph::has_edge(NodeId u, NodeId v) const { return edge_weight(u, v) > 0.0; }

double AttributedGraph::edge_weight(NodeId u, NodeId v) const {
    if (u >= adjacency_.size() || v >= adjacency_.size())
        return 0.0;
    const auto &row = adjacency_[u].size() <= adjacency_[v].size() ? adjacency_[u] : adjacency_[v];
    const NodeId target = adjacency_[u].size() <= adjacency_[v].size() ? v : u;
    auto it = std::lower_bound(row.begin(), row.end(), target, less_id);
    return (it != row.end() && it->id == target) ? it->weight : 0.0;
}

ClassId AttributedGraph::label(NodeId v) const {
    if (v >= labels_.size())
        throw Error(ErrorCode::invalid_node, node_str(v) + " does not exist");
    return alive_[v] ? labels_[v] : kUnlabeled;
}

std::span<const double> AttributedGraph::features(NodeId v) const {
    if (v >= adjacency_.size())
        throw Error(ErrorCode::invalid_node, node_str(v) + " does not exist");
    return features_.row(v);
}

const std::string &AttributedGraph::node_name(NodeId v) const {
    if (v >= names_.size())
        throw Error(ErrorCode::invalid_node, node_str(v) + " does not exist");
    return names_[v];
}

ChangeRecord AttributedGraph::apply(const Mutation &m) {
    ChangeRecord record;
    std::visit(
        overloaded{
            [&](const mutation::AddNode &op) {
                if (!op.features.empty() && op.features.size() != features_.cols())
                    throw Error(ErrorCode::dimension, "feature row of width " + std::to_string(op.features.size()) +
                                                          ", expected " + std::to_string(features_.cols()));
                if (op.label != kUnlabeled &&
                    (op.label < 0 || static_cast<std::size_t>(op.label) >= class_count_))
                    throw Error(ErrorCode::invariant_violation, "class " + std::to_string(op.label) + " out of range");
                const auto v = static_cast<NodeId>(adjacency_.size());
                adjacency_.emplace_back();
                alive_.push_back(1);
                labels_.push_back(op.label);
                names_.push_back(op.name.empty() ? std::to_string(v) : op.name);
                if (op.features.empty())
                    features_.append_row(0.0);
                else
                    features_.append_row(op.features);
                ++live_count_;
                record.touched = {v};
                record.inverse = {mutation::DeleteNode{v}};
                record.structural = true;
            },
            [&](const mutation::DeleteNode &op) {
                check_node(op.node);
                record.touched.push_back(op.node);
                record.inverse.push_back(mutation::ReviveNode{op.node});
                for (const auto &nb : adjacency_[op.node]) {
                    record.touched.push_back(nb.id);
                    record.inverse.push_back(mutation::AddEdge{op.node, nb.id, nb.weight});
                    erase_half_edge(nb.id, op.node);
                    --edge_count_;
                }
                adjacency_[op.node].clear();
                alive_[op.node] = 0;
                --live_count_;
                record.structural = true;
            },
            [&](const mutation::ReviveNode &op) {
                if (op.node >= adjacency_.size() || alive_[op.node])
                    throw Error(ErrorCode::invalid_node, node_str(op.node) + " is not a deleted node");
                alive_[op.node] = 1;
                ++live_count_;
                record.touched = {op.node};
                record.inverse = {mutation::DeleteNode{op.node}};
                record.structural = true;
            },
            [&](const mutation::AddEdge &op) {
                add_edge(op.u, op.v, op.weight);
                record.touched = {op.u, op.v};
                record.inverse = {mutation::DeleteEdge{op.u, op.v}};
                record.structural = true;
            },
            [&](const mutation::DeleteEdge &op) {
                check_node(op.u);
                check_node(op.v);
                const double w = edge_weight(op.u, op.v);
                if (w == 0.0)
                    throw Error(ErrorCode::invariant_violation,
                                "no edge " + std::to_string(op.u) + "-" + std::to_string(op.v));
                erase_half_edge(op.u, op.v);
                erase_half_edge(op.v, op.u);
                --edge_count_;
                record.touched = {op.u, op.v};
                record.inverse = {mutation::AddEdge{op.u, op.v, w}};
                record.structural = true;
            },
            [&](const mutation::SetLabel &op) {
                check_node(op.node);
                if (op.label == kUnlabeled)
                    throw Error(ErrorCode::invariant_violation, "use clear_label to remove a label");
                const ClassId old = labels_[op.node];
                set_label(op.node, op.label);
                record.touched = {op.node};
                if (old == kUnlabeled)
                    record.inverse = {mutation::ClearLabel{op.node}};
                else
                    record.inverse = {mutation::SetLabel{op.node, old}};
            },
            [&](const mutation::ClearLabel &op) {
                check_node(op.node);
                const ClassId old = labels_[op.node];
                labels_[op.node] = kUnlabeled;
                record.touched = {op.node};
                if (old == kUnlabeled)
                    record.inverse = {mutation::ClearLabel{op.node}};
                else
                    record.inverse = {mutation::SetLabel{op.node, old}};
            },
            [&](const mutation::SetFeature &op) {
                check_node(op.node);
                if (op.column >= features_.cols())
                    throw Error(ErrorCode::dimension, "feature column " + std::to_string(op.column) + " out of range");
                if (!std::isfinite(op.value))
                    throw Error(ErrorCode::invariant_violation, "feature values must be finite");
                const double old = features_(op.node, op.column);
                features_(op.node, op.column) = op.value;
                record.touched = {op.node};
                record.inverse = {mutation::SetFeature{op.node, op.column, old}};
            },
        },
        m);
    std::sort(record.touched.begin(), record.touched.end());
    record.touched.erase(std::unique(record.touched.begin(), record.touched.end()), record.touched.end());
    record.version = ++version_;
    return record;
}

bool operator==(const AttributedGraph &a, const AttributedGraph &b) {
    if (a.class_count_ != b.class_count_ || a.features_.cols() != b.features_.cols() ||
        a.live_count_ != b.live_count_ || a.edge_count_ != b.edge_count_)
        return false;
    const std::size_t bound = std::max(a.capacity(), b.capacity());
    for (NodeId v = 0; v < bound; ++v) {
        const bool la = a.alive(v);
        if (la != b.alive(v))
            return false;
        if (!la)
            continue;
        if (a.labels_[v] != b.labels_[v] || a.adjacency_[v] != b.adjacency_[v])
            return false;
        auto fa = a.features_.row(v);
        auto fb = b.features_.row(v);
        if (!std::equal(fa.begin(), fa.end(), fb.begin()))
            return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

NodePartition::NodePartition(const AttributedGraph &g, std::vector<ClassId> labels) : labels_(std::move(labels)) {
    if (labels_.size() != g.capacity())
        throw Error(ErrorCode::alignment, "label vector does not match graph capacity");
    for (NodeId v = 0; v < labels_.size(); ++v) {
        if (!g.alive(v)) {
            labels_[v] = kUnlabeled;
            continue;
        }
        const ClassId c = labels_[v];
        if (c == kUnlabeled) {
            unlabeled_.push_back(v);
        } else if (c < 0 || static_cast<std::size_t>(c) >= g.class_count()) {
            throw Error(ErrorCode::invariant_violation, "class " + std::to_string(c) + " out of range");
        } else {
            labeled_.push_back(v);
        }
    }
}

NodePartition NodePartition::from_graph(const AttributedGraph &g) { return NodePartition(g, g.labels()); }

NodePartition NodePartition::masked(std::span<const NodeId> hidden) const {
    NodePartition out = *this;
    for (NodeId v : hidden)
        if (v < out.labels_.size())
            out.labels_[v] = kUnlabeled;
    out.labeled_.clear();
    for (NodeId v : labeled_)
        if (out.labels_[v] != kUnlabeled)
            out.labeled_.push_back(v);
    std::vector<NodeId> newly(hidden.begin(), hidden.end());
    std::sort(newly.begin(), newly.end());
    std::vector<NodeId> merged;
    for (NodeId v : newly)
        if (v < labels_.size() && labels_[v] != kUnlabeled)
            merged.push_back(v);
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    std::vector<NodeId> all;
    std::merge(unlabeled_.begin(), unlabeled_.end(), merged.begin(), merged.end(), std::back_inserter(all));
    out.unlabeled_ = std::move(all);
    return out;
}

std::vector<std::size_t> NodePartition::class_counts(std::size_t class_count) const {
    std::vector<std::size_t> counts(class_count, 0);
    for (NodeId v : labeled_)
        ++counts[static_cast<std::size_t>(labels_[v])];
    return counts;
}

// ---------------------------------------------------------------------------

BallFinder::BallFinder(const AttributedGraph &g) : graph_(&g), stamp_(g.capacity(), 0) {}

void BallFinder::next_epoch() {
    if (stamp_.size() < graph_->capacity())
        stamp_.resize(graph_->capacity(), 0);
    if (++epoch_ == 0) {
        std::fill(stamp_.begin(), stamp_.end(), 0);
        epoch_ = 1;
    }
    members_.clear();
}

std::span<const NodeId> BallFinder::find(NodeId v, int hops) {
    if (!graph_->alive(v))
        throw Error(ErrorCode::invalid_node, node_str(v) + " does not exist");
    if (hops < 1)
        throw Error(ErrorCode::parameter, "hop count must be at least 1");
    next_epoch();
    stamp_[v] = epoch_;
    frontier_.assign(1, v);
    for (int depth = 0; depth < hops && !frontier_.empty(); ++depth) {
        next_.clear();
        for (NodeId u : frontier_)
            for (const auto &nb : graph_->neighbors(u))
                if (stamp_[nb.id] != epoch_) {
                    stamp_[nb.id] = epoch_;
                    next_.push_back(nb.id);
                    members_.push_back(nb.id);
                }
        frontier_.swap(next_);
    }
    // v itself is stamped only to stop the search from re-entering it.
    stamp_[v] = epoch_ - 1;
    std::sort(members_.begin(), members_.end());
    return members_;
}

std::span<const NodeId> BallFinder::find_around(std::span<const NodeId> seeds, int radius) {
    next_epoch();
    frontier_.clear();
    for (NodeId s : seeds)
        if (s < stamp_.size() && stamp_[s] != epoch_) {
            stamp_[s] = epoch_;
            frontier_.push_back(s);
            members_.push_back(s);
        }
    for (int depth = 0; depth < radius && !frontier_.empty(); ++depth) {
        next_.clear();
        for (NodeId u : frontier_)
            for (const auto &nb : graph_->neighbors(u))
                if (stamp_[nb.id] != epoch_) {
                    stamp_[nb.id] = epoch_;
                    next_.push_back(nb.id);
                    members_.push_back(nb.id);
                }
        frontier_.swap(next_);
    }
    std::sort(members_.begin(), members_.end());
    return members_;
}

std::vector<NodeId> neighborhood(const AttributedGraph &g, NodeId v, int hops) {
    BallFinder finder(g);
    auto ball = finder.find(v, hops);
    return {ball.begin(), ball.end()};
}

InducedSubgraph induced_subgraph(const AttributedGraph &g, std::span<const NodeId> nodes) {
    std::vector<NodeId> ids(nodes.begin(), nodes.end());
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<NodeId> local(g.capacity(), static_cast<NodeId>(-1));
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!g.alive(ids[i]))
            throw Error(ErrorCode::invalid_node, node_str(ids[i]) + " does not exist");
        local[ids[i]] = static_cast<NodeId>(i);
    }
    AttributedGraph sub(ids.size(), g.feature_dim(), g.class_count());
    sub.set_class_names(g.class_names());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const NodeId v = ids[i];
        const auto li = static_cast<NodeId>(i);
        sub.set_node_name(li, g.node_name(v));
        sub.set_features(li, g.features(v));
        sub.set_label(li, g.label(v));
        for (const auto &nb : g.neighbors(v))
            if (local[nb.id] != static_cast<NodeId>(-1) && nb.id > v)
                sub.add_edge(li, local[nb.id], nb.weight);
    }
    return {std::move(sub), std::move(ids)};
}

} // namespace rsm
