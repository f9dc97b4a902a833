#pragma once

#include <rsm/matrix.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rsm {

using NodeId = std::uint32_t;
using ClassId = int;

inline constexpr ClassId kUnlabeled = -1;

struct Neighbor {
    NodeId id;
    double weight;

    friend bool operator==(const Neighbor &, const Neighbor &) = default;
};

namespace mutation {

struct AddNode {
    std::vector<double> features; // empty means all-zero row
    ClassId label = kUnlabeled;
    std::string name;
};
struct DeleteNode {
    NodeId node;
};
/// Brings a deleted node back under its old id with its stored features.
struct ReviveNode {
    NodeId node;
};
struct AddEdge {
    NodeId u;
    NodeId v;
    double weight = 1.0;
};
struct DeleteEdge {
    NodeId u;
    NodeId v;
};
struct SetLabel {
    NodeId node;
    ClassId label;
};
struct ClearLabel {
    NodeId node;
};
struct SetFeature {
    NodeId node;
    std::size_t column;
    double value;
};

} // namespace mutation

using Mutation = std::variant<mutation::AddNode, mutation::DeleteNode, mutation::ReviveNode, mutation::AddEdge,
                              mutation::DeleteEdge, mutation::SetLabel, mutation::ClearLabel,
                              mutation::SetFeature>;

std::string mutation_name(const Mutation &m);

/// Result of an accepted mutation.
struct ChangeRecord {
    std::vector<NodeId> touched;    // sorted, unique
    std::vector<Mutation> inverse;  // applying these in order undoes the change
    std::uint64_t version = 0;      // graph version after the mutation
    bool structural = false;        // edges or node set changed
};

/// Undirected attributed graph with partial labels.
///
/// Node ids are stable: deletion leaves a tombstone, so ids held by callers
/// (the service, the UI) stay valid. `capacity()` is the id bound and
/// `node_count()` the number of live nodes. Neighbor lists are kept sorted by
/// id, one row per node.
class AttributedGraph {
public:
    AttributedGraph() = default;
    AttributedGraph(std::size_t node_count, std::size_t feature_dim, std::size_t class_count);

    // Ingest-time construction. These validate like the mutation API but do
    // not bump the version.
    void add_edge(NodeId u, NodeId v, double weight = 1.0);
    void set_label(NodeId v, ClassId label);
    void set_features(NodeId v, std::span<const double> values);
    void set_node_name(NodeId v, std::string name);
    void set_class_names(std::vector<std::string> names);

    std::size_t capacity() const noexcept { return adjacency_.size(); }
    std::size_t node_count() const noexcept { return live_count_; }
    std::size_t edge_count() const noexcept { return edge_count_; }
    std::size_t feature_dim() const noexcept { return features_.cols(); }
    std::size_t class_count() const noexcept { return class_count_; }
    std::uint64_t version() const noexcept { return version_; }

    bool alive(NodeId v) const noexcept { return v < adjacency_.size() && alive_[v] != 0; }
    std::vector<NodeId> live_nodes() const;

    std::span<const Neighbor> neighbors(NodeId v) const;
    std::size_t degree(NodeId v) const { return neighbors(v).size(); }
    bool has_edge(NodeId u, NodeId v) const;
    /// Weight of edge (u, v), or 0 when absent.
    double edge_weight(NodeId u, NodeId v) const;

    ClassId label(NodeId v) const;
    bool is_labeled(NodeId v) const { return label(v) != kUnlabeled; }
    const std::vector<ClassId> &labels() const noexcept { return labels_; }

    std::span<const double> features(NodeId v) const;
    const Matrix &feature_matrix() const noexcept { return features_; }

    const std::string &node_name(NodeId v) const;
    const std::vector<std::string> &class_names() const noexcept { return class_names_; }

    /// Applies a mutation atomically: on error the graph is left unchanged.
    ChangeRecord apply(const Mutation &m);

    /// Live-structure equality: same live ids, edges, weights, labels, features.
    friend bool operator==(const AttributedGraph &a, const AttributedGraph &b);

private:
    void check_node(NodeId v) const;
    void insert_half_edge(NodeId from, NodeId to, double weight);
    void erase_half_edge(NodeId from, NodeId to);

    std::vector<std::vector<Neighbor>> adjacency_;
    std::vector<char> alive_;
    std::vector<ClassId> labels_;
    std::vector<std::string> names_;
    std::vector<std::string> class_names_;
    Matrix features_;
    std::size_t class_count_ = 0;
    std::size_t live_count_ = 0;
    std::size_t edge_count_ = 0;
    std::uint64_t version_ = 0;
};

/// The labeled / unlabeled split of the live nodes. Holds its own label
/// vector so that evaluation can hide labels without touching the graph.
class NodePartition {
public:
    NodePartition() = default;
    /// Labels are indexed by node id; entries for dead nodes are ignored.
    NodePartition(const AttributedGraph &g, std::vector<ClassId> labels);

    static NodePartition from_graph(const AttributedGraph &g);

    ClassId label(NodeId v) const { return v < labels_.size() ? labels_[v] : kUnlabeled; }
    bool is_labeled(NodeId v) const { return label(v) != kUnlabeled; }
    std::span<const NodeId> labeled() const noexcept { return labeled_; }
    std::span<const NodeId> unlabeled() const noexcept { return unlabeled_; }
    const std::vector<ClassId> &labels() const noexcept { return labels_; }

    /// Copy with the labels of `hidden` removed.
    NodePartition masked(std::span<const NodeId> hidden) const;

    /// Number of labeled nodes per class.
    std::vector<std::size_t> class_counts(std::size_t class_count) const;

    friend bool operator==(const NodePartition &, const NodePartition &) = default;

private:
    std::vector<ClassId> labels_;
    std::vector<NodeId> labeled_;
    std::vector<NodeId> unlabeled_;
};

/// All live nodes at shortest-path distance 1..hops from v, ascending.
std::vector<NodeId> neighborhood(const AttributedGraph &g, NodeId v, int hops);

/// Repeated h-ball queries without reallocating. Not thread-safe; give each
/// worker its own instance.
class BallFinder {
public:
    explicit BallFinder(const AttributedGraph &g);

    /// Computes the h-ball of v (excluding v). Afterwards contains() answers
    /// membership in O(1) until the next call.
    std::span<const NodeId> find(NodeId v, int hops);
    /// Multi-source ball: every live node within `radius` of any seed, seeds included.
    std::span<const NodeId> find_around(std::span<const NodeId> seeds, int radius);
    bool contains(NodeId u) const noexcept { return u < stamp_.size() && stamp_[u] == epoch_; }

private:
    void next_epoch();

    const AttributedGraph *graph_;
    std::vector<std::uint32_t> stamp_;
    std::vector<NodeId> members_;
    std::vector<NodeId> frontier_;
    std::vector<NodeId> next_;
    std::uint32_t epoch_ = 0;
};

/// Subgraph induced by `nodes` (any order, deduplicated). Node i of the result
/// is the i-th smallest selected id; labels, names and features carry over.
struct InducedSubgraph {
    AttributedGraph graph;
    std::vector<NodeId> original_ids;
};
InducedSubgraph induced_subgraph(const AttributedGraph &g, std::span<const NodeId> nodes);

} // namespace rsm
