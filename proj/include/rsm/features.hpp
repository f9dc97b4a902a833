#pragma once

#include <rsm/graph.hpp>
#include <rsm/matrix.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rsm {

enum class FeatureFamily { raw, topology, relational_class, relational_attr, meta };
enum class Normalization { none, minmax_column, l1_row };
enum class Aggregation { mean, sum, max };

std::string_view to_string(FeatureFamily f) noexcept;
std::string_view to_string(Normalization n) noexcept;
std::string_view to_string(Aggregation a) noexcept;
Normalization parse_normalization(std::string_view s);
Aggregation parse_aggregation(std::string_view s);

struct ColumnDescriptor {
    std::string name;
    FeatureFamily family;

    friend bool operator==(const ColumnDescriptor &, const ColumnDescriptor &) = default;
};

/// Node-aligned feature columns with their descriptors and the normalization
/// that was last applied.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    explicit FeatureMatrix(std::size_t rows) : values_(rows, 0) {}
    FeatureMatrix(Matrix values, std::vector<ColumnDescriptor> columns,
                  Normalization state = Normalization::none);

    std::size_t rows() const noexcept { return values_.rows(); }
    std::size_t cols() const noexcept { return values_.cols(); }
    const Matrix &values() const noexcept { return values_; }
    Matrix &values() noexcept { return values_; }
    std::span<const double> row(std::size_t r) const { return values_.row(r); }
    const std::vector<ColumnDescriptor> &columns() const noexcept { return columns_; }
    Normalization normalization() const noexcept { return state_; }
    void set_normalization(Normalization n) noexcept { state_ = n; }

    /// Appends the columns of `block`. Throws on row mismatch.
    void append(const FeatureMatrix &block);

private:
    Matrix values_;
    std::vector<ColumnDescriptor> columns_;
    Normalization state_ = Normalization::none;
};

/// Per-column affine map fitted by min-max normalization. Kept so that a
/// later pass can reproduce exactly the same scaling.
struct ColumnScaling {
    std::vector<double> lo;
    std::vector<double> span; // hi - lo; 0 marks a constant column

    void apply(Matrix &m, std::span<const NodeId> rows) const;
    void apply(std::span<double> row) const;

    friend bool operator==(const ColumnScaling &, const ColumnScaling &) = default;
};

/// Fits per-column min/max over the given rows.
ColumnScaling fit_minmax(const Matrix &m, std::span<const NodeId> rows);

/// Normalizes in place over `rows` (other rows are zeroed). Constant columns
/// map to 0; all-zero rows stay zero under L1.
void normalize_rows(FeatureMatrix &f, Normalization scheme, std::span<const NodeId> rows);
/// Normalizes every row.
FeatureMatrix normalize(FeatureMatrix f, Normalization scheme);

// -- graph topology --------------------------------------------------------

struct TopologyOptions {
    /// PageRank and k-core depend on the whole graph; the other columns only
    /// on a node's 2-hop neighbourhood.
    bool include_global = true;
    double damping = 0.85;
    double tolerance = 1e-9;
    int max_iterations = 10000;
};

/// Induced size-3/4 graphlet counts in which the node takes part.
struct GraphletCounts {
    std::uint64_t triangles = 0;
    std::uint64_t star3 = 0; // claws centred on the node
    std::uint64_t clique4 = 0;
    std::uint64_t cycle4 = 0; // chordless 4-cycles through the node

    friend bool operator==(const GraphletCounts &, const GraphletCounts &) = default;
};

/// Scratch-reusing per-node graphlet counter.
class GraphletCounter {
public:
    explicit GraphletCounter(const AttributedGraph &g);
    GraphletCounts count(NodeId v);

private:
    const AttributedGraph *graph_;
    std::vector<std::uint32_t> mark_;
    std::vector<std::uint32_t> hits_;
    std::vector<std::vector<NodeId>> via_;
    std::vector<NodeId> touched_;
    std::uint32_t epoch_ = 0;
};

std::vector<std::uint32_t> core_numbers(const AttributedGraph &g);
std::vector<double> pagerank(const AttributedGraph &g, double damping = 0.85, double tolerance = 1e-9,
                             int max_iterations = 10000);

/// Columns: degree, triangles, clustering, [core, pagerank,] star3, clique4, cycle4.
FeatureMatrix topology_features(const AttributedGraph &g, const TopologyOptions &opts = {});
/// Recomputes the node-local topology columns of `nodes` in place.
/// `f` must come from topology_features(g', opts) with opts.include_global == false.
void refresh_local_topology(FeatureMatrix &f, const AttributedGraph &g, std::span<const NodeId> nodes);

// -- relational features ---------------------------------------------------

/// Per node: aggregate over the h-ball of (one-hot label if labeled, else the
/// node's estimate row), followed by per-class counts of labeled neighbours.
/// 2k columns. `estimates` is capacity x k.
FeatureMatrix relational_class_features(const AttributedGraph &g, const NodePartition &part, const Matrix &estimates,
                                        int hops, Aggregation agg = Aggregation::mean);

/// Per node: aggregate of the raw feature rows over the h-ball. d columns.
FeatureMatrix relational_attr_features(const AttributedGraph &g, int hops, Aggregation agg = Aggregation::mean);

// -- meta features -----------------------------------------------------------

enum MetaFeature : unsigned {
    meta_none = 0,
    meta_estimates = 1u << 0,
    meta_relational_weights = 1u << 1,
    meta_iid_weights = 1u << 2,
    meta_certainty = 1u << 3,
};

struct MetaBlocks {
    const Matrix *estimates = nullptr;
    const Matrix *relational_weights = nullptr;
    const Matrix *iid_weights = nullptr;
    std::span<const double> certainty;
};

/// Appends the selected blocks and re-applies the matrix's current
/// normalization over `rows`.
FeatureMatrix append_meta_features(FeatureMatrix f, const MetaBlocks &blocks, unsigned which,
                                   std::span<const NodeId> rows);
FeatureMatrix append_meta_features(FeatureMatrix f, const MetaBlocks &blocks, unsigned which);

} // namespace rsm
