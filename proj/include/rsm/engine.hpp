#pragma once

#include <rsm/features.hpp>
#include <rsm/graph.hpp>
#include <rsm/matrix.hpp>
#include <rsm/similarity.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

namespace rsm {

/// How unlabeled rows of P are seeded before the collective loop.
enum class PriorMode {
    estimated, // class frequencies, then iid similarity vote, then neighbourhood meshing
    global,    // class frequencies only
    uniform,   // 1/k
};

std::string_view to_string(PriorMode m) noexcept;
PriorMode parse_prior_mode(std::string_view s);

struct FeatureConfig {
    bool raw = true;
    bool topology = true;
    bool topology_global = true; // PageRank and k-core columns
    bool relational_class = true;
    bool relational_attr = true;
    Aggregation aggregation = Aggregation::mean;
    Normalization normalization = Normalization::minmax_column;
    unsigned meta = meta_none; // MetaFeature bits

    friend bool operator==(const FeatureConfig &, const FeatureConfig &) = default;
};

struct Hyperparams {
    double alpha = 0.5; // weight of the neighbour term
    double omega = 0.5; // weight of the previous estimate
    int hops = 1;
    int tau_max = 10;
    KernelSpec kernel;
    bool ssl = true;
    double topk_fraction = 0.1;
    double epsilon = 1e-4;
    int prior_iters = 5;
    double mesh = 0.5;
    PriorMode prior_mode = PriorMode::estimated;
    FeatureConfig features;
    bool use_edge_weight = false;
    unsigned workers = 1;

    void validate() const;

    friend bool operator==(const Hyperparams &, const Hyperparams &) = default;
};

/// Short "key=value;..." rendering of the tunable fields, used in reports.
std::string describe(const Hyperparams &hp);

/// n x k, one probability row per node id.
using PriorMatrix = Matrix;

/// Per-test-node class weights from neighbours (relational) and from
/// everyone else (iid).
struct WeightPair {
    std::vector<double> relational;
    std::vector<double> iid;

    explicit WeightPair(std::size_t k = 0) : relational(k, 0.0), iid(k, 0.0) {}
};

struct NodePrediction {
    NodeId node = 0;
    ClassId label = 0;
    double certainty = 0.0;
    std::vector<double> probabilities;
    bool assigned = false; // frozen by top-k assignment

    friend bool operator==(const NodePrediction &, const NodePrediction &) = default;
};

/// Predictions for the unlabeled nodes, sorted by node id.
struct PredictionSet {
    std::vector<NodePrediction> predictions;

    std::size_t size() const noexcept { return predictions.size(); }
    bool empty() const noexcept { return predictions.empty(); }
    const NodePrediction *find(NodeId v) const;

    friend bool operator==(const PredictionSet &, const PredictionSet &) = default;
};

// -- building blocks -----------------------------------------------------------

/// n_y / |V^l| over the labeled nodes.
std::vector<double> class_frequencies(const NodePartition &part, std::size_t class_count);

/// Unnormalized per-node input features: raw attributes and topology columns
/// as selected by the config.
FeatureMatrix base_features(const AttributedGraph &g, const FeatureConfig &cfg);

/// Class weights w_k = sum over training rows of class k of S(x, z), one row
/// per test row. Ties in the decision resolve to the lowest class.
Matrix iid_scores(const Matrix &test, const Matrix &train, std::span<const ClassId> train_labels,
                  std::size_t class_count, const KernelSpec &kernel);
std::vector<ClassId> classify_iid(const Matrix &test, const Matrix &train, std::span<const ClassId> train_labels,
                                  std::size_t class_count, const KernelSpec &kernel);

/// Seeds P: labeled rows one-hot, unlabeled rows per hp.prior_mode.
/// `features` are the normalized inputs for the iid vote.
PriorMatrix estimate_priors(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp,
                            const Matrix &features);
/// Convenience overload that builds and normalizes base features itself.
PriorMatrix estimate_priors(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp);

/// Adds p_ik * s_ij for every labeled j of class k to w^R (j in the h-ball of i)
/// or to w^I (otherwise). `ball` must hold the h-ball of i.
void accumulate_supervised(NodeId i, const NodePartition &part, const PriorMatrix &P, const Matrix &F,
                           const Hyperparams &hp, const AttributedGraph &g, const BallFinder &ball, WeightPair &out);
WeightPair accumulate_supervised(NodeId i, const AttributedGraph &g, const NodePartition &part, const PriorMatrix &P,
                                 const Matrix &F, const Hyperparams &hp);

/// Adds p_ik * p_jk * s_ij for every unlabeled j != i and every class k.
void accumulate_ssl(NodeId i, const NodePartition &part, const PriorMatrix &P, const Matrix &F, const Hyperparams &hp,
                    const AttributedGraph &g, const BallFinder &ball, WeightPair &out);
WeightPair accumulate_ssl(NodeId i, const AttributedGraph &g, const NodePartition &part, const PriorMatrix &P,
                          const Matrix &F, const Hyperparams &hp);

/// Clips negative entries to zero and scales both vectors to sum 1; an
/// all-zero vector becomes uniform.
void normalize_weights(WeightPair &w);

/// alpha w^R + (1 - alpha) w^I + omega p, rescaled onto the simplex.
std::vector<double> update_estimate(const WeightPair &w, std::span<const double> previous, const Hyperparams &hp);

/// 1 - H(p) / ln k. Throws ErrorCode::domain when p is not a distribution.
double certainty(std::span<const double> p);

/// Index of the largest entry, lowest index on ties.
ClassId argmax(std::span<const double> p);

/// Freezes the ceil(fraction * |candidates|) most certain candidates (ties to
/// the lower id): their P rows become one-hot at the argmax. Returns them.
std::vector<NodeId> assign_topk(std::span<const NodeId> candidates, std::span<const double> certainty,
                                double fraction, PriorMatrix &P, std::vector<char> &frozen);

// -- the collective loop ---------------------------------------------------------

struct IterationInfo {
    int iteration = 0;
    const PriorMatrix *estimates = nullptr;
    const std::vector<char> *frozen = nullptr;
    double max_change = 0.0;
};
using IterationObserver = std::function<void(const IterationInfo &)>;

struct RunOptions {
    IterationObserver observer;
    std::stop_token stop;
};

/// Everything a completed run keeps so that later mutations can be absorbed
/// without relearning.
struct EngineState {
    Hyperparams hp;
    std::uint64_t graph_version = 0;
    std::size_t class_count = 0;
    NodePartition partition;
    std::vector<double> class_prior;
    FeatureMatrix topology;                        // raw topology columns (empty when disabled)
    std::vector<ColumnScaling> iteration_scaling;  // scaling fitted at each iteration
    std::vector<NodeId> order;                     // processing order of V^u
    std::vector<PriorMatrix> history;              // history[0] is the seed, history[t] P after iteration t
    std::vector<char> frozen;
    Matrix relational_weights;
    Matrix iid_weights;
    std::vector<double> certainty;
    int iterations = 0;
    PredictionSet predictions;

    const PriorMatrix &estimates() const { return history.back(); }
};

EngineState fit(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp,
                const RunOptions &options = {});
PredictionSet run(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp,
                  const RunOptions &options = {});

// -- incremental updates -----------------------------------------------------------

/// True when every node's result depends only on a bounded neighbourhood, so
/// that a mutation can be absorbed by recomputing a ball around it.
bool supports_localized_update(const Hyperparams &hp);

/// Radius (in hops around the touched nodes) of the recompute ball for a
/// state that ran `iterations` outer iterations.
int dependency_radius(const Hyperparams &hp, int iterations);

struct PredictionDelta {
    std::uint64_t version = 0;
    std::vector<NodePrediction> changed; // new or different predictions
    std::vector<NodeId> removed;         // no longer predicted (deleted or now labeled)
    std::vector<NodeId> recomputed;      // nodes whose estimates were recomputed
    bool localized = false;
};

/// Re-runs the retained trajectory on the mutated graph: same seed (touched
/// rows re-seeded), same per-iteration scalings, same iteration count.
EngineState warm_rerun(const EngineState &state, const AttributedGraph &g, std::span<const NodeId> touched);

/// Absorbs one mutation. `g` is the graph after `change` was applied; the
/// state must reflect the graph just before it.
PredictionDelta incremental_update(EngineState &state, const AttributedGraph &g, const ChangeRecord &change);

/// Absorbs a run of consecutive changes in one pass over the union of their
/// touched nodes. On error or cancellation `state` is left unchanged.
PredictionDelta absorb_changes(EngineState &state, const AttributedGraph &g, std::span<const ChangeRecord> changes,
                               const RunOptions &options = {});

} // namespace rsm
