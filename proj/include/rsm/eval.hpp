#pragma once

#include <rsm/engine.hpp>
#include <rsm/graph.hpp>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rsm {

/// Weighted-vote relational neighbour classifier with relaxation labeling:
/// every unlabeled row is replaced simultaneously by the edge-weighted mean
/// of its neighbours' rows (mixed with the old row by `damping`) until the
/// largest L1 row change drops below `tolerance`. Isolated nodes keep the
/// global class distribution.
struct WvrnOptions {
    int max_iters = 100;
    double damping = 1.0;
    double tolerance = 1e-4;
};

PredictionSet wvrn(const AttributedGraph &g, const NodePartition &part, const WvrnOptions &opts = {});

/// A classifier under evaluation. `hp` is ignored by methods without
/// hyperparameters.
struct Method {
    std::string name;
    std::function<PredictionSet(const AttributedGraph &, const NodePartition &, const Hyperparams &)> predict;
};

Method rsm_method();
Method wvrn_method(const WvrnOptions &opts = {});
/// Looks up "rsm" or "wvrn".
Method method_by_name(std::string_view name);

struct EvalConfig {
    int folds = 5;
    int trials = 20;
    std::uint64_t seed = 1;
    int inner_folds = 3;
    unsigned workers = 1; // fold jobs run in parallel; each method call gets hp.workers
    std::string dataset = "graph";

    void validate() const;
};

/// Labeled nodes split into `folds` groups: each class is shuffled and dealt
/// round-robin, continuing where the previous class stopped, so fold sizes
/// differ by at most one and class counts per fold by at most one.
std::vector<std::vector<NodeId>> stratified_folds(const NodePartition &part, std::size_t class_count, int folds,
                                                  std::uint64_t seed);

/// Fraction of `test` nodes whose prediction equals `truth`.
double accuracy(const PredictionSet &predictions, std::span<const NodeId> test, const NodePartition &truth);

struct FoldResult {
    int trial = 0;
    int fold = 0;
    double accuracy = 0.0;
    std::size_t test_size = 0;
    Hyperparams chosen;
};

struct CvReport {
    std::string method;
    std::string dataset;
    std::vector<FoldResult> folds;    // trial-major, fold-minor
    std::vector<double> trial_means;  // mean fold accuracy per trial
    double mean = 0.0;                // mean of trial_means
    double stddev = 0.0;              // population std of trial_means
};

/// Picks the grid point with the best inner cross-validated accuracy on the
/// labeled nodes of `part` (ties to the earliest point).
Hyperparams select_hyperparams(const AttributedGraph &g, const NodePartition &part, const Method &method,
                               const std::vector<Hyperparams> &grid, int inner_folds, std::uint64_t seed);

/// Repeated stratified k-fold cross-validation over the labeled nodes of
/// `part`. With more than one grid point, hyperparameters are chosen per
/// outer fold by inner cross-validation on the training folds only.
CvReport cross_validate(const AttributedGraph &g, const NodePartition &part, const EvalConfig &cfg,
                        const Method &method, const std::vector<Hyperparams> &grid);

struct SparseLabelReport {
    std::string method;
    double density = 0.0;
    std::vector<double> trial_accuracy;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Keeps a stratified `density` share of each class labeled, predicts the
/// rest and scores against the hidden labels, once per trial.
SparseLabelReport sparse_label_experiment(const AttributedGraph &g, const NodePartition &part, double density,
                                          const Method &method, const Hyperparams &hp, int trials,
                                          std::uint64_t seed, unsigned workers = 1);

/// Cartesian product of the listed values over `base`; empty lists keep the
/// base value.
struct GridSpec {
    std::vector<double> alpha;
    std::vector<double> omega;
    std::vector<double> sigma;
    std::vector<int> hops;
    std::vector<double> topk;
};
std::vector<Hyperparams> expand_grid(const Hyperparams &base, const GridSpec &spec);

// Columns: method,dataset,fold,trial,accuracy,hyperparams
void write_csv(std::ostream &out, const CvReport &report);
void write_json(std::ostream &out, const CvReport &report);
void write_csv(std::ostream &out, const SparseLabelReport &report);

} // namespace rsm
