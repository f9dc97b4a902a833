#pragma once

// Brute-force reference implementations used as test oracles. Nothing here
// calls into the library's algorithms; graphs are read through their public
// accessors and copied into plain dense structures first.

#include <rsm/engine.hpp>
#include <rsm/graph.hpp>

#include <cstdint>
#include <vector>

namespace oracle {

struct PlainGraph {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t k = 0;
    std::vector<std::vector<double>> weight; // 0 = no edge
    std::vector<std::vector<double>> x;
    std::vector<int> label; // -1 unlabeled

    bool adjacent(std::size_t a, std::size_t b) const { return weight[a][b] > 0.0; }
};

/// Copies a tombstone-free graph; `labels` overrides the graph's labels.
PlainGraph to_plain(const rsm::AttributedGraph &g, const std::vector<int> &labels);
PlainGraph to_plain(const rsm::AttributedGraph &g);

/// All-pairs hop distances by Floyd-Warshall (-1 = unreachable).
std::vector<std::vector<int>> hop_distances(const PlainGraph &g);

struct Graphlets {
    std::uint64_t triangles = 0;
    std::uint64_t star3 = 0;
    std::uint64_t clique4 = 0;
    std::uint64_t cycle4 = 0;
};

/// Per-node induced 3/4-node pattern counts by enumerating every subset.
std::vector<Graphlets> enumerate_graphlets(const PlainGraph &g);

/// Core numbers by repeated peeling at every threshold.
std::vector<int> peel_cores(const PlainGraph &g);

/// Power iteration with uniform dangling redistribution.
std::vector<double> power_pagerank(const PlainGraph &g, double damping, double tol, int max_iter);

double kernel(const rsm::KernelSpec &spec, const std::vector<double> &a, const std::vector<double> &b);

/// Straight-line transcription of the whole RSM pipeline. Returns P after
/// the last iteration (n x k) and the frozen flags.
struct Alg1Result {
    std::vector<std::vector<double>> P;
    std::vector<std::vector<std::vector<double>>> trajectory; // P after each iteration, seed first
    std::vector<bool> frozen;
    int iterations = 0;
};

Alg1Result run_alg1(const PlainGraph &g, const rsm::Hyperparams &hp);

/// Direct sum-of-similarities decision for test rows against training rows.
std::vector<int> iid_decision(const std::vector<std::vector<double>> &test,
                              const std::vector<std::vector<double>> &train, const std::vector<int> &train_labels,
                              std::size_t k, const rsm::KernelSpec &spec);

} // namespace oracle
