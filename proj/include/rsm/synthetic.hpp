#pragma once

#include <rsm/graph.hpp>

#include <cstdint>
#include <vector>

namespace rsm::synthetic {

/// Erdos-Renyi graph with Gaussian attributes and uniformly drawn classes.
/// Every node carries its ground-truth label.
struct RandomSpec {
    std::size_t nodes = 20;
    double edge_probability = 0.2;
    std::size_t feature_dim = 3;
    std::size_t class_count = 2;
    std::uint64_t seed = 1;
};
AttributedGraph random_graph(const RandomSpec &spec);

/// Planted partition: equal blocks, one class per block, edges with p_in
/// inside a block and p_out across. Attributes are N(signal * e_class, 1)
/// on the first min(d, k) coordinates and N(0, 1) elsewhere.
struct PlantedSpec {
    std::size_t nodes = 100;
    std::size_t blocks = 2;
    double p_in = 0.3;
    double p_out = 0.02;
    std::size_t feature_dim = 0;
    double signal = 1.0;
    std::uint64_t seed = 1;
};
AttributedGraph planted_partition(const PlantedSpec &spec);

/// Degree-corrected stochastic block model shaped like a citation network:
/// heavy-tailed expected degrees, strong class assortativity, no attributes.
struct CitationSpec {
    std::size_t nodes = 1000;
    std::size_t classes = 7;
    double mean_degree = 4.0;
    double assortativity = 0.8; // share of edge endpoints inside the class
    double degree_exponent = 2.5;
    std::uint64_t seed = 1;
};
AttributedGraph citation_graph(const CitationSpec &spec);

/// Node ids whose labels are kept so that `fraction` of each class stays
/// labeled (at least one per class), chosen at random.
std::vector<NodeId> stratified_sample(const AttributedGraph &g, double fraction, std::uint64_t seed);

/// Label vector with only `keep` labeled (ground truth taken from g).
std::vector<ClassId> keep_labels(const AttributedGraph &g, const std::vector<NodeId> &keep);

} // namespace rsm::synthetic
