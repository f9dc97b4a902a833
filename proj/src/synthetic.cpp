#include <rsm/error.hpp>
#include <rsm/synthetic.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace rsm::synthetic {

AttributedGraph random_graph(const RandomSpec &spec) {
    if (spec.class_count < 1)
        throw Error(ErrorCode::parameter, "class_count must be positive");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, static_cast<int>(spec.class_count) - 1);
    AttributedGraph g(spec.nodes, spec.feature_dim, spec.class_count);
    std::vector<double> row(spec.feature_dim);
    for (NodeId v = 0; v < spec.nodes; ++v) {
        for (double &x : row)
            x = normal(rng);
        g.set_features(v, row);
        g.set_label(v, cls(rng));
    }
    for (NodeId u = 0; u < spec.nodes; ++u)
        for (NodeId v = u + 1; v < spec.nodes; ++v)
            if (unit(rng) < spec.edge_probability)
                g.add_edge(u, v);
    return g;
}

AttributedGraph planted_partition(const PlantedSpec &spec) {
    if (spec.blocks < 1 || spec.nodes < spec.blocks)
        throw Error(ErrorCode::parameter, "need at least one node per block");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    AttributedGraph g(spec.nodes, spec.feature_dim, spec.blocks);
    std::vector<ClassId> block(spec.nodes);
    for (NodeId v = 0; v < spec.nodes; ++v)
        block[v] = static_cast<ClassId>(v * spec.blocks / spec.nodes);
    std::vector<double> row(spec.feature_dim);
    for (NodeId v = 0; v < spec.nodes; ++v) {
        for (std::size_t c = 0; c < spec.feature_dim; ++c)
            row[c] = normal(rng) + (c == static_cast<std::size_t>(block[v]) ? spec.signal : 0.0);
        g.set_features(v, row);
        g.set_label(v, block[v]);
    }
    for (NodeId u = 0; u < spec.nodes; ++u)
        for (NodeId v = u + 1; v < spec.nodes; ++v)
            if (unit(rng) < (block[u] == block[v] ? spec.p_in : spec.p_out))
                g.add_edge(u, v);
    return g;
}

AttributedGraph citation_graph(const CitationSpec &spec) {
    if (spec.classes < 2 || spec.nodes < spec.classes)
        throw Error(ErrorCode::parameter, "need at least two classes and one node per class");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t n = spec.nodes;
    const std::size_t k = spec.classes;
    AttributedGraph g(n, 0, k);

    // Pareto-distributed propensities give a heavy-tailed degree sequence.
    std::vector<double> theta(n);
    for (auto &t : theta)
        t = std::pow(1.0 - unit(rng), -1.0 / (spec.degree_exponent - 1.0));
    for (NodeId v = 0; v < n; ++v)
        g.set_label(v, static_cast<ClassId>(v % k));
    double theta_total = 0.0;
    for (double t : theta)
        theta_total += t;
    std::vector<double> class_theta(k, 0.0);
    for (NodeId v = 0; v < n; ++v)
        class_theta[v % k] += theta[v];

    const double edges = spec.mean_degree * static_cast<double>(n) / 2.0;
    double cross_mass = theta_total * theta_total;
    for (double ct : class_theta)
        cross_mass -= ct * ct;
    for (NodeId u = 0; u < n; ++u)
        for (NodeId v = u + 1; v < n; ++v) {
            const std::size_t cu = u % k;
            const double p = cu == v % k ? 2.0 * edges * spec.assortativity * theta[u] * theta[v] /
                                               (class_theta[cu] * class_theta[cu] * static_cast<double>(k))
                                         : 2.0 * edges * (1.0 - spec.assortativity) * theta[u] * theta[v] / cross_mass;
            if (unit(rng) < std::min(1.0, p))
                g.add_edge(u, v);
        }
    return g;
}

std::vector<NodeId> stratified_sample(const AttributedGraph &g, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw Error(ErrorCode::parameter, "fraction must lie in (0, 1]");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<NodeId>> byclass(g.class_count());
    for (NodeId v : g.live_nodes())
        if (g.label(v) != kUnlabeled)
            byclass[static_cast<std::size_t>(g.label(v))].push_back(v);
    std::vector<NodeId> keep;
    for (auto &members : byclass) {
        if (members.empty())
            continue;
        std::shuffle(members.begin(), members.end(), rng);
        auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
        take = std::clamp<std::size_t>(take, 1, members.size());
        keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

std::vector<ClassId> keep_labels(const AttributedGraph &g, const std::vector<NodeId> &keep) {
    std::vector<ClassId> labels(g.capacity(), kUnlabeled);
    for (NodeId v : keep)
        labels[v] = g.label(v);
    return labels;
}

} // namespace rsm::synthetic
