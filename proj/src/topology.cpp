#include <rsm/error.hpp>
#include <rsm/features.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace rsm {

GraphletCounter::GraphletCounter(const AttributedGraph &g)
    : graph_(&g), mark_(g.capacity(), 0), hits_(g.capacity(), 0), via_(g.capacity()) {}

GraphletCounts GraphletCounter::count(NodeId v) {
    const auto &g = *graph_;
    if (!g.alive(v))
        throw Error(ErrorCode::invalid_node, "node " + std::to_string(v) + " does not exist");
    if (++epoch_ == 0) {
        std::fill(mark_.begin(), mark_.end(), 0);
        epoch_ = 1;
    }
    const auto nv = g.neighbors(v);
    for (const auto &nb : nv)
        mark_[nb.id] = epoch_;
    auto in_nv = [&](NodeId u) { return mark_[u] == epoch_; };

    GraphletCounts out;
    std::int64_t tri2 = 0;   // each triangle seen from both ends
    std::int64_t wedges = 0; // paths of length two inside N(v)
    for (const auto &a : nv) {
        std::int64_t inner = 0;
        for (const auto &b : g.neighbors(a.id)) {
            if (!in_nv(b.id))
                continue;
            ++inner;
            if (b.id <= a.id)
                continue;
            for (const auto &c : g.neighbors(b.id))
                if (c.id > b.id && in_nv(c.id) && g.has_edge(a.id, c.id))
                    ++out.clique4;
        }
        tri2 += inner;
        wedges += inner * (inner - 1) / 2;
    }
    const auto d = static_cast<std::int64_t>(nv.size());
    const std::int64_t tri = tri2 / 2;
    out.triangles = static_cast<std::uint64_t>(tri);
    const std::int64_t triples = d * (d - 1) * (d - 2) / 6;
    // Independent triples in N(v) by inclusion-exclusion over the edges
    // they contain.
    out.star3 = static_cast<std::uint64_t>(triples - tri * (d - 2) + wedges -
                                           static_cast<std::int64_t>(out.clique4));

    touched_.clear();
    for (const auto &a : nv)
        for (const auto &x : g.neighbors(a.id)) {
            if (x.id == v || in_nv(x.id))
                continue;
            if (hits_[x.id] == 0)
                touched_.push_back(x.id);
            ++hits_[x.id];
            via_[x.id].push_back(a.id);
        }
    for (NodeId x : touched_) {
        const auto &ends = via_[x];
        for (std::size_t i = 0; i < ends.size(); ++i)
            for (std::size_t j = i + 1; j < ends.size(); ++j)
                if (!g.has_edge(ends[i], ends[j]))
                    ++out.cycle4;
        hits_[x] = 0;
        via_[x].clear();
    }
    return out;
}

std::vector<std::uint32_t> core_numbers(const AttributedGraph &g) {
    // Batagelj-Zaversnik bucket peeling.
    const std::size_t cap = g.capacity();
    std::vector<std::uint32_t> deg(cap, 0);
    std::uint32_t max_deg = 0;
    for (NodeId v = 0; v < cap; ++v)
        if (g.alive(v)) {
            deg[v] = static_cast<std::uint32_t>(g.degree(v));
            max_deg = std::max(max_deg, deg[v]);
        }
    std::vector<std::uint32_t> bin(max_deg + 1, 0);
    std::vector<NodeId> live = g.live_nodes();
    for (NodeId v : live)
        ++bin[deg[v]];
    std::uint32_t start = 0;
    for (auto &b : bin) {
        const std::uint32_t n = b;
        b = start;
        start += n;
    }
    std::vector<NodeId> vert(live.size());
    std::vector<std::uint32_t> pos(cap, 0);
    for (NodeId v : live) {
        pos[v] = bin[deg[v]];
        vert[pos[v]] = v;
        ++bin[deg[v]];
    }
    for (std::size_t d = bin.size() - 1; d > 0; --d)
        bin[d] = bin[d - 1];
    if (!bin.empty())
        bin[0] = 0;
    for (std::size_t i = 0; i < vert.size(); ++i) {
        const NodeId v = vert[i];
        for (const auto &nb : g.neighbors(v)) {
            const NodeId u = nb.id;
            if (deg[u] > deg[v]) {
                const std::uint32_t du = deg[u];
                const std::uint32_t pu = pos[u];
                const std::uint32_t pw = bin[du];
                const NodeId w = vert[pw];
                if (u != w) {
                    pos[u] = pw;
                    vert[pu] = w;
                    pos[w] = pu;
                    vert[pw] = u;
                }
                ++bin[du];
                --deg[u];
            }
        }
    }
    return deg;
}

std::vector<double> pagerank(const AttributedGraph &g, double damping, double tolerance, int max_iterations) {
    const std::size_t cap = g.capacity();
    const auto live = g.live_nodes();
    std::vector<double> pr(cap, 0.0);
    if (live.empty())
        return pr;
    const double n = static_cast<double>(live.size());
    for (NodeId v : live)
        pr[v] = 1.0 / n;
    std::vector<double> next(cap, 0.0);
    for (int it = 0; it < max_iterations; ++it) {
        double dangling = 0.0;
        for (NodeId v : live)
            if (g.degree(v) == 0)
                dangling += pr[v];
        const double base = (1.0 - damping) / n + damping * dangling / n;
        double change = 0.0;
        for (NodeId v : live) {
            double sum = 0.0;
            for (const auto &nb : g.neighbors(v))
                sum += pr[nb.id] / static_cast<double>(g.degree(nb.id));
            next[v] = base + damping * sum;
            change += std::abs(next[v] - pr[v]);
        }
        pr.swap(next);
        if (change < tolerance)
            break;
    }
    double total = 0.0;
    for (NodeId v : live)
        total += pr[v];
    for (NodeId v : live)
        pr[v] /= total;
    return pr;
}

namespace {

void write_local_columns(Matrix &m, NodeId v, const AttributedGraph &g, GraphletCounter &counter,
                         std::size_t base, std::size_t star_col) {
    const auto counts = counter.count(v);
    const double d = static_cast<double>(g.degree(v));
    m(v, base + 0) = d;
    m(v, base + 1) = static_cast<double>(counts.triangles);
    m(v, base + 2) = d < 2 ? 0.0 : 2.0 * static_cast<double>(counts.triangles) / (d * (d - 1.0));
    m(v, star_col + 0) = static_cast<double>(counts.star3);
    m(v, star_col + 1) = static_cast<double>(counts.clique4);
    m(v, star_col + 2) = static_cast<double>(counts.cycle4);
}

} // namespace

FeatureMatrix topology_features(const AttributedGraph &g, const TopologyOptions &opts) {
    std::vector<ColumnDescriptor> cols;
    for (const char *name : {"degree", "triangles", "clustering"})
        cols.push_back({name, FeatureFamily::topology});
    if (opts.include_global) {
        cols.push_back({"core", FeatureFamily::topology});
        cols.push_back({"pagerank", FeatureFamily::topology});
    }
    for (const char *name : {"star3", "clique4", "cycle4"})
        cols.push_back({name, FeatureFamily::topology});

    Matrix m(g.capacity(), cols.size());
    const std::size_t star_col = opts.include_global ? 5 : 3;
    GraphletCounter counter(g);
    for (NodeId v = 0; v < g.capacity(); ++v)
        if (g.alive(v))
            write_local_columns(m, v, g, counter, 0, star_col);
    if (opts.include_global) {
        const auto core = core_numbers(g);
        const auto pr = pagerank(g, opts.damping, opts.tolerance, opts.max_iterations);
        for (NodeId v = 0; v < g.capacity(); ++v)
            if (g.alive(v)) {
                m(v, 3) = core[v];
                m(v, 4) = pr[v];
            }
    }
    return FeatureMatrix(std::move(m), std::move(cols));
}

void refresh_local_topology(FeatureMatrix &f, const AttributedGraph &g, std::span<const NodeId> nodes) {
    if (f.cols() != 6)
        throw Error(ErrorCode::dimension, "local topology refresh needs the 6-column node-local layout");
    auto &m = f.values();
    while (m.rows() < g.capacity())
        m.append_row(0.0);
    GraphletCounter counter(g);
    for (NodeId v : nodes) {
        if (g.alive(v)) {
            write_local_columns(m, v, g, counter, 0, 3);
        } else {
            auto row = m.row(v);
            std::fill(row.begin(), row.end(), 0.0);
        }
    }
}

} // namespace rsm
