#include <rsm/engine.hpp>
#include <rsm/error.hpp>
#include <rsm/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rsm {

std::string_view to_string(PriorMode m) noexcept {
    switch (m) {
    case PriorMode::estimated: return "estimated";
    case PriorMode::global: return "global";
    case PriorMode::uniform: return "uniform";
    }
    return "unknown";
}

PriorMode parse_prior_mode(std::string_view s) {
    if (s == "estimated")
        return PriorMode::estimated;
    if (s == "global")
        return PriorMode::global;
    if (s == "uniform")
        return PriorMode::uniform;
    throw Error(ErrorCode::parameter, "unknown prior mode '" + std::string(s) + "'");
}

void Hyperparams::validate() const {
    auto fail = [](const std::string &msg) { throw Error(ErrorCode::parameter, msg); };
    if (!(alpha >= 0.0 && alpha <= 1.0))
        fail("alpha must lie in [0, 1]");
    if (!(omega >= 0.0) || !std::isfinite(omega))
        fail("omega must be non-negative");
    if (hops < 1)
        fail("hops must be at least 1");
    if (tau_max < 0)
        fail("tau_max must be non-negative");
    if (!(topk_fraction > 0.0 && topk_fraction <= 1.0))
        fail("topk_fraction must lie in (0, 1]");
    if (!(epsilon > 0.0))
        fail("epsilon must be positive");
    if (prior_iters < 0)
        fail("prior_iters must be non-negative");
    if (!(mesh >= 0.0 && mesh <= 1.0))
        fail("mesh must lie in [0, 1]");
    if (workers < 1)
        fail("workers must be at least 1");
    kernel.validate();
}

std::string describe(const Hyperparams &hp) {
    std::ostringstream out;
    out << "kernel=" << to_string(hp.kernel.kind);
    if (hp.kernel.kind == KernelKind::rbf)
        out << ";sigma=" << hp.kernel.sigma;
    if (hp.kernel.kind == KernelKind::polynomial)
        out << ";degree=" << hp.kernel.degree << ";offset=" << hp.kernel.offset;
    out << ";alpha=" << hp.alpha << ";omega=" << hp.omega << ";hops=" << hp.hops << ";ssl=" << (hp.ssl ? 1 : 0);
    return out.str();
}

const NodePrediction *PredictionSet::find(NodeId v) const {
    auto it = std::lower_bound(predictions.begin(), predictions.end(), v,
                               [](const NodePrediction &p, NodeId id) { return p.node < id; });
    return it != predictions.end() && it->node == v ? &*it : nullptr;
}

// -- building blocks -----------------------------------------------------------

namespace {

void require_task(const NodePartition &part, std::size_t k) {
    if (k < 2)
        throw Error(ErrorCode::degenerate_task, "classification needs at least two classes");
    const auto counts = part.class_counts(k);
    for (std::size_t c = 0; c < k; ++c)
        if (counts[c] == 0)
            throw Error(ErrorCode::missing_class, "class " + std::to_string(c) + " has no labeled nodes");
}

std::vector<double> one_hot(std::size_t k, ClassId y) {
    std::vector<double> p(k, 0.0);
    p[static_cast<std::size_t>(y)] = 1.0;
    return p;
}

void set_row(Matrix &m, NodeId r, std::span<const double> values) { std::copy(values.begin(), values.end(), m.row(r).begin()); }

void l1_normalize(std::span<double> v) {
    double total = 0.0;
    for (double x : v)
        total += x;
    if (total > 0.0)
        for (double &x : v)
            x /= total;
}

TopologyOptions topology_options(const FeatureConfig &cfg) {
    TopologyOptions opts;
    opts.include_global = cfg.topology_global;
    return opts;
}

FeatureMatrix raw_block(const AttributedGraph &g) {
    std::vector<ColumnDescriptor> cols;
    for (std::size_t c = 0; c < g.feature_dim(); ++c)
        cols.push_back({"x" + std::to_string(c), FeatureFamily::raw});
    return FeatureMatrix(g.feature_matrix(), std::move(cols));
}

FeatureMatrix compose_base(const AttributedGraph &g, const FeatureConfig &cfg, const FeatureMatrix &topology) {
    FeatureMatrix f(g.capacity());
    if (cfg.raw)
        f.append(raw_block(g));
    if (cfg.topology)
        f.append(topology);
    return f;
}

void normalize_live(FeatureMatrix &f, Normalization scheme, const AttributedGraph &g) {
    const auto live = g.live_nodes();
    normalize_rows(f, scheme, live);
}

} // namespace

std::vector<double> class_frequencies(const NodePartition &part, std::size_t class_count) {
    const auto counts = part.class_counts(class_count);
    const double total = static_cast<double>(part.labeled().size());
    std::vector<double> freq(class_count, 0.0);
    if (total == 0.0)
        return freq;
    for (std::size_t c = 0; c < class_count; ++c)
        freq[c] = static_cast<double>(counts[c]) / total;
    return freq;
}

FeatureMatrix base_features(const AttributedGraph &g, const FeatureConfig &cfg) {
    FeatureMatrix topology = cfg.topology ? topology_features(g, topology_options(cfg)) : FeatureMatrix(g.capacity());
    return compose_base(g, cfg, topology);
}

Matrix iid_scores(const Matrix &test, const Matrix &train, std::span<const ClassId> train_labels,
                  std::size_t class_count, const KernelSpec &kernel) {
    kernel.validate();
    if (train_labels.size() != train.rows())
        throw Error(ErrorCode::alignment, "one label per training row is required");
    if (test.cols() != train.cols() && test.rows() > 0 && train.rows() > 0)
        throw Error(ErrorCode::dimension, "test and training rows differ in width");
    std::vector<std::size_t> counts(class_count, 0);
    for (ClassId y : train_labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= class_count)
            throw Error(ErrorCode::invariant_violation, "training label out of range");
        ++counts[static_cast<std::size_t>(y)];
    }
    for (std::size_t c = 0; c < class_count; ++c)
        if (counts[c] == 0)
            throw Error(ErrorCode::missing_class, "class " + std::to_string(c) + " has no training rows");
    Matrix w(test.rows(), class_count);
    for (std::size_t i = 0; i < test.rows(); ++i)
        for (std::size_t j = 0; j < train.rows(); ++j)
            w(i, static_cast<std::size_t>(train_labels[j])) += similarity_unchecked(kernel, train.row(j), test.row(i));
    return w;
}

std::vector<ClassId> classify_iid(const Matrix &test, const Matrix &train, std::span<const ClassId> train_labels,
                                  std::size_t class_count, const KernelSpec &kernel) {
    const Matrix w = iid_scores(test, train, train_labels, class_count, kernel);
    std::vector<ClassId> out(test.rows());
    for (std::size_t i = 0; i < test.rows(); ++i)
        out[i] = argmax(w.row(i));
    return out;
}

PriorMatrix estimate_priors(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp,
                            const Matrix &features) {
    hp.validate();
    const std::size_t k = g.class_count();
    require_task(part, k);
    if (features.rows() != g.capacity())
        throw Error(ErrorCode::alignment, "feature matrix must have one row per node id");

    const auto freq = class_frequencies(part, k);
    PriorMatrix P(g.capacity(), k);
    for (NodeId v : part.labeled())
        set_row(P, v, one_hot(k, part.label(v)));
    const auto unlabeled = part.unlabeled();
    if (unlabeled.empty())
        return P;

    switch (hp.prior_mode) {
    case PriorMode::uniform:
        for (NodeId v : unlabeled)
            std::fill(P.row(v).begin(), P.row(v).end(), 1.0 / static_cast<double>(k));
        return P;
    case PriorMode::global:
        for (NodeId v : unlabeled)
            set_row(P, v, freq);
        return P;
    case PriorMode::estimated:
        break;
    }

    // S1
    for (NodeId v : unlabeled)
        set_row(P, v, freq);

    // S2: class-wise normalized iid similarity vote.
    const auto labeled = part.labeled();
    parallel_for(unlabeled.size(), hp.workers, [&](std::size_t begin, std::size_t end, unsigned) {
        std::vector<double> w(k);
        for (std::size_t a = begin; a < end; ++a) {
            const NodeId i = unlabeled[a];
            std::fill(w.begin(), w.end(), 0.0);
            for (NodeId j : labeled)
                w[static_cast<std::size_t>(part.label(j))] +=
                    similarity_unchecked(hp.kernel, features.row(j), features.row(i));
            double total = 0.0;
            for (double &x : w)
                total += (x = std::max(x, 0.0));
            if (total > 0.0 && std::isfinite(total)) {
                for (std::size_t c = 0; c < k; ++c)
                    P(i, c) = w[c] / total;
            }
        }
    });

    // S3: mesh each estimate with the centroid of its neighbourhood.
    for (int round = 0; round < hp.prior_iters; ++round) {
        PriorMatrix next = P;
        parallel_for(unlabeled.size(), hp.workers, [&](std::size_t begin, std::size_t end, unsigned) {
            BallFinder finder(g);
            std::vector<double> mean(k);
            for (std::size_t a = begin; a < end; ++a) {
                const NodeId v = unlabeled[a];
                const auto ball = finder.find(v, hp.hops);
                if (ball.empty())
                    continue;
                std::fill(mean.begin(), mean.end(), 0.0);
                for (NodeId u : ball)
                    for (std::size_t c = 0; c < k; ++c)
                        mean[c] += P(u, c);
                const double r = static_cast<double>(ball.size());
                auto row = next.row(v);
                for (std::size_t c = 0; c < k; ++c)
                    row[c] = (1.0 - hp.mesh) * P(v, c) + hp.mesh * mean[c] / r;
                l1_normalize(row);
            }
        });
        P = std::move(next);
    }
    return P;
}

PriorMatrix estimate_priors(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp) {
    FeatureMatrix base = base_features(g, hp.features);
    normalize_live(base, hp.features.normalization, g);
    return estimate_priors(g, part, hp, base.values());
}

namespace {

double pair_similarity(NodeId i, NodeId j, const Matrix &F, const Hyperparams &hp, const AttributedGraph &g) {
    double s = similarity_unchecked(hp.kernel, F.row(i), F.row(j));
    if (hp.use_edge_weight) {
        const double phi = g.edge_weight(i, j);
        if (phi > 0.0)
            s *= phi;
    }
    return s;
}

} // namespace

void accumulate_supervised(NodeId i, const NodePartition &part, const PriorMatrix &P, const Matrix &F,
                           const Hyperparams &hp, const AttributedGraph &g, const BallFinder &ball, WeightPair &out) {
    for (NodeId j : part.labeled()) {
        const auto y = static_cast<std::size_t>(part.label(j));
        const double s = pair_similarity(i, j, F, hp, g);
        auto &target = ball.contains(j) ? out.relational : out.iid;
        target[y] += P(i, y) * s;
    }
}

WeightPair accumulate_supervised(NodeId i, const AttributedGraph &g, const NodePartition &part, const PriorMatrix &P,
                                 const Matrix &F, const Hyperparams &hp) {
    BallFinder ball(g);
    ball.find(i, hp.hops);
    WeightPair w(P.cols());
    accumulate_supervised(i, part, P, F, hp, g, ball, w);
    return w;
}

void accumulate_ssl(NodeId i, const NodePartition &part, const PriorMatrix &P, const Matrix &F, const Hyperparams &hp,
                    const AttributedGraph &g, const BallFinder &ball, WeightPair &out) {
    const std::size_t k = P.cols();
    const auto pi = P.row(i);
    for (NodeId j : part.unlabeled()) {
        if (j == i)
            continue;
        const double s = pair_similarity(i, j, F, hp, g);
        auto &target = ball.contains(j) ? out.relational : out.iid;
        const auto pj = P.row(j);
        for (std::size_t c = 0; c < k; ++c)
            target[c] += pi[c] * pj[c] * s;
    }
}

WeightPair accumulate_ssl(NodeId i, const AttributedGraph &g, const NodePartition &part, const PriorMatrix &P,
                          const Matrix &F, const Hyperparams &hp) {
    BallFinder ball(g);
    ball.find(i, hp.hops);
    WeightPair w(P.cols());
    accumulate_ssl(i, part, P, F, hp, g, ball, w);
    return w;
}

void normalize_weights(WeightPair &w) {
    for (auto *v : {&w.relational, &w.iid}) {
        double total = 0.0;
        for (double &x : *v)
            total += (x = std::max(x, 0.0));
        if (total > 0.0 && std::isfinite(total)) {
            for (double &x : *v)
                x /= total;
        } else {
            std::fill(v->begin(), v->end(), 1.0 / static_cast<double>(v->size()));
        }
    }
}

std::vector<double> update_estimate(const WeightPair &w, std::span<const double> previous, const Hyperparams &hp) {
    const std::size_t k = previous.size();
    if (w.relational.size() != k || w.iid.size() != k)
        throw Error(ErrorCode::dimension, "weight vectors and estimate differ in length");
    std::vector<double> p(k);
    for (std::size_t c = 0; c < k; ++c)
        p[c] = hp.alpha * w.relational[c] + (1.0 - hp.alpha) * w.iid[c] + hp.omega * previous[c];
    double total = 0.0;
    for (double x : p)
        total += x;
    if (total > 0.0) {
        for (double &x : p)
            x /= total;
    } else {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
    }
    return p;
}

double certainty(std::span<const double> p) {
    const std::size_t k = p.size();
    if (k < 2)
        throw Error(ErrorCode::domain, "certainty needs at least two classes");
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0))
            throw Error(ErrorCode::domain, "probability vector has a negative entry");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw Error(ErrorCode::domain, "probability vector does not sum to 1");
    double h = 0.0;
    for (double x : p)
        if (x > 0.0)
            h -= x * std::log(x);
    const double c = 1.0 - h / std::log(static_cast<double>(k));
    return std::clamp(c, 0.0, 1.0);
}

ClassId argmax(std::span<const double> p) {
    if (p.empty())
        throw Error(ErrorCode::dimension, "argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t c = 1; c < p.size(); ++c)
        if (p[c] > p[best])
            best = c;
    return static_cast<ClassId>(best);
}

std::vector<NodeId> assign_topk(std::span<const NodeId> candidates, std::span<const double> certainty,
                                double fraction, PriorMatrix &P, std::vector<char> &frozen) {
    std::vector<NodeId> open;
    for (NodeId v : candidates)
        if (!frozen[v])
            open.push_back(v);
    if (open.empty())
        return {};
    const auto m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(open.size()) - 1e-9));
    const std::size_t take = std::min(open.size(), std::max<std::size_t>(m, 1));
    std::partial_sort(open.begin(), open.begin() + static_cast<std::ptrdiff_t>(take), open.end(),
                      [&](NodeId a, NodeId b) {
                          if (certainty[a] != certainty[b])
                              return certainty[a] > certainty[b];
                          return a < b;
                      });
    open.resize(take);
    std::sort(open.begin(), open.end());
    for (NodeId v : open) {
        const ClassId y = argmax(P.row(v));
        auto row = P.row(v);
        std::fill(row.begin(), row.end(), 0.0);
        row[static_cast<std::size_t>(y)] = 1.0;
        frozen[v] = 1;
    }
    return open;
}

// -- the collective loop ---------------------------------------------------------

namespace {

/// Per-iteration feature matrix: base columns, relational blocks built from
/// the previous estimates, meta blocks from the previous iteration.
FeatureMatrix iteration_features(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp,
                                 const FeatureMatrix &topology, const PriorMatrix &previous, const Matrix &wr,
                                 const Matrix &wi, const std::vector<double> &cert) {
    const auto &cfg = hp.features;
    FeatureMatrix f = compose_base(g, cfg, topology);
    if (cfg.relational_class)
        f.append(relational_class_features(g, part, previous, hp.hops, cfg.aggregation));
    if (cfg.relational_attr && g.feature_dim() > 0)
        f.append(relational_attr_features(g, hp.hops, cfg.aggregation));
    if (cfg.meta != meta_none) {
        MetaBlocks blocks{&previous, &wr, &wi, cert};
        f = append_meta_features(std::move(f), blocks, cfg.meta, std::span<const NodeId>{});
    }
    return f;
}

/// Normalizes over the live rows. With `replay` the stored scaling is used
/// instead of fitting a new one.
ColumnScaling normalize_iteration(FeatureMatrix &f, const AttributedGraph &g, Normalization scheme,
                                  const ColumnScaling *replay) {
    const auto live = g.live_nodes();
    ColumnScaling scaling;
    if (scheme == Normalization::minmax_column) {
        scaling = replay != nullptr ? *replay : fit_minmax(f.values(), live);
        if (scaling.lo.size() != f.cols())
            throw Error(ErrorCode::dimension, "retained scaling does not match feature width");
        auto &m = f.values();
        std::vector<char> active(m.rows(), 0);
        for (NodeId v : live)
            active[v] = 1;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            if (active[r]) {
                scaling.apply(m.row(r));
            } else {
                auto row = m.row(r);
                std::fill(row.begin(), row.end(), 0.0);
            }
        }
        f.set_normalization(scheme);
    } else {
        normalize_rows(f, scheme, live);
    }
    return scaling;
}

std::vector<NodeId> processing_order(const NodePartition &part, const PriorMatrix &P) {
    std::vector<NodeId> order(part.unlabeled().begin(), part.unlabeled().end());
    std::vector<double> c(P.rows(), 0.0);
    for (NodeId v : order)
        c[v] = P.cols() >= 2 ? certainty(P.row(v)) : 1.0;
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        if (c[a] != c[b])
            return c[a] > c[b];
        return a < b;
    });
    return order;
}

struct LoopSpec {
    bool fit = true;                      // fit scalings and test convergence
    int iterations = 0;                   // exact count when replaying
    const EngineState *previous = nullptr; // rows outside `recompute` are copied from here
    const std::vector<char> *recompute = nullptr;
};

void fill_certainty(EngineState &s, const PriorMatrix &P) {
    s.certainty.assign(P.rows(), 0.0);
    for (NodeId v : s.partition.labeled())
        s.certainty[v] = 1.0;
    for (NodeId v : s.partition.unlabeled())
        s.certainty[v] = certainty(P.row(v));
}

void build_predictions(EngineState &s) {
    const PriorMatrix &P = s.estimates();
    s.predictions.predictions.clear();
    for (NodeId v : s.partition.unlabeled()) {
        NodePrediction p;
        p.node = v;
        p.probabilities.assign(P.row(v).begin(), P.row(v).end());
        p.label = argmax(p.probabilities);
        p.certainty = s.certainty[v];
        p.assigned = s.frozen[v] != 0;
        s.predictions.predictions.push_back(std::move(p));
    }
}

/// Runs the outer iterations on top of state.history[0].
void collective_loop(EngineState &s, const AttributedGraph &g, const LoopSpec &spec, const RunOptions &options) {
    const Hyperparams &hp = s.hp;
    const std::size_t k = s.class_count;
    const std::size_t cap = g.capacity();
    const auto &part = s.partition;
    s.frozen.assign(cap, 0);
    s.relational_weights = Matrix(cap, k);
    s.iid_weights = Matrix(cap, k);
    fill_certainty(s, s.history[0]);
    if (spec.fit)
        s.iteration_scaling.clear();

    std::vector<NodeId> work;
    const int limit = spec.fit ? hp.tau_max : spec.iterations;
    int done = 0;
    for (int t = 1; t <= limit; ++t) {
        if (options.stop.stop_requested())
            throw Error(ErrorCode::cancelled, "inference cancelled");
        const PriorMatrix &prev = s.history.back();
        FeatureMatrix F = iteration_features(g, part, hp, s.topology, prev, s.relational_weights, s.iid_weights,
                                             s.certainty);
        const ColumnScaling *replay = spec.fit ? nullptr : &s.iteration_scaling[static_cast<std::size_t>(t - 1)];
        ColumnScaling scaling = normalize_iteration(F, g, hp.features.normalization, replay);
        if (spec.fit)
            s.iteration_scaling.push_back(std::move(scaling));

        PriorMatrix next = prev;
        work.clear();
        for (NodeId v : s.order)
            if (!s.frozen[v] && (spec.recompute == nullptr || (*spec.recompute)[v]))
                work.push_back(v);
        if (spec.previous != nullptr) {
            // Rows that are not recomputed keep the retained trajectory.
            const PriorMatrix &old = spec.previous->history[static_cast<std::size_t>(t)];
            for (NodeId v : part.unlabeled())
                if (!(*spec.recompute)[v] && v < old.rows())
                    set_row(next, v, old.row(v));
        }

        const Matrix &Fv = F.values();
        parallel_for(work.size(), hp.workers, [&](std::size_t begin, std::size_t end, unsigned) {
            BallFinder ball(g);
            WeightPair w(k);
            for (std::size_t a = begin; a < end; ++a) {
                if (options.stop.stop_requested())
                    return;
                const NodeId i = work[a];
                std::fill(w.relational.begin(), w.relational.end(), 0.0);
                std::fill(w.iid.begin(), w.iid.end(), 0.0);
                ball.find(i, hp.hops);
                accumulate_supervised(i, part, prev, Fv, hp, g, ball, w);
                if (hp.ssl)
                    accumulate_ssl(i, part, prev, Fv, hp, g, ball, w);
                normalize_weights(w);
                const auto p = update_estimate(w, prev.row(i), hp);
                set_row(next, i, p);
                set_row(s.relational_weights, i, w.relational);
                set_row(s.iid_weights, i, w.iid);
            }
        });
        if (options.stop.stop_requested())
            throw Error(ErrorCode::cancelled, "inference cancelled");

        fill_certainty(s, next);
        if (hp.ssl) {
            assign_topk(part.unlabeled(), s.certainty, hp.topk_fraction, next, s.frozen);
            fill_certainty(s, next);
        }

        double change = 0.0;
        for (NodeId v : part.unlabeled()) {
            double d = 0.0;
            for (std::size_t c = 0; c < k; ++c)
                d += std::abs(next(v, c) - prev(v, c));
            change = std::max(change, d);
        }
        s.history.push_back(std::move(next));
        done = t;
        if (options.observer)
            options.observer(IterationInfo{t, &s.history.back(), &s.frozen, change});
        if (spec.fit && change < hp.epsilon)
            break;
    }
    s.iterations = done;
    build_predictions(s);
}

FeatureMatrix compute_topology(const AttributedGraph &g, const FeatureConfig &cfg) {
    return cfg.topology ? topology_features(g, topology_options(cfg)) : FeatureMatrix(g.capacity());
}

} // namespace

EngineState fit(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp,
                const RunOptions &options) {
    hp.validate();
    const std::size_t k = g.class_count();
    if (part.labels().size() != g.capacity())
        throw Error(ErrorCode::alignment, "partition does not match the graph");
    require_task(part, k);

    EngineState s;
    s.hp = hp;
    s.graph_version = g.version();
    s.class_count = k;
    s.partition = part;
    s.class_prior = class_frequencies(part, k);
    s.topology = compute_topology(g, hp.features);

    FeatureMatrix base = compose_base(g, hp.features, s.topology);
    normalize_live(base, hp.features.normalization, g);
    s.history.push_back(estimate_priors(g, part, hp, base.values()));
    s.order = processing_order(part, s.history[0]);
    collective_loop(s, g, LoopSpec{}, options);
    return s;
}

PredictionSet run(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp,
                  const RunOptions &options) {
    return fit(g, part, hp, options).predictions;
}

// -- incremental updates -----------------------------------------------------------

bool supports_localized_update(const Hyperparams &hp) {
    const auto &f = hp.features;
    return hp.alpha == 1.0 && !hp.ssl && (!f.topology || !f.topology_global) && f.meta == meta_none;
}

int dependency_radius(const Hyperparams &hp, int iterations) {
    if (iterations <= 0)
        return 0;
    const int per = 2 * hp.hops;
    return hp.features.relational_class ? per * iterations : per;
}

namespace {

NodePartition updated_partition(const EngineState &state, const AttributedGraph &g, std::span<const NodeId> touched) {
    std::vector<ClassId> labels = state.partition.labels();
    labels.resize(g.capacity(), kUnlabeled);
    for (NodeId v : touched)
        if (v < labels.size())
            labels[v] = g.label(v);
    return NodePartition(g, std::move(labels));
}

PriorMatrix reseeded(const EngineState &state, const AttributedGraph &g, const NodePartition &part,
                     std::span<const NodeId> touched) {
    const std::size_t k = state.class_count;
    PriorMatrix seed = state.history[0];
    while (seed.rows() < g.capacity())
        seed.append_row(0.0);
    for (NodeId v : touched) {
        if (v >= g.capacity())
            continue;
        auto row = seed.row(v);
        if (!g.alive(v)) {
            std::fill(row.begin(), row.end(), 0.0);
            continue;
        }
        const ClassId y = part.label(v);
        if (y != kUnlabeled) {
            set_row(seed, v, one_hot(k, y));
            continue;
        }
        const bool kept = v < state.history[0].rows() && !state.partition.is_labeled(v) &&
                          std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) < 1e-9;
        if (!kept)
            set_row(seed, v, state.class_prior);
    }
    return seed;
}

EngineState replay(const EngineState &state, const AttributedGraph &g, std::span<const NodeId> touched,
                   bool localized, std::vector<char> *recompute_out, const RunOptions &options = {}) {
    EngineState s;
    s.hp = state.hp;
    s.graph_version = g.version();
    s.class_count = state.class_count;
    s.partition = updated_partition(state, g, touched);
    s.class_prior = state.class_prior;
    s.iteration_scaling = state.iteration_scaling;
    s.history.push_back(reseeded(state, g, s.partition, touched));
    s.order = processing_order(s.partition, s.history[0]);

    std::vector<NodeId> seeds;
    for (NodeId v : touched)
        if (g.alive(v))
            seeds.push_back(v);

    LoopSpec spec;
    spec.fit = false;
    spec.iterations = state.iterations;
    std::vector<char> recompute(g.capacity(), 0);
    if (localized) {
        s.topology = state.topology;
        if (s.hp.features.topology) {
            BallFinder finder(g);
            const auto ring = finder.find_around(seeds, 1);
            std::vector<NodeId> refresh(ring.begin(), ring.end());
            for (NodeId v : touched)
                if (v < g.capacity() && !g.alive(v))
                    refresh.push_back(v);
            refresh_local_topology(s.topology, g, refresh);
        } else {
            s.topology = FeatureMatrix(g.capacity());
        }
        BallFinder finder(g);
        for (NodeId v : finder.find_around(seeds, dependency_radius(s.hp, state.iterations)))
            recompute[v] = 1;
        spec.previous = &state;
        spec.recompute = &recompute;
    } else {
        s.topology = compute_topology(g, s.hp.features);
        for (NodeId v : g.live_nodes())
            recompute[v] = 1;
    }
    collective_loop(s, g, spec, options);
    if (recompute_out != nullptr)
        *recompute_out = std::move(recompute);
    return s;
}

} // namespace

EngineState warm_rerun(const EngineState &state, const AttributedGraph &g, std::span<const NodeId> touched) {
    return replay(state, g, touched, false, nullptr);
}

PredictionDelta incremental_update(EngineState &state, const AttributedGraph &g, const ChangeRecord &change) {
    return absorb_changes(state, g, std::span<const ChangeRecord>(&change, 1));
}

PredictionDelta absorb_changes(EngineState &state, const AttributedGraph &g, std::span<const ChangeRecord> changes,
                               const RunOptions &options) {
    std::uint64_t expected = state.graph_version;
    std::vector<NodeId> touched;
    for (const auto &change : changes) {
        if (change.version != ++expected)
            throw Error(ErrorCode::stale_state, "engine state is at graph version " +
                                                    std::to_string(state.graph_version) + " but change " +
                                                    std::to_string(change.version) + " does not follow it");
        touched.insert(touched.end(), change.touched.begin(), change.touched.end());
    }
    if (g.version() != expected)
        throw Error(ErrorCode::stale_state, "the changes end at graph version " + std::to_string(expected) +
                                                " but the graph is at version " + std::to_string(g.version()));
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    const bool localized = supports_localized_update(state.hp);
    std::vector<char> recompute;
    EngineState next = replay(state, g, touched, localized, &recompute, options);

    PredictionDelta delta;
    delta.version = g.version();
    delta.localized = localized;
    for (NodeId v = 0; v < recompute.size(); ++v)
        if (recompute[v])
            delta.recomputed.push_back(v);
    for (const auto &p : next.predictions.predictions) {
        const auto *old = state.predictions.find(p.node);
        if (old == nullptr || !(*old == p))
            delta.changed.push_back(p);
    }
    for (const auto &p : state.predictions.predictions)
        if (next.predictions.find(p.node) == nullptr)
            delta.removed.push_back(p.node);
    state = std::move(next);
    return delta;
}

} // namespace rsm
