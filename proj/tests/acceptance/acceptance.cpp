#include <rsm/engine.hpp>
#include <rsm/eval.hpp>
#include <rsm/features.hpp>
#include <rsm/graph.hpp>
#include <rsm/io.hpp>
#include <rsm/similarity.hpp>
#include <rsm/synthetic.hpp>

#include "oracle.hpp"
#include "random_cases.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace rsm;
using Clock = std::chrono::steady_clock;

enum class Status { pass, fail, skip };

struct Outcome {
    Status status;
    std::string detail;
};

struct Criterion {
    std::string name;
    std::function<Outcome()> run;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v, const char *spec = "%.3g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Outcome verdict(bool ok, const std::string &detail) { return {ok ? Status::pass : Status::fail, detail}; }

NodePartition keep_fraction(const AttributedGraph &g, double fraction, std::uint64_t seed) {
    return NodePartition(g, synthetic::keep_labels(g, synthetic::stratified_sample(g, fraction, seed)));
}

// -- criteria ----------------------------------------------------------------------

Outcome oracle_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    int mismatched = 0;
    for (int i = 0; i < 200; ++i) {
        const auto inst = cases::random_instance(rng, 8, 3);
        const auto state = fit(inst.graph, inst.partition, inst.hp);
        const auto ref = oracle::run_alg1(oracle::to_plain(inst.graph, inst.partition.labels()), inst.hp);
        const auto &P = state.estimates();
        bool same = state.iterations == ref.iterations;
        for (NodeId v = 0; v < inst.graph.capacity(); ++v) {
            for (std::size_t c = 0; c < inst.graph.class_count(); ++c) {
                const double diff = std::abs(P(v, c) - ref.P[v][c]);
                worst = std::max(worst, diff);
                same = same && diff <= 1e-9;
            }
            same = same && (state.frozen[v] != 0) == ref.frozen[v];
        }
        mismatched += same ? 0 : 1;
    }
    const double t = seconds_since(start);
    return verdict(mismatched == 0 && t < 30.0, "200 instances, " + std::to_string(mismatched) +
                                                    " mismatched, max |dP| " + num(worst) + ", " + num(t) + " s");
}

// With alpha = omega = 0 the decision is the iid vote over labeled nodes
// outside the k-hop ball, which is plain classify_iid when there are no edges.
int collapse_mismatches(const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp,
                        std::size_t &checked) {
    const auto preds = run(g, part, hp);
    const auto x = normalize(base_features(g, hp.features), hp.features.normalization);
    int wrong = 0;
    std::size_t j = 0;
    for (NodeId i : part.unlabeled()) {
        const auto ball = neighborhood(g, i, hp.hops);
        Matrix train(0, x.cols()), test(0, x.cols());
        std::vector<ClassId> labels;
        std::vector<std::vector<double>> plain_train;
        for (NodeId v : part.labeled()) {
            if (std::binary_search(ball.begin(), ball.end(), v))
                continue;
            train.append_row(x.row(v));
            plain_train.emplace_back(x.row(v).begin(), x.row(v).end());
            labels.push_back(part.label(v));
        }
        const auto label = preds.predictions[j++].label;
        if (labels.empty())
            continue;
        test.append_row(x.row(i));
        const auto hand = oracle::iid_decision({std::vector<double>(x.row(i).begin(), x.row(i).end())}, plain_train,
                                               std::vector<int>(labels.begin(), labels.end()), g.class_count(),
                                               hp.kernel);
        std::vector<char> present(g.class_count(), 0);
        for (ClassId c : labels)
            present[static_cast<std::size_t>(c)] = 1;
        auto want = hand;
        if (std::all_of(present.begin(), present.end(), [](char p) { return p != 0; }))
            want = classify_iid(test, train, labels, g.class_count(), hp.kernel);
        wrong += label == want[0] && want[0] == hand[0] ? 0 : 1;
        ++checked;
    }
    return wrong;
}

Outcome special_case_collapse() {
    std::mt19937_64 rng(99);
    int wrong_edgeless = 0;
    int wrong_graph = 0;
    std::size_t checked = 0;
    for (int i = 0; i < 50; ++i) {
        const auto g = cases::small_graph(rng, 14, 3);
        const auto part = cases::random_partition(g, rng);
        Hyperparams hp;
        hp.alpha = 0.0;
        hp.omega = 0.0;
        hp.ssl = false;
        hp.tau_max = 1;
        hp.prior_mode = PriorMode::uniform;
        hp.kernel.sigma = std::vector<double>{0.3, 1.0, 2.0}[i % 3];
        hp.hops = 1 + i % 2;
        hp.features.topology = i % 2 == 0;
        hp.features.relational_class = false;
        hp.features.relational_attr = false;
        AttributedGraph bare(g.capacity(), g.feature_dim(), g.class_count());
        for (NodeId v = 0; v < g.capacity(); ++v)
            bare.set_features(v, g.features(v));
        wrong_edgeless += collapse_mismatches(bare, part, hp, checked);
        wrong_graph += collapse_mismatches(g, part, hp, checked);
    }
    return verdict(wrong_edgeless + wrong_graph == 0,
                   "50 instances, " + std::to_string(checked) + " decisions, " + std::to_string(wrong_edgeless) +
                       " edgeless / " + std::to_string(wrong_graph) + " out-of-ball mismatches");
}

Outcome kernel_suite() {
    const auto start = Clock::now();
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto vec = [&](std::size_t d, double density) {
        std::vector<double> v(d, 0.0);
        for (double &x : v)
            if (unit(rng) < density)
                x = normal(rng);
        return v;
    };
    int failures = 0;
    auto expect = [&](bool ok) { failures += ok ? 0 : 1; };
    for (int i = 0; i < 500; ++i) {
        const auto x = vec(8, 0.7);
        const auto z = vec(8, 0.7);
        for (auto kind : {KernelKind::rbf, KernelKind::polynomial, KernelKind::dot}) {
            const KernelSpec spec{kind, 0.8, 3, 0.5};
            expect(similarity(spec, x, z) == similarity(spec, z, x));
        }
        double last = 0.0;
        for (double sigma : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const KernelSpec rbf{KernelKind::rbf, sigma};
            expect(similarity(rbf, x, x) == 1.0);
            const double s = similarity(rbf, x, z);
            expect(s >= 0.0 && s <= 1.0);
            if (x != z) {
                expect(s > last || (last == 0.0 && s == 0.0));
                last = s;
            }
        }
    }
    double worst = 0.0;
    std::uniform_int_distribution<std::size_t> dim(1, 80);
    for (int i = 0; i < 1000; ++i) {
        const std::size_t d = dim(rng);
        const auto x = vec(d, 0.25);
        const auto z = vec(d, 0.1);
        for (auto kind : {KernelKind::rbf, KernelKind::polynomial, KernelKind::dot}) {
            const KernelSpec spec{kind, 1.1, 2, 1.0};
            worst = std::max(worst, std::abs(similarity_sparse(spec, to_sparse(x), to_sparse(z)) -
                                             similarity(spec, x, z)));
        }
    }
    expect(worst <= 1e-12);
    // (x.z + c)^q by hand
    const std::vector<double> a{1, 0};
    const std::vector<double> b{1, 1};
    expect(similarity(KernelSpec{KernelKind::polynomial, 1, 2, 1.0}, a, b) == 4.0);
    expect(similarity(KernelSpec{KernelKind::polynomial, 1, 3, 0.5}, std::vector<double>{1, 2},
                      std::vector<double>{0.5, 0.25}) == 3.375);
    expect(similarity(KernelSpec{KernelKind::polynomial, 1, 1, 0.0}, std::vector<double>{2, 3},
                      std::vector<double>{4, -1}) == 5.0);
    expect(std::abs(similarity(KernelSpec{KernelKind::rbf, 1.0}, a, std::vector<double>{0, 0}) - std::exp(-0.5)) <
           1e-15);
    const double t = seconds_since(start);
    return verdict(failures == 0 && t < 5.0, std::to_string(failures) + " failed checks, sparse vs dense max diff " +
                                                 num(worst) + ", " + num(t) + " s");
}

Outcome graphlet_suite() {
    const auto start = Clock::now();
    std::mt19937_64 rng(4242);
    int wrong = 0;
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + rng() % 14;
        const double p = 0.1 + 0.7 * static_cast<double>(rng() % 1000) / 1000.0;
        const auto g = synthetic::random_graph({n, p, 0, 2, rng()});
        const auto want = oracle::enumerate_graphlets(oracle::to_plain(g));
        GraphletCounter counter(g);
        for (NodeId v = 0; v < n; ++v) {
            const auto got = counter.count(v);
            wrong += got.triangles == want[v].triangles && got.star3 == want[v].star3 &&
                             got.clique4 == want[v].clique4 && got.cycle4 == want[v].cycle4
                         ? 0
                         : 1;
        }
    }
    // K4, the 5-leaf star and the 4-path by hand.
    AttributedGraph k4(4, 0, 2);
    for (NodeId u = 0; u < 4; ++u)
        for (NodeId v = u + 1; v < 4; ++v)
            k4.add_edge(u, v);
    AttributedGraph star(6, 0, 2);
    for (NodeId v = 1; v < 6; ++v)
        star.add_edge(0, v);
    AttributedGraph path(4, 0, 2);
    for (NodeId v = 0; v + 1 < 4; ++v)
        path.add_edge(v, v + 1);
    int closed = 0;
    for (NodeId v = 0; v < 4; ++v) {
        const auto c = GraphletCounter(k4).count(v);
        closed += c.triangles == 3 && c.clique4 == 1 && c.star3 == 0 && c.cycle4 == 0 ? 0 : 1;
        const auto pc = GraphletCounter(path).count(v);
        closed += pc.triangles == 0 && pc.clique4 == 0 && pc.star3 == 0 && pc.cycle4 == 0 ? 0 : 1;
    }
    closed += GraphletCounter(star).count(0).star3 == 10 ? 0 : 1;
    closed += GraphletCounter(star).count(3).star3 == 0 ? 0 : 1;
    const auto core = core_numbers(k4);
    closed += std::all_of(core.begin(), core.end(), [](auto c) { return c == 3; }) ? 0 : 1;
    const double t = seconds_since(start);
    return verdict(wrong == 0 && closed == 0 && t < 60.0,
                   "100 graphs, " + std::to_string(wrong) + " node mismatches, " + std::to_string(closed) +
                       " closed-form mismatches, " + num(t) + " s");
}

Outcome simplex_conservation() {
    std::mt19937_64 rng(5150);
    std::size_t rows = 0;
    int bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        auto inst = cases::random_instance(rng, 30, 4);
        inst.hp.tau_max = 8;
        RunOptions opts;
        opts.observer = [&](const IterationInfo &info) {
            for (NodeId v = 0; v < info.estimates->rows(); ++v) {
                double s = 0.0;
                bool neg = false;
                for (double x : info.estimates->row(v)) {
                    s += x;
                    neg = neg || x < 0.0;
                }
                worst = std::max(worst, std::abs(s - 1.0));
                bad += neg || std::abs(s - 1.0) > 1e-9 ? 1 : 0;
                ++rows;
            }
        };
        fit(inst.graph, inst.partition, inst.hp, opts);
    }
    return verdict(bad == 0, "50 runs, " + std::to_string(rows) + " rows checked, " + std::to_string(bad) +
                                 " off the simplex, max |sum-1| " + num(worst));
}

Outcome serial_parallel() {
    const auto g = synthetic::planted_partition({500, 3, 0.04, 0.005, 4, 1.0, 17});
    const auto part = keep_fraction(g, 0.2, 18);
    Hyperparams hp;
    hp.hops = 2;
    hp.workers = 1;
    const auto base = run(g, part, hp);
    double worst = 0.0;
    int label_diffs = 0;
    for (unsigned w : {2u, 4u, 8u}) {
        hp.workers = w;
        const auto other = run(g, part, hp);
        for (std::size_t i = 0; i < base.size(); ++i) {
            label_diffs += base.predictions[i].label == other.predictions[i].label ? 0 : 1;
            for (std::size_t c = 0; c < base.predictions[i].probabilities.size(); ++c)
                worst = std::max(worst, std::abs(base.predictions[i].probabilities[c] -
                                                 other.predictions[i].probabilities[c]));
        }
    }
    return verdict(label_diffs == 0 && worst <= 1e-9, "500 nodes, workers 1/2/4/8: " + std::to_string(label_diffs) +
                                                           " label differences, max |dp| " + num(worst));
}

Outcome complexity_contract() {
    constexpr std::size_t d = 32;
    constexpr std::size_t tests = 256;
    constexpr std::size_t k = 4;
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto rows = [&](std::size_t n) {
        Matrix m(n, d);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j)
                m(i, j) = normal(rng);
        return m;
    };
    const Matrix test = rows(tests);
    const KernelSpec spec{KernelKind::rbf, 2.0};
    std::vector<double> per_node;
    for (std::size_t n : {1000u, 2000u, 4000u, 8000u}) {
        const Matrix train = rows(n);
        std::vector<ClassId> labels(n);
        for (std::size_t i = 0; i < n; ++i)
            labels[i] = static_cast<ClassId>(i % k);
        std::vector<double> times;
        double sink = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            const auto start = Clock::now();
            const auto w = iid_scores(test, train, labels, k, spec);
            times.push_back(seconds_since(start));
            sink += w(0, 0);
        }
        std::nth_element(times.begin(), times.begin() + 2, times.end());
        per_node.push_back(times[2] / tests + sink * 0.0);
    }
    bool ok = true;
    std::string detail = "per-test-node time ratios for |V^l| 1k->2k->4k->8k:";
    for (std::size_t i = 1; i < per_node.size(); ++i) {
        const double r = per_node[i] / per_node[i - 1];
        ok = ok && r >= 1.4 && r <= 2.6;
        detail += " " + num(r, "%.2f");
    }
    return verdict(ok, detail + " (" + num(per_node.back() * 1e6, "%.1f") + " us at 8k)");
}

struct IncrementalCounts {
    int mutations = 0;
    int outside_diff = 0;
    int inside_diff = 0;
    double worst_inside = 0.0;
};

Mutation random_mutation(const AttributedGraph &g, std::mt19937_64 &rng) {
    const auto live = g.live_nodes();
    std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (;;) {
        const NodeId u = live[pick(rng)];
        const NodeId v = live[pick(rng)];
        switch (rng() % 7) {
        case 0:
            if (u != v && !g.has_edge(u, v))
                return mutation::AddEdge{u, v, 1.0};
            break;
        case 1:
            if (g.degree(u) > 0)
                return mutation::DeleteEdge{u, g.neighbors(u)[rng() % g.degree(u)].id};
            break;
        case 2:
            if (!g.is_labeled(u))
                return mutation::SetLabel{u, static_cast<ClassId>(rng() % g.class_count())};
            break;
        case 3:
            if (g.is_labeled(u) && NodePartition::from_graph(g).class_counts(g.class_count())[g.label(u)] > 2)
                return mutation::ClearLabel{u};
            break;
        case 4:
            if (g.feature_dim() > 0)
                return mutation::SetFeature{u, rng() % g.feature_dim(), normal(rng)};
            break;
        case 5: return mutation::AddNode{std::vector<double>(g.feature_dim(), 0.5), kUnlabeled, ""};
        default:
            if (!g.is_labeled(u))
                return mutation::DeleteNode{u};
            break;
        }
    }
}

IncrementalCounts incremental_run(const Hyperparams &hp, std::uint64_t seed, int mutations) {
    auto g = synthetic::planted_partition({200, 2, 0.05, 0.01, 3, 1.0, seed});
    const auto part = keep_fraction(g, 0.25, seed + 1);
    for (NodeId v = 0; v < g.capacity(); ++v)
        g.set_label(v, part.label(v));
    auto state = fit(g, part, hp);
    std::mt19937_64 rng(seed + 2);
    IncrementalCounts out;
    for (int i = 0; i < mutations; ++i) {
        const auto rec = g.apply(random_mutation(g, rng));
        const auto reference = warm_rerun(state, g, rec.touched);
        const auto delta = incremental_update(state, g, rec);
        std::vector<char> inside(g.capacity(), 0);
        for (NodeId v : delta.recomputed)
            inside[v] = 1;
        const auto &got = state.predictions.predictions;
        const auto &want = reference.predictions.predictions;
        if (got.size() != want.size()) {
            ++out.outside_diff;
            continue;
        }
        for (std::size_t j = 0; j < got.size(); ++j) {
            const NodeId v = got[j].node;
            if (!inside[v]) {
                out.outside_diff += got[j] == want[j] ? 0 : 1;
                continue;
            }
            double diff = 0.0;
            for (std::size_t c = 0; c < got[j].probabilities.size(); ++c)
                diff = std::max(diff, std::abs(got[j].probabilities[c] - want[j].probabilities[c]));
            out.worst_inside = std::max(out.worst_inside, diff);
            out.inside_diff += diff <= 1e-6 && got[j].label == want[j].label ? 0 : 1;
        }
        ++out.mutations;
    }
    return out;
}

Outcome incremental_equivalence() {
    Hyperparams local;
    local.alpha = 1.0;
    local.ssl = false;
    local.features.topology_global = false;
    local.tau_max = 20;
    local.epsilon = 1e-10;
    Hyperparams global;
    global.tau_max = 20;
    global.epsilon = 1e-10;
    const auto a = incremental_run(local, 301, 100);
    const auto b = incremental_run(global, 302, 100);
    const bool ok = a.outside_diff + a.inside_diff + b.outside_diff + b.inside_diff == 0 && a.mutations == 100 &&
                    b.mutations == 100;
    return verdict(ok, "localized: 100 mutations, " + std::to_string(a.outside_diff) + " outside / " +
                           std::to_string(a.inside_diff) + " inside mismatches (max " + num(a.worst_inside) +
                           "); global: " + std::to_string(b.outside_diff) + " / " + std::to_string(b.inside_diff) +
                           " (max " + num(b.worst_inside) + ")");
}

struct SweepResult {
    double rsm = 0.0;
    double wvrn = 0.0;
};

// Planted 2-block graphs, 100 nodes, 20% labeled; alpha chosen by inner CV.
SweepResult homophily_point(double p_in, double p_out, std::uint64_t seed) {
    const auto rsm = rsm_method();
    const auto baseline = wvrn_method();
    GridSpec spec;
    spec.alpha = {0.0, 0.25, 0.5, 0.7, 0.75, 1.0};
    const auto grid = expand_grid(Hyperparams{}, spec);
    SweepResult out;
    constexpr int trials = 20;
    for (int t = 0; t < trials; ++t) {
        const auto g = synthetic::planted_partition({100, 2, p_in, p_out, 4, 1.0, seed + 10 * t});
        const auto truth = NodePartition::from_graph(g);
        const auto part = keep_fraction(g, 0.2, seed + 10 * t + 1);
        const auto hp = select_hyperparams(g, part, rsm, grid, 3, seed + t);
        const auto hidden = part.unlabeled();
        out.rsm += accuracy(rsm.predict(g, part, hp), hidden, truth) / trials;
        out.wvrn += accuracy(baseline.predict(g, part, hp), hidden, truth) / trials;
    }
    return out;
}

Outcome homophily_sweep() {
    const auto high = homophily_point(0.15, 0.01, 1000);
    const auto low = homophily_point(0.06, 0.04, 2000);
    return verdict(high.rsm >= 0.90 && low.rsm >= low.wvrn,
                   "p_in/p_out=15: RSM " + num(high.rsm, "%.3f") + " (wvRN " + num(high.wvrn, "%.3f") +
                       "); p_in/p_out=1.5: RSM " + num(low.rsm, "%.3f") + " vs wvRN " + num(low.wvrn, "%.3f"));
}

Outcome polbooks(const std::string &data_dir) {
    const auto dir = std::filesystem::path(data_dir.empty() ? "data" : data_dir) / "polbooks";
    if (!std::filesystem::exists(dir / "edges.txt"))
        return {Status::skip, "no bundle at " + dir.string()};
    const auto start = Clock::now();
    const auto g = load_dataset(DatasetPaths::bundle(dir)).graph;
    Hyperparams hp;
    hp.kernel.sigma = 0.3;
    hp.alpha = 0.7;
    hp.omega = 0.6;
    hp.features.topology = true;
    EvalConfig cfg;
    cfg.folds = 5;
    cfg.trials = 20;
    cfg.seed = 1;
    cfg.dataset = "polbooks";
    const auto part = NodePartition::from_graph(g);
    const auto a = cross_validate(g, part, cfg, rsm_method(), {hp});
    const auto b = cross_validate(g, part, cfg, wvrn_method(), {hp});
    const double t = seconds_since(start);
    return verdict(std::abs(100.0 * a.mean - 84.73) <= 5.0 && a.mean > b.mean && t < 300.0,
                   "RSM " + num(100.0 * a.mean, "%.2f") + "% vs wvRN " + num(100.0 * b.mean, "%.2f") +
                       "% (target 84.73 +- 5), " + num(t) + " s");
}

Outcome sparse_label_direction() {
    const auto start = Clock::now();
    const auto g = synthetic::citation_graph({2708, 7, 4.0, 0.8, 2.5, 11});
    const auto part = NodePartition::from_graph(g);
    Hyperparams base;
    base.features.raw = false;
    base.alpha = 1.0;
    GridSpec spec;
    spec.hops = {1, 2};
    spec.sigma = {0.3, 1.0};
    const auto grid = expand_grid(base, spec);
    const auto rsm = rsm_method();
    const Method tuned{"rsm", [&](const AttributedGraph &graph, const NodePartition &p, const Hyperparams &) {
                           return rsm.predict(graph, p, select_hyperparams(graph, p, rsm, grid, 3, 5));
                       }};
    const auto a = sparse_label_experiment(g, part, 0.1, tuned, base, 20, 5);
    const auto b = sparse_label_experiment(g, part, 0.1, wvrn_method(), base, 20, 5);
    return verdict(a.mean > b.mean, "10% labels, 20 trials: RSM " + num(100.0 * a.mean, "%.2f") + "% vs wvRN " +
                                        num(100.0 * b.mean, "%.2f") + "%, " + num(seconds_since(start)) + " s");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Acceptance suite"};
    std::vector<std::string> only;
    std::vector<std::string> shortfalls;
    std::string data_dir;
    app.add_option("--allow-fail", shortfalls, "Criteria whose failure is a documented shortfall");
    app.add_option("--only", only, "Run only these criteria");
    app.add_option("--data", data_dir, "Directory holding dataset bundles")->envname("RSM_DATA_DIR");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria = {
        {"oracle-equivalence", oracle_equivalence},
        {"special-case-collapse", special_case_collapse},
        {"kernel-suite", kernel_suite},
        {"graphlet-suite", graphlet_suite},
        {"simplex-conservation", simplex_conservation},
        {"serial-parallel", serial_parallel},
        {"complexity-contract", complexity_contract},
        {"incremental-equivalence", incremental_equivalence},
        {"homophily-sweep", homophily_sweep},
        {"polbooks", [&] { return polbooks(data_dir); }},
        {"sparse-label-direction", sparse_label_direction},
    };
    int failed = 0;
    int passed = 0;
    int skipped = 0;
    for (const auto &c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end())
            continue;
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o = {Status::fail, std::string("threw: ") + e.what()};
        }
        const char *tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
        const bool allowed = std::find(shortfalls.begin(), shortfalls.end(), c.name) != shortfalls.end();
        std::cout << tag << " " << c.name << ": " << o.detail
                  << (o.status == Status::fail && allowed ? " [documented shortfall]" : "") << std::endl;
        failed += o.status == Status::fail && !allowed ? 1 : 0;
        passed += o.status == Status::pass ? 1 : 0;
        skipped += o.status == Status::skip ? 1 : 0;
    }
    if (failed > 0)
        return 1;
    return passed == 0 && skipped > 0 ? 77 : 0;
}
