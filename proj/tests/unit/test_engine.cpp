#include <gtest/gtest.h>

#include <rsm/engine.hpp>
#include <rsm/error.hpp>
#include <rsm/synthetic.hpp>

#include "oracle.hpp"
#include "random_cases.hpp"

#include <cmath>
#include <random>

namespace rsm {

class EngineGTest : public testing::Test {
protected:
    static AttributedGraph two_cliques() {
        AttributedGraph g(8, 0, 2);
        for (NodeId base : {0u, 4u})
            for (NodeId a = 0; a < 4; ++a)
                for (NodeId b = a + 1; b < 4; ++b)
                    g.add_edge(base + a, base + b);
        return g;
    }

    static void expect_code(ErrorCode code, const std::function<void()> &fn) {
        try {
            fn();
            ADD_FAILURE() << "expected " << to_string(code);
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), code) << e.what();
        }
    }
};

TEST_F(EngineGTest, testHyperparamValidation) {
    Hyperparams hp;
    EXPECT_NO_THROW(hp.validate());
    hp.alpha = 1.5;
    expect_code(ErrorCode::parameter, [&] { hp.validate(); });
    hp = {};
    hp.topk_fraction = 0.0;
    expect_code(ErrorCode::parameter, [&] { hp.validate(); });
    hp = {};
    hp.kernel.sigma = 0.0;
    expect_code(ErrorCode::parameter, [&] { hp.validate(); });
}

TEST_F(EngineGTest, testGlobalPriorIsClassFrequency) {
    AttributedGraph g(6, 1, 2);
    const NodePartition part(g, {0, 0, 1, 1, kUnlabeled, kUnlabeled});
    Hyperparams hp;
    hp.prior_mode = PriorMode::global;
    const auto P = estimate_priors(g, part, hp);
    EXPECT_EQ(P(4, 0), 0.5);
    EXPECT_EQ(P(4, 1), 0.5);
    EXPECT_EQ(P(0, 0), 1.0);
    EXPECT_EQ(P(2, 1), 1.0);
}

TEST_F(EngineGTest, testMeshStepIsOneArithmeticStep) {
    // node 0 unlabeled with neighbours 1 (class 0) and 2 (class 1)
    AttributedGraph g(4, 1, 2);
    g.set_features(0, std::vector<double>{0.0});
    g.set_features(1, std::vector<double>{0.1});
    g.set_features(2, std::vector<double>{1.0});
    g.set_features(3, std::vector<double>{0.9});
    g.add_edge(0, 1);
    g.add_edge(0, 2);
    const NodePartition part(g, {kUnlabeled, 0, 1, kUnlabeled});
    Hyperparams hp;
    hp.features.topology = false;
    hp.mesh = 0.5;
    hp.prior_iters = 0;
    const auto s2 = estimate_priors(g, part, hp);
    hp.prior_iters = 1;
    const auto s3 = estimate_priors(g, part, hp);
    // neighbour rows [1,0] and [0,1] average to [0.5,0.5]
    const double a = 0.5 * s2(0, 0) + 0.25;
    const double b = 0.5 * s2(0, 1) + 0.25;
    EXPECT_NEAR(s3(0, 0), a / (a + b), 1e-15);
    EXPECT_NEAR(s3(0, 1), b / (a + b), 1e-15);
    // isolated node keeps its row
    EXPECT_EQ(s3(3, 0), s2(3, 0));
    EXPECT_EQ(s3(3, 1), s2(3, 1));
}

TEST_F(EngineGTest, testMeshWorkedExample) {
    // With the iid vote pinned to [1,0] by identical features, one mesh round
    // of [1,0] against neighbours [1,0] and [0,1] gives [0.75, 0.25].
    AttributedGraph g(3, 1, 2);
    g.add_edge(0, 1);
    g.add_edge(0, 2);
    const NodePartition part(g, {kUnlabeled, 0, 1});
    Hyperparams hp;
    hp.features.topology = false;
    hp.kernel = {KernelKind::dot};
    g.set_features(1, std::vector<double>{1.0});
    g.set_features(0, std::vector<double>{1.0});
    hp.features.normalization = Normalization::none;
    hp.prior_iters = 1;
    const auto P = estimate_priors(g, part, hp);
    EXPECT_DOUBLE_EQ(P(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(P(0, 1), 0.25);
}

TEST_F(EngineGTest, testPriorErrors) {
    AttributedGraph g(4, 0, 2);
    const NodePartition missing(g, {0, 0, kUnlabeled, kUnlabeled});
    expect_code(ErrorCode::missing_class, [&] { estimate_priors(g, missing, Hyperparams{}); });
    AttributedGraph one(3, 0, 1);
    const NodePartition single(one, {0, kUnlabeled, 0});
    expect_code(ErrorCode::degenerate_task, [&] { estimate_priors(one, single, Hyperparams{}); });
}

TEST_F(EngineGTest, testSupervisedSingleNeighbour) {
    AttributedGraph g(2, 1, 2);
    g.add_edge(0, 1);
    const NodePartition part(g, {kUnlabeled, 0});
    Matrix F(2, 1);
    F(0, 0) = 0.6;
    F(1, 0) = 1.0;
    Matrix P(2, 2, 0.5);
    Hyperparams hp;
    hp.kernel = {KernelKind::dot};
    const auto w = accumulate_supervised(0, g, part, P, F, hp);
    EXPECT_DOUBLE_EQ(w.relational[0], 0.3);
    EXPECT_EQ(w.relational[1], 0.0);
    EXPECT_EQ(w.iid, (std::vector<double>{0.0, 0.0}));

    const NodePartition nobody(g, {kUnlabeled, kUnlabeled});
    const auto empty = accumulate_supervised(0, g, nobody, P, F, hp);
    EXPECT_EQ(empty.relational, (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(empty.iid, (std::vector<double>{0.0, 0.0}));
}

TEST_F(EngineGTest, testAccumulationMatchesDoubleLoop) {
    std::mt19937_64 rng(3);
    for (int round = 0; round < 20; ++round) {
        auto inst = cases::random_instance(rng, 8, 3);
        inst.hp.hops = 1 + round % 2;
        const auto &g = inst.graph;
        const std::size_t n = g.capacity();
        const std::size_t k = g.class_count();
        Matrix F(n, 3);
        Matrix P(n, k);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (double &x : F.data())
            x = unit(rng);
        for (NodeId v = 0; v < n; ++v) {
            double s = 0.0;
            for (std::size_t c = 0; c < k; ++c)
                s += (P(v, c) = unit(rng));
            for (std::size_t c = 0; c < k; ++c)
                P(v, c) /= s;
        }
        const auto plain = oracle::to_plain(g, inst.partition.labels());
        const auto dist = oracle::hop_distances(plain);
        for (NodeId i : inst.partition.unlabeled()) {
            std::vector<double> wr(k, 0.0), wi(k, 0.0), sr(k, 0.0), si(k, 0.0);
            for (NodeId j = 0; j < n; ++j) {
                if (j == i)
                    continue;
                std::vector<double> a(F.row(i).begin(), F.row(i).end());
                std::vector<double> b(F.row(j).begin(), F.row(j).end());
                double s = oracle::kernel(inst.hp.kernel, a, b);
                if (inst.hp.use_edge_weight && plain.adjacent(i, j))
                    s *= plain.weight[i][j];
                const bool near = dist[i][j] >= 1 && dist[i][j] <= inst.hp.hops;
                if (plain.label[j] >= 0) {
                    (near ? wr : wi)[plain.label[j]] += P(i, plain.label[j]) * s;
                } else {
                    for (std::size_t c = 0; c < k; ++c)
                        (near ? sr : si)[c] += P(i, c) * P(j, c) * s;
                }
            }
            const auto sup = accumulate_supervised(i, g, inst.partition, P, F, inst.hp);
            const auto ssl = accumulate_ssl(i, g, inst.partition, P, F, inst.hp);
            for (std::size_t c = 0; c < k; ++c) {
                EXPECT_NEAR(sup.relational[c], wr[c], 1e-12);
                EXPECT_NEAR(sup.iid[c], wi[c], 1e-12);
                EXPECT_NEAR(ssl.relational[c], sr[c], 1e-12);
                EXPECT_NEAR(ssl.iid[c], si[c], 1e-12);
            }
        }
    }
}

TEST_F(EngineGTest, testSslNeighbourTerm) {
    AttributedGraph g(2, 1, 2);
    g.add_edge(0, 1);
    const NodePartition part(g, {kUnlabeled, kUnlabeled});
    Matrix F(2, 1);
    F(0, 0) = 0.5;
    F(1, 0) = 1.0;
    Matrix P(2, 2);
    P(0, 0) = 0.4;
    P(0, 1) = 0.6;
    P(1, 1) = 1.0;
    Hyperparams hp;
    hp.kernel = {KernelKind::dot};
    const auto w = accumulate_ssl(0, g, part, P, F, hp);
    EXPECT_EQ(w.relational[0], 0.0);
    EXPECT_DOUBLE_EQ(w.relational[1], 0.3);
}

TEST_F(EngineGTest, testSslUniformIsSymmetric) {
    const auto g = synthetic::random_graph({10, 0.3, 2, 3, 6});
    const NodePartition part(g, std::vector<ClassId>(10, kUnlabeled));
    Matrix F(10, 2);
    for (NodeId v = 0; v < 10; ++v) {
        F(v, 0) = g.features(v)[0];
        F(v, 1) = g.features(v)[1];
    }
    const Matrix P(10, 3, 1.0 / 3.0);
    const auto w = accumulate_ssl(0, g, part, P, F, Hyperparams{});
    EXPECT_DOUBLE_EQ(w.relational[0], w.relational[1]);
    EXPECT_DOUBLE_EQ(w.relational[1], w.relational[2]);
    EXPECT_DOUBLE_EQ(w.iid[0], w.iid[2]);
}

TEST_F(EngineGTest, testUpdateEstimateExamples) {
    Hyperparams hp;
    hp.alpha = 0.7;
    hp.omega = 0.6;
    WeightPair w(2);
    w.relational = {1.0, 0.0};
    w.iid = {0.0, 1.0};
    const auto p = update_estimate(w, std::vector<double>{0.5, 0.5}, hp);
    EXPECT_DOUBLE_EQ(p[0], 0.625);
    EXPECT_DOUBLE_EQ(p[1], 0.375);

    hp.alpha = 1.0;
    hp.omega = 0.0;
    w.relational = {0.2, 0.8};
    const auto r = update_estimate(w, std::vector<double>{0.9, 0.1}, hp);
    EXPECT_DOUBLE_EQ(r[0], 0.2);
    EXPECT_DOUBLE_EQ(r[1], 0.8);

    hp = {};
    WeightPair u(3);
    u.relational = u.iid = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    for (double x : update_estimate(u, u.relational, hp))
        EXPECT_NEAR(x, 1.0 / 3.0, 1e-15);
}

TEST_F(EngineGTest, testZeroWeightsBecomeUniform) {
    WeightPair w(4);
    w.iid = {0.0, 2.0, 2.0, 0.0};
    normalize_weights(w);
    EXPECT_EQ(w.relational, (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
    EXPECT_EQ(w.iid, (std::vector<double>{0.0, 0.5, 0.5, 0.0}));
}

TEST_F(EngineGTest, testAlphaExtremesIgnoreTheOtherTerm) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        WeightPair a(3);
        for (std::size_t c = 0; c < 3; ++c) {
            a.relational[c] = unit(rng);
            a.iid[c] = unit(rng);
        }
        normalize_weights(a);
        WeightPair b = a;
        for (double &x : b.iid)
            x = unit(rng);
        normalize_weights(b);
        Hyperparams hp;
        hp.alpha = 1.0;
        const std::vector<double> prev{0.2, 0.3, 0.5};
        auto near = [](const std::vector<double> &x, const std::vector<double> &y) {
            for (std::size_t c = 0; c < x.size(); ++c)
                EXPECT_NEAR(x[c], y[c], 1e-15);
        };
        near(update_estimate(a, prev, hp), update_estimate(b, prev, hp));
        WeightPair c = a;
        for (double &x : c.relational)
            x = unit(rng);
        normalize_weights(c);
        hp.alpha = 0.0;
        near(update_estimate(a, prev, hp), update_estimate(c, prev, hp));
    }
}

TEST_F(EngineGTest, testCertaintyExamples) {
    EXPECT_NEAR(certainty(std::vector<double>{0.5, 0.5}), 0.0, 1e-15);
    EXPECT_NEAR(certainty(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 0.0, 1e-15);
    EXPECT_EQ(certainty(std::vector<double>{0.0, 1.0, 0.0}), 1.0);
    const double h = -(0.9 * std::log(0.9) + 0.1 * std::log(0.1));
    EXPECT_NEAR(certainty(std::vector<double>{0.9, 0.1}), 1.0 - h / std::log(2.0), 1e-15);
    EXPECT_NEAR(certainty(std::vector<double>{0.9, 0.1}), 0.5310, 1e-4);
    expect_code(ErrorCode::domain, [] { certainty(std::vector<double>{0.7, 0.7}); });
    expect_code(ErrorCode::domain, [] { certainty(std::vector<double>{1.2, -0.2}); });
}

TEST_F(EngineGTest, testTopkSelection) {
    Matrix P(3, 2);
    P(0, 0) = 0.9;
    P(0, 1) = 0.1;
    P(1, 0) = 0.4;
    P(1, 1) = 0.6;
    P(2, 0) = 0.2;
    P(2, 1) = 0.8;
    std::vector<NodeId> cand{0, 1, 2};
    std::vector<double> cert{0.9, 0.2, 0.5};
    std::vector<char> frozen(3, 0);
    EXPECT_EQ(assign_topk(cand, cert, 1.0 / 3.0, P, frozen), (std::vector<NodeId>{0}));
    EXPECT_EQ(P(0, 0), 1.0);
    EXPECT_EQ(P(0, 1), 0.0);

    std::vector<char> fresh(3, 0);
    Matrix Q = P;
    EXPECT_EQ(assign_topk(cand, cert, 1.0, Q, fresh).size(), 3u);

    std::vector<double> tied{0.5, 0.5, 0.5};
    std::vector<char> none(3, 0);
    EXPECT_EQ(assign_topk(cand, tied, 0.2, Q, none), (std::vector<NodeId>{0}));
    EXPECT_EQ(assign_topk(cand, tied, 0.2, Q, none), (std::vector<NodeId>{1}));
    std::vector<char> all(3, 1);
    EXPECT_TRUE(assign_topk(cand, tied, 0.5, Q, all).empty());
}

TEST_F(EngineGTest, testClassifyIidClosedForms) {
    Matrix train(2, 2);
    train(0, 0) = 1;
    train(1, 1) = 1;
    Matrix test(1, 2);
    test(0, 1) = 1;
    const std::vector<ClassId> labels{0, 1};
    EXPECT_EQ(classify_iid(test, train, labels, 2, KernelSpec{}), (std::vector<ClassId>{1}));
    Matrix mid(1, 2, 0.5);
    EXPECT_EQ(classify_iid(mid, train, labels, 2, KernelSpec{}), (std::vector<ClassId>{0}));
    expect_code(ErrorCode::missing_class, [&] { classify_iid(mid, train, labels, 3, KernelSpec{}); });
}

TEST_F(EngineGTest, testClassifyIidMatchesDoubleLoop) {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix train(20, 4);
    Matrix test(5, 4);
    for (double &x : train.data())
        x = normal(rng);
    for (double &x : test.data())
        x = normal(rng);
    std::vector<ClassId> labels;
    for (int i = 0; i < 20; ++i)
        labels.push_back(i % 3);
    std::vector<std::vector<double>> tr, te;
    for (std::size_t r = 0; r < 20; ++r)
        tr.emplace_back(train.row(r).begin(), train.row(r).end());
    for (std::size_t r = 0; r < 5; ++r)
        te.emplace_back(test.row(r).begin(), test.row(r).end());
    for (auto spec : {KernelSpec{KernelKind::rbf, 0.7}, KernelSpec{KernelKind::polynomial, 1, 2, 1.0},
                      KernelSpec{KernelKind::dot}}) {
        const auto got = classify_iid(test, train, labels, 3, spec);
        const auto want = oracle::iid_decision(te, tr, std::vector<int>(labels.begin(), labels.end()), 3, spec);
        EXPECT_EQ(std::vector<int>(got.begin(), got.end()), want);
    }
}

TEST_F(EngineGTest, testFullyLabeledGivesEmptyPredictions) {
    const auto g = synthetic::random_graph({10, 0.3, 2, 2, 1});
    const auto part = NodePartition::from_graph(g);
    if (part.class_counts(2)[0] == 0 || part.class_counts(2)[1] == 0)
        GTEST_SKIP();
    EXPECT_TRUE(run(g, part, Hyperparams{}).empty());
}

TEST_F(EngineGTest, testTwoCliques) {
    const auto g = two_cliques();
    std::vector<ClassId> labels(8, kUnlabeled);
    labels[0] = 0;
    labels[4] = 1;
    const NodePartition part(g, labels);
    Hyperparams hp;
    hp.alpha = 1.0;
    hp.hops = 1;
    hp.ssl = true;
    const auto preds = run(g, part, hp);
    ASSERT_EQ(preds.size(), 6u);
    for (const auto &p : preds.predictions)
        EXPECT_EQ(p.label, p.node < 4 ? 0 : 1) << "node " << p.node;

    const auto plain = oracle::to_plain(g, labels);
    const auto ref = oracle::run_alg1(plain, hp);
    for (const auto &p : preds.predictions)
        for (std::size_t c = 0; c < 2; ++c)
            EXPECT_NEAR(p.probabilities[c], ref.P[p.node][c], 1e-9);
}

TEST_F(EngineGTest, testMatchesStraightLineTranscription) {
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 60; ++round) {
        const auto inst = cases::random_instance(rng);
        const auto state = fit(inst.graph, inst.partition, inst.hp);
        const auto ref = oracle::run_alg1(oracle::to_plain(inst.graph, inst.partition.labels()), inst.hp);
        EXPECT_EQ(state.iterations, ref.iterations) << "round " << round;
        const auto &P = state.estimates();
        for (NodeId v = 0; v < inst.graph.capacity(); ++v) {
            for (std::size_t c = 0; c < inst.graph.class_count(); ++c)
                EXPECT_NEAR(P(v, c), ref.P[v][c], 1e-9) << "round " << round << " node " << v;
            EXPECT_EQ(state.frozen[v] != 0, ref.frozen[v]) << "round " << round << " node " << v;
        }
    }
}

TEST_F(EngineGTest, testSimplexAfterEveryIteration) {
    std::mt19937_64 rng(77);
    for (int round = 0; round < 30; ++round) {
        auto inst = cases::random_instance(rng, 20, 4);
        inst.hp.tau_max = 6;
        RunOptions opts;
        std::size_t frozen_before = 0;
        opts.observer = [&](const IterationInfo &info) {
            for (NodeId v = 0; v < info.estimates->rows(); ++v) {
                double s = 0.0;
                for (double x : info.estimates->row(v)) {
                    EXPECT_GE(x, 0.0);
                    s += x;
                }
                EXPECT_NEAR(s, 1.0, 1e-9);
            }
            const auto count = static_cast<std::size_t>(std::count(info.frozen->begin(), info.frozen->end(), 1));
            EXPECT_GE(count, frozen_before);
            frozen_before = count;
        };
        fit(inst.graph, inst.partition, inst.hp, opts);
    }
}

TEST_F(EngineGTest, testFrozenRowsNeverChange) {
    const auto g = synthetic::planted_partition({60, 2, 0.2, 0.05, 2, 1.0, 4});
    const auto keep = synthetic::stratified_sample(g, 0.2, 1);
    const NodePartition part(g, synthetic::keep_labels(g, keep));
    Hyperparams hp;
    hp.epsilon = 1e-12;
    std::vector<char> frozen;
    Matrix rows;
    RunOptions opts;
    opts.observer = [&](const IterationInfo &info) {
        for (NodeId v = 0; v < frozen.size(); ++v)
            if (frozen[v]) {
                const auto now = info.estimates->row(v);
                EXPECT_TRUE(std::equal(now.begin(), now.end(), rows.row(v).begin())) << "node " << v;
            }
        frozen = *info.frozen;
        rows = *info.estimates;
    };
    const auto state = fit(g, part, hp, opts);
    EXPECT_GT(std::count(state.frozen.begin(), state.frozen.end(), 1), 0);
    for (const auto &p : state.predictions.predictions)
        if (p.assigned)
            EXPECT_EQ(p.probabilities[static_cast<std::size_t>(p.label)], 1.0);
}

TEST_F(EngineGTest, testPriorOnlyWhenNoIterations) {
    const auto g = synthetic::planted_partition({40, 2, 0.3, 0.05, 2, 1.0, 9});
    const auto keep = synthetic::stratified_sample(g, 0.3, 2);
    const NodePartition part(g, synthetic::keep_labels(g, keep));
    Hyperparams hp;
    hp.tau_max = 0;
    const auto state = fit(g, part, hp);
    const auto priors = estimate_priors(g, part, hp);
    EXPECT_EQ(state.iterations, 0);
    for (const auto &p : state.predictions.predictions) {
        EXPECT_EQ(p.label, argmax(priors.row(p.node)));
        EXPECT_FALSE(p.assigned);
    }
}

TEST_F(EngineGTest, testIidCollapseOnEdgelessData) {
    std::mt19937_64 rng(5);
    for (int round = 0; round < 20; ++round) {
        auto g = synthetic::random_graph({12, 0.0, 3, 3, rng()});
        auto part = cases::random_partition(g, rng);
        Hyperparams hp;
        hp.alpha = 0.0;
        hp.omega = 0.0;
        hp.ssl = false;
        hp.tau_max = 1;
        hp.prior_mode = PriorMode::uniform;
        hp.features = {};
        hp.features.topology = false;
        hp.features.relational_class = false;
        hp.features.relational_attr = false;
        const auto preds = run(g, part, hp);
        FeatureMatrix x = base_features(g, hp.features);
        x = normalize(std::move(x), hp.features.normalization);
        Matrix train(0, x.cols()), test(0, x.cols());
        std::vector<ClassId> labels;
        for (NodeId v : part.labeled()) {
            train.append_row(x.row(v));
            labels.push_back(part.label(v));
        }
        for (NodeId v : part.unlabeled())
            test.append_row(x.row(v));
        const auto want = classify_iid(test, train, labels, 3, hp.kernel);
        ASSERT_EQ(want.size(), preds.size());
        for (std::size_t i = 0; i < want.size(); ++i)
            EXPECT_EQ(preds.predictions[i].label, want[i]);
    }
}

TEST_F(EngineGTest, testDeterministicAndWorkerIndependent) {
    const auto g = synthetic::planted_partition({120, 3, 0.15, 0.02, 3, 1.0, 31});
    const auto keep = synthetic::stratified_sample(g, 0.25, 3);
    const NodePartition part(g, synthetic::keep_labels(g, keep));
    Hyperparams hp;
    const auto once = run(g, part, hp);
    EXPECT_EQ(once, run(g, part, hp));
    for (unsigned workers : {2u, 3u, 8u}) {
        hp.workers = workers;
        EXPECT_EQ(run(g, part, hp), once) << workers << " workers";
    }
}

TEST_F(EngineGTest, testKernelScaleInvariance) {
    std::mt19937_64 rng(19);
    for (int round = 0; round < 10; ++round) {
        auto g = synthetic::planted_partition({40, 2, 0.25, 0.05, 3, 1.0, rng()});
        const auto keep = synthetic::stratified_sample(g, 0.3, rng());
        const NodePartition part(g, synthetic::keep_labels(g, keep));
        Hyperparams hp;
        hp.kernel = {KernelKind::dot};
        hp.features.topology = false;
        hp.features.relational_class = false;
        hp.features.relational_attr = false;
        hp.features.normalization = Normalization::none;
        hp.prior_mode = PriorMode::global;
        const auto base = run(g, part, hp);
        for (double c : {0.01, 7.0}) {
            auto scaled = g;
            for (NodeId v = 0; v < scaled.capacity(); ++v) {
                std::vector<double> row(g.features(v).begin(), g.features(v).end());
                for (double &x : row)
                    x *= std::sqrt(c);
                scaled.set_features(v, row);
            }
            const auto again = run(scaled, part, hp);
            for (std::size_t i = 0; i < base.size(); ++i)
                EXPECT_EQ(again.predictions[i].label, base.predictions[i].label);
        }
    }
}

TEST_F(EngineGTest, testCancellation) {
    const auto g = synthetic::planted_partition({60, 2, 0.2, 0.05, 2, 1.0, 4});
    const auto keep = synthetic::stratified_sample(g, 0.2, 1);
    const NodePartition part(g, synthetic::keep_labels(g, keep));
    std::stop_source source;
    RunOptions opts;
    opts.stop = source.get_token();
    opts.observer = [&](const IterationInfo &) { source.request_stop(); };
    Hyperparams hp;
    hp.epsilon = 1e-12;
    expect_code(ErrorCode::cancelled, [&] { fit(g, part, hp, opts); });
}

} // namespace rsm
