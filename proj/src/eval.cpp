#include <rsm/eval.hpp>

#include <rsm/error.hpp>
#include <rsm/parallel.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

namespace rsm {

namespace {

std::vector<double> labeled_distribution(const NodePartition &part, std::size_t k) {
    const auto counts = part.class_counts(k);
    const double total = static_cast<double>(part.labeled().size());
    std::vector<double> freq(k);
    for (std::size_t c = 0; c < k; ++c)
        freq[c] = static_cast<double>(counts[c]) / total;
    return freq;
}

void mean_and_std(const std::vector<double> &xs, double &mean, double &stddev) {
    mean = stddev = 0.0;
    if (xs.empty())
        return;
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    stddev = std::sqrt(ss / static_cast<double>(xs.size()));
}

std::string fixed(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::vector<NodeId> difference(std::span<const NodeId> all, const std::vector<NodeId> &remove) {
    std::vector<NodeId> out;
    std::set_difference(all.begin(), all.end(), remove.begin(), remove.end(), std::back_inserter(out));
    return out;
}

} // namespace

PredictionSet wvrn(const AttributedGraph &g, const NodePartition &part, const WvrnOptions &opts) {
    const std::size_t k = g.class_count();
    if (part.labeled().empty())
        throw Error(ErrorCode::missing_label, "wvRN needs at least one labeled node");
    if (k < 2)
        throw Error(ErrorCode::degenerate_task, "classification needs at least two classes");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw Error(ErrorCode::parameter, "damping must lie in (0, 1]");
    const auto prior = labeled_distribution(part, k);
    const std::size_t n = g.capacity();
    Matrix P(n, k);
    for (NodeId v : part.labeled())
        P(v, static_cast<std::size_t>(part.label(v))) = 1.0;
    for (NodeId v : part.unlabeled())
        std::copy(prior.begin(), prior.end(), P.row(v).begin());

    const auto unlabeled = part.unlabeled();
    std::vector<double> vote(k);
    for (int it = 0; it < opts.max_iters; ++it) {
        Matrix next = P;
        double change = 0.0;
        for (NodeId i : unlabeled) {
            const auto nbrs = g.neighbors(i);
            if (nbrs.empty())
                continue;
            std::fill(vote.begin(), vote.end(), 0.0);
            double total = 0.0;
            for (const auto &nb : nbrs) {
                for (std::size_t c = 0; c < k; ++c)
                    vote[c] += nb.weight * P(nb.id, c);
                total += nb.weight;
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < k; ++c)
                sum += (next(i, c) = (1.0 - opts.damping) * P(i, c) + opts.damping * vote[c] / total);
            double delta = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                next(i, c) /= sum;
                delta += std::fabs(next(i, c) - P(i, c));
            }
            change = std::max(change, delta);
        }
        P = std::move(next);
        if (change < opts.tolerance)
            break;
    }

    PredictionSet out;
    out.predictions.reserve(unlabeled.size());
    for (NodeId v : unlabeled) {
        NodePrediction p;
        p.node = v;
        p.probabilities.assign(P.row(v).begin(), P.row(v).end());
        p.label = argmax(p.probabilities);
        p.certainty = certainty(p.probabilities);
        out.predictions.push_back(std::move(p));
    }
    return out;
}

Method rsm_method() {
    return {"rsm", [](const AttributedGraph &g, const NodePartition &part, const Hyperparams &hp) {
                return run(g, part, hp);
            }};
}

Method wvrn_method(const WvrnOptions &opts) {
    return {"wvrn", [opts](const AttributedGraph &g, const NodePartition &part, const Hyperparams &) {
                return wvrn(g, part, opts);
            }};
}

Method method_by_name(std::string_view name) {
    if (name == "rsm")
        return rsm_method();
    if (name == "wvrn")
        return wvrn_method();
    throw Error(ErrorCode::parameter, "unknown method '" + std::string(name) + "'");
}

void EvalConfig::validate() const {
    if (folds < 2)
        throw Error(ErrorCode::parameter, "folds must be at least 2");
    if (trials < 1)
        throw Error(ErrorCode::parameter, "trials must be at least 1");
    if (inner_folds < 2)
        throw Error(ErrorCode::parameter, "inner folds must be at least 2");
    if (workers < 1)
        throw Error(ErrorCode::parameter, "workers must be at least 1");
}

std::vector<std::vector<NodeId>> stratified_folds(const NodePartition &part, std::size_t class_count, int folds,
                                                  std::uint64_t seed) {
    if (folds < 2)
        throw Error(ErrorCode::parameter, "folds must be at least 2");
    std::vector<std::vector<NodeId>> byclass(class_count);
    for (NodeId v : part.labeled())
        byclass[static_cast<std::size_t>(part.label(v))].push_back(v);
    for (std::size_t c = 0; c < class_count; ++c)
        if (byclass[c].size() < static_cast<std::size_t>(folds))
            throw Error(ErrorCode::stratification, "class " + std::to_string(c) + " has " +
                                                       std::to_string(byclass[c].size()) +
                                                       " labeled nodes, fewer than " + std::to_string(folds) +
                                                       " folds");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<NodeId>> out(static_cast<std::size_t>(folds));
    std::size_t next = 0;
    for (auto &members : byclass) {
        std::shuffle(members.begin(), members.end(), rng);
        for (NodeId v : members) {
            out[next].push_back(v);
            next = (next + 1) % out.size();
        }
    }
    for (auto &f : out)
        std::sort(f.begin(), f.end());
    return out;
}

double accuracy(const PredictionSet &predictions, std::span<const NodeId> test, const NodePartition &truth) {
    if (test.empty())
        return 0.0;
    std::size_t correct = 0;
    for (NodeId v : test) {
        const auto *p = predictions.find(v);
        if (p != nullptr && p->label == truth.label(v))
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

Hyperparams select_hyperparams(const AttributedGraph &g, const NodePartition &part, const Method &method,
                               const std::vector<Hyperparams> &grid, int inner_folds, std::uint64_t seed) {
    if (grid.empty())
        throw Error(ErrorCode::parameter, "hyperparameter grid is empty");
    if (grid.size() == 1)
        return grid.front();
    const auto counts = part.class_counts(g.class_count());
    const auto smallest = static_cast<int>(*std::min_element(counts.begin(), counts.end()));
    const int folds = std::min(inner_folds, smallest);
    if (folds < 2)
        return grid.front();
    const auto split = stratified_folds(part, g.class_count(), folds, seed);
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double score = 0.0;
        for (const auto &test : split)
            score += accuracy(method.predict(g, part.masked(test), grid[i]), test, part);
        score /= static_cast<double>(split.size());
        if (score > best_score) {
            best_score = score;
            best = i;
        }
    }
    return grid[best];
}

CvReport cross_validate(const AttributedGraph &g, const NodePartition &part, const EvalConfig &cfg,
                        const Method &method, const std::vector<Hyperparams> &grid) {
    cfg.validate();
    if (grid.empty())
        throw Error(ErrorCode::parameter, "hyperparameter grid is empty");
    const auto trials = static_cast<std::size_t>(cfg.trials);
    const auto nfolds = static_cast<std::size_t>(cfg.folds);

    std::mt19937_64 seeder(cfg.seed);
    std::vector<std::uint64_t> trial_seed(trials);
    std::vector<std::vector<std::vector<NodeId>>> splits(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        trial_seed[t] = seeder();
        splits[t] = stratified_folds(part, g.class_count(), cfg.folds, trial_seed[t]);
    }

    CvReport report;
    report.method = method.name;
    report.dataset = cfg.dataset;
    report.folds.resize(trials * nfolds);
    parallel_for(report.folds.size(), cfg.workers, [&](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t job = begin; job < end; ++job) {
            const std::size_t t = job / nfolds;
            const std::size_t f = job % nfolds;
            const auto &test = splits[t][f];
            const auto train = part.masked(test);
            auto &row = report.folds[job];
            row.trial = static_cast<int>(t);
            row.fold = static_cast<int>(f);
            row.test_size = test.size();
            row.chosen = select_hyperparams(g, train, method, grid, cfg.inner_folds, trial_seed[t] + f + 1);
            row.accuracy = accuracy(method.predict(g, train, row.chosen), test, part);
        }
    });

    report.trial_means.assign(trials, 0.0);
    for (const auto &row : report.folds)
        report.trial_means[static_cast<std::size_t>(row.trial)] += row.accuracy / static_cast<double>(nfolds);
    mean_and_std(report.trial_means, report.mean, report.stddev);
    return report;
}

SparseLabelReport sparse_label_experiment(const AttributedGraph &g, const NodePartition &part, double density,
                                          const Method &method, const Hyperparams &hp, int trials,
                                          std::uint64_t seed, unsigned workers) {
    if (!(density > 0.0 && density < 1.0))
        throw Error(ErrorCode::parameter, "label density must lie in (0, 1)");
    if (trials < 1)
        throw Error(ErrorCode::parameter, "trials must be at least 1");
    const std::size_t k = g.class_count();
    std::vector<std::vector<NodeId>> byclass(k);
    for (NodeId v : part.labeled())
        byclass[static_cast<std::size_t>(part.label(v))].push_back(v);
    std::vector<std::size_t> take(k);
    for (std::size_t c = 0; c < k; ++c) {
        take[c] = static_cast<std::size_t>(std::llround(density * static_cast<double>(byclass[c].size())));
        if (take[c] == 0)
            throw Error(ErrorCode::stratification,
                        "density " + fixed(density) + " leaves class " + std::to_string(c) + " without labels");
    }

    std::mt19937_64 seeder(seed);
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(trials));
    for (auto &s : seeds)
        s = seeder();

    SparseLabelReport report;
    report.method = method.name;
    report.density = density;
    report.trial_accuracy.assign(seeds.size(), 0.0);
    parallel_for(seeds.size(), workers, [&](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t t = begin; t < end; ++t) {
            std::mt19937_64 rng(seeds[t]);
            std::vector<NodeId> keep;
            for (std::size_t c = 0; c < k; ++c) {
                auto members = byclass[c];
                std::shuffle(members.begin(), members.end(), rng);
                keep.insert(keep.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take[c]));
            }
            std::sort(keep.begin(), keep.end());
            const auto test = difference(part.labeled(), keep);
            report.trial_accuracy[t] = accuracy(method.predict(g, part.masked(test), hp), test, part);
        }
    });
    mean_and_std(report.trial_accuracy, report.mean, report.stddev);
    return report;
}

std::vector<Hyperparams> expand_grid(const Hyperparams &base, const GridSpec &spec) {
    auto or_base = []<class T>(const std::vector<T> &xs, T fallback) {
        return xs.empty() ? std::vector<T>{fallback} : xs;
    };
    std::vector<Hyperparams> out;
    for (double a : or_base(spec.alpha, base.alpha))
        for (double o : or_base(spec.omega, base.omega))
            for (double s : or_base(spec.sigma, base.kernel.sigma))
                for (int h : or_base(spec.hops, base.hops))
                    for (double t : or_base(spec.topk, base.topk_fraction)) {
                        Hyperparams hp = base;
                        hp.alpha = a;
                        hp.omega = o;
                        hp.kernel.sigma = s;
                        hp.hops = h;
                        hp.topk_fraction = t;
                        hp.validate();
                        out.push_back(hp);
                    }
    return out;
}

void write_csv(std::ostream &out, const CvReport &report) {
    out << "method,dataset,fold,trial,accuracy,hyperparams\n";
    for (const auto &row : report.folds)
        out << report.method << ',' << report.dataset << ',' << row.fold << ',' << row.trial << ','
            << fixed(row.accuracy) << ',' << describe(row.chosen) << '\n';
}

void write_json(std::ostream &out, const CvReport &report) {
    nlohmann::ordered_json doc;
    doc["method"] = report.method;
    doc["dataset"] = report.dataset;
    doc["mean_accuracy"] = report.mean;
    doc["std_accuracy"] = report.stddev;
    doc["trial_means"] = report.trial_means;
    auto &rows = doc["folds"] = nlohmann::ordered_json::array();
    for (const auto &row : report.folds)
        rows.push_back({{"trial", row.trial},
                        {"fold", row.fold},
                        {"accuracy", row.accuracy},
                        {"test_size", row.test_size},
                        {"hyperparams", describe(row.chosen)}});
    out << doc.dump(2) << '\n';
}

void write_csv(std::ostream &out, const SparseLabelReport &report) {
    out << "method,density,trial,accuracy\n";
    for (std::size_t t = 0; t < report.trial_accuracy.size(); ++t)
        out << report.method << ',' << fixed(report.density) << ',' << t << ',' << fixed(report.trial_accuracy[t])
            << '\n';
}

} // namespace rsm
