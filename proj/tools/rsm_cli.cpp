#include <rsm/eval.hpp>
#include <rsm/features.hpp>
#include <rsm/io.hpp>
#include <rsm/server.hpp>
#include <rsm/wire.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace rsm;

struct Options {
    std::string dataset;
    std::string data_dir;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string out;
    std::string format = "csv";

    Hyperparams hp;
    std::string kernel = "rbf";
    std::string prior = "estimated";
    std::string normalization = "minmax";
    std::string aggregation = "mean";
    bool no_ssl = false;
    bool no_raw = false;
    bool no_topology = false;
    bool no_topology_global = false;
    bool no_relational_class = false;
    bool no_relational_attr = false;

    std::string method = "rsm";
    int folds = 5;
    int trials = 20;
    int inner_folds = 3;
    GridSpec grid;

    std::string host = "127.0.0.1";
    int port = 8080;
    int keepalive_ms = 15000;
};

Hyperparams build_hp(const Options &o) {
    Hyperparams hp = o.hp;
    hp.kernel.kind = parse_kernel(o.kernel);
    hp.prior_mode = parse_prior_mode(o.prior);
    hp.features.normalization = parse_normalization(o.normalization);
    hp.features.aggregation = parse_aggregation(o.aggregation);
    hp.ssl = !o.no_ssl;
    hp.features.raw = !o.no_raw;
    hp.features.topology = !o.no_topology;
    hp.features.topology_global = !o.no_topology_global;
    hp.features.relational_class = !o.no_relational_class;
    hp.features.relational_attr = !o.no_relational_attr;
    hp.workers = o.workers;
    hp.validate();
    return hp;
}

Dataset load(const Options &o) {
    if (o.dataset.empty())
        throw Error(ErrorCode::parameter, "--dataset is required");
    std::filesystem::path dir(o.dataset);
    if (dir.is_relative() && !std::filesystem::exists(dir) && !o.data_dir.empty())
        dir = std::filesystem::path(o.data_dir) / dir;
    auto ds = load_dataset(DatasetPaths::bundle(dir));
    for (const auto &w : ds.report.warnings)
        std::cerr << "warning: " << w << "\n";
    return ds;
}

// Writes to --out, or stdout when it is empty or "-".
template <class F> void emit(const Options &o, F &&write) {
    if (o.out.empty() || o.out == "-") {
        write(std::cout);
        return;
    }
    std::ofstream file(o.out, std::ios::binary);
    if (!file)
        throw Error(ErrorCode::not_found, "cannot write '" + o.out + "'");
    write(file);
}

std::string fmt(const char *spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void check_format(const Options &o) {
    if (o.format != "csv" && o.format != "json")
        throw Error(ErrorCode::parameter, "--format must be csv or json");
}

int cmd_features(const Options &o) {
    const auto ds = load(o);
    const auto &g = ds.graph;
    TopologyOptions topt;
    topt.include_global = !o.no_topology_global;
    const auto f = topology_features(g, topt);
    emit(o, [&](std::ostream &out) {
        out << "node";
        for (const auto &c : f.columns())
            out << "," << c.name;
        out << "\n";
        for (NodeId v : g.live_nodes()) {
            out << g.node_name(v);
            for (double x : f.row(v))
                out << "," << fmt("%.10g", x);
            out << "\n";
        }
    });
    return 0;
}

int cmd_predict(const Options &o) {
    check_format(o);
    const auto ds = load(o);
    const auto &g = ds.graph;
    const auto preds = run(g, NodePartition::from_graph(g), build_hp(o));
    const auto &names = g.class_names();
    emit(o, [&](std::ostream &out) {
        if (o.format == "json") {
            wire::json rows = wire::json::array();
            for (const auto &p : preds.predictions) {
                auto row = wire::to_json(p);
                row["name"] = g.node_name(p.node);
                row["class_name"] = names[static_cast<std::size_t>(p.label)];
                rows.push_back(std::move(row));
            }
            out << wire::json{{"classes", names}, {"predictions", rows}}.dump(2) << "\n";
            return;
        }
        out << "node,class,certainty";
        for (const auto &c : names)
            out << ",p_" << c;
        out << "\n";
        for (const auto &p : preds.predictions) {
            out << g.node_name(p.node) << "," << names[static_cast<std::size_t>(p.label)] << ","
                << fmt("%.6f", p.certainty);
            for (double x : p.probabilities)
                out << "," << fmt("%.6f", x);
            out << "\n";
        }
    });
    return 0;
}

EvalConfig eval_config(const Options &o, const std::filesystem::path &dataset) {
    EvalConfig cfg;
    cfg.folds = o.folds;
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    cfg.inner_folds = o.inner_folds;
    cfg.dataset = dataset.filename().empty() ? dataset.parent_path().filename().string() : dataset.filename().string();
    cfg.validate();
    return cfg;
}

int cmd_train_eval(const Options &o) {
    check_format(o);
    const auto ds = load(o);
    const auto cfg = eval_config(o, o.dataset);
    const auto grid = expand_grid(build_hp(o), o.grid);
    const auto report =
        cross_validate(ds.graph, NodePartition::from_graph(ds.graph), cfg, method_by_name(o.method), grid);
    emit(o, [&](std::ostream &out) {
        if (o.format == "json")
            write_json(out, report);
        else
            write_csv(out, report);
    });
    std::cerr << report.method << " on " << report.dataset << ": mean accuracy " << fmt("%.4f", report.mean)
              << " (std " << fmt("%.4f", report.stddev) << ")\n";
    return 0;
}

int cmd_sweep(const Options &o) {
    check_format(o);
    const auto ds = load(o);
    const auto cfg = eval_config(o, o.dataset);
    const auto method = method_by_name(o.method);
    const auto part = NodePartition::from_graph(ds.graph);
    const auto grid = expand_grid(build_hp(o), o.grid);
    wire::json rows = wire::json::array();
    std::vector<CvReport> reports;
    for (const auto &hp : grid)
        reports.push_back(cross_validate(ds.graph, part, cfg, method, {hp}));
    emit(o, [&](std::ostream &out) {
        if (o.format == "json") {
            for (std::size_t i = 0; i < grid.size(); ++i)
                rows.push_back({{"hyperparams", describe(grid[i])},
                                {"mean_accuracy", reports[i].mean},
                                {"std_accuracy", reports[i].stddev},
                                {"trial_means", reports[i].trial_means}});
            out << wire::json{{"method", method.name}, {"dataset", cfg.dataset}, {"points", rows}}.dump(2) << "\n";
            return;
        }
        out << "method,dataset,alpha,omega,sigma,hops,topk,mean_accuracy,std_accuracy\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto &hp = grid[i];
            out << method.name << "," << cfg.dataset << "," << fmt("%g", hp.alpha) << "," << fmt("%g", hp.omega)
                << "," << fmt("%g", hp.kernel.sigma) << "," << hp.hops << "," << fmt("%g", hp.topk_fraction) << ","
                << fmt("%.6f", reports[i].mean) << "," << fmt("%.6f", reports[i].stddev) << "\n";
        }
    });
    return 0;
}

int cmd_serve(const Options &o) {
    ServerOptions so;
    so.host = o.host;
    so.port = o.port;
    so.data_dir = o.data_dir;
    so.keepalive = std::chrono::milliseconds(o.keepalive_ms);
    Server server(so);
    const int port = server.bind();
    std::cerr << "listening on http://" << o.host << ":" << port << "\n";
    server.run();
    return 0;
}

void add_grid(CLI::App &cmd, Options &o) {
    cmd.add_option("--grid-alpha", o.grid.alpha, "Grid values for alpha")->delimiter(',');
    cmd.add_option("--grid-omega", o.grid.omega, "Grid values for omega")->delimiter(',');
    cmd.add_option("--grid-sigma", o.grid.sigma, "Grid values for sigma")->delimiter(',');
    cmd.add_option("--grid-hops", o.grid.hops, "Grid values for hops")->delimiter(',');
    cmd.add_option("--grid-topk", o.grid.topk, "Grid values for the top-k fraction")->delimiter(',');
}

void add_eval(CLI::App &cmd, Options &o) {
    cmd.add_option("--method", o.method, "Classifier")->check(CLI::IsMember({"rsm", "wvrn"}))->capture_default_str();
    cmd.add_option("--folds", o.folds, "Cross-validation folds")->capture_default_str();
    cmd.add_option("--trials", o.trials, "Repetitions with fresh folds")->capture_default_str();
    cmd.add_option("--inner-folds", o.inner_folds, "Folds of the inner grid search")->capture_default_str();
    add_grid(cmd, o);
}

} // namespace

int main(int argc, char **argv) {
    Options o;
    CLI::App app{"Relational similarity machines: collective node classification"};
    app.name("rsm");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read options from a TOML or INI file");
    app.add_option("--data", o.data_dir, "Directory holding dataset bundles")->envname("RSM_DATA_DIR");
    app.add_option("--dataset", o.dataset, "Bundle directory (absolute, or relative to --data)");
    app.add_option("--seed", o.seed, "Seed for all randomness")->capture_default_str();
    app.add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out,-o", o.out, "Output file (default stdout)");
    app.add_option("--format", o.format, "Report format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    auto *hp = app.add_option_group("Hyperparameters");
    hp->add_option("--alpha", o.hp.alpha, "Weight of the neighbour term")->capture_default_str();
    hp->add_option("--omega", o.hp.omega, "Weight of the previous estimate")->capture_default_str();
    hp->add_option("--sigma", o.hp.kernel.sigma, "RBF kernel width")->capture_default_str();
    hp->add_option("--kernel", o.kernel, "Similarity kernel")
        ->check(CLI::IsMember({"rbf", "polynomial", "dot"}))
        ->capture_default_str();
    hp->add_option("--degree", o.hp.kernel.degree, "Polynomial degree")->capture_default_str();
    hp->add_option("--offset", o.hp.kernel.offset, "Polynomial offset")->capture_default_str();
    hp->add_option("--hops", o.hp.hops, "Neighbourhood radius")->capture_default_str();
    hp->add_option("--tau-max", o.hp.tau_max, "Maximum outer iterations")->capture_default_str();
    hp->add_option("--epsilon", o.hp.epsilon, "Convergence threshold")->capture_default_str();
    hp->add_option("--topk", o.hp.topk_fraction, "Share of nodes frozen per iteration")->capture_default_str();
    hp->add_option("--prior-iters", o.hp.prior_iters, "Prior meshing passes")->capture_default_str();
    hp->add_option("--mesh", o.hp.mesh, "Prior meshing weight")->capture_default_str();
    hp->add_option("--prior", o.prior, "Prior estimate")
        ->check(CLI::IsMember({"estimated", "global"}))
        ->capture_default_str();
    hp->add_option("--normalization", o.normalization, "Feature normalization")
        ->check(CLI::IsMember({"minmax", "l1", "none"}))
        ->capture_default_str();
    hp->add_option("--aggregation", o.aggregation, "Neighbour attribute aggregation")
        ->check(CLI::IsMember({"mean", "sum", "max"}))
        ->capture_default_str();
    hp->add_flag("--no-ssl", o.no_ssl, "Disable the unlabeled-neighbour term and top-k freezing");
    hp->add_flag("--no-raw", o.no_raw, "Drop the node attributes");
    hp->add_flag("--no-topology", o.no_topology, "Drop the topology columns");
    hp->add_flag("--no-topology-global", o.no_topology_global, "Drop PageRank and k-core");
    hp->add_flag("--no-relational-class", o.no_relational_class, "Drop the neighbour class columns");
    hp->add_flag("--no-relational-attr", o.no_relational_attr, "Drop the neighbour attribute columns");
    hp->add_flag("--edge-weights", o.hp.use_edge_weight, "Weight neighbour terms by edge weight");

    auto *features = app.add_subcommand("features", "Write per-node topology features as CSV");
    auto *train = app.add_subcommand("train-eval", "Cross-validated accuracy report");
    add_eval(*train, o);
    auto *predict = app.add_subcommand("predict", "Predict the unlabeled nodes");
    auto *sweep = app.add_subcommand("sweep", "Cross-validated accuracy for every grid point");
    add_eval(*sweep, o);
    auto *serve = app.add_subcommand("serve", "Start the HTTP service");
    serve->add_option("--host", o.host, "Bind address")->capture_default_str();
    serve->add_option("--port", o.port, "Port (0 picks a free one)")->capture_default_str();
    serve->add_option("--keepalive-ms", o.keepalive_ms, "Event stream keepalive interval")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*features)
            return cmd_features(o);
        if (*train)
            return cmd_train_eval(o);
        if (*predict)
            return cmd_predict(o);
        if (*sweep)
            return cmd_sweep(o);
        if (*serve)
            return cmd_serve(o);
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
