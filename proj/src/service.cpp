#include <rsm/service.hpp>

#include <rsm/io.hpp>
#include <rsm/synthetic.hpp>

#include <algorithm>
#include <set>

namespace rsm {

using wire::json;

namespace {

constexpr std::size_t kLogCapacity = 1024;

json edge_list(const AttributedGraph &g, const std::vector<char> *keep = nullptr) {
    json edges = json::array();
    for (NodeId u : g.live_nodes()) {
        if (keep != nullptr && !(*keep)[u])
            continue;
        for (const auto &nb : g.neighbors(u))
            if (u < nb.id && (keep == nullptr || (*keep)[nb.id]))
                edges.push_back({u, nb.id, nb.weight});
    }
    return edges;
}

json feature_columns(const AttributedGraph &g) {
    json cols = json::array();
    for (std::size_t c = 0; c < g.feature_dim(); ++c)
        cols.push_back("f" + std::to_string(c + 1));
    return cols;
}

bool has_live_edge(const AttributedGraph &g, NodeId u, NodeId v) {
    return g.alive(u) && g.alive(v) && g.has_edge(u, v);
}

/// Class that would lose its last labeled node under `m`, if any.
std::optional<ClassId> emptied_class(const AttributedGraph &g, const Mutation &m) {
    std::optional<ClassId> lost;
    std::visit(
        [&](const auto &op) {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, mutation::ClearLabel> || std::is_same_v<T, mutation::DeleteNode>) {
                if (g.alive(op.node) && g.is_labeled(op.node))
                    lost = g.label(op.node);
            } else if constexpr (std::is_same_v<T, mutation::SetLabel>) {
                if (g.alive(op.node) && g.is_labeled(op.node) && g.label(op.node) != op.label)
                    lost = g.label(op.node);
            }
        },
        m);
    if (!lost)
        return std::nullopt;
    std::size_t count = 0;
    for (NodeId v : g.live_nodes())
        count += g.label(v) == *lost ? 1 : 0;
    return count == 1 ? lost : std::nullopt;
}

} // namespace

json to_json(const NodeView &n, const AttributedGraph &g) {
    return {{"id", n.id},
            {"name", n.name},
            {"labeled", n.label != kUnlabeled},
            {"label", n.label == kUnlabeled ? json(nullptr) : json(n.label)},
            {"class", n.cls},
            {"class_name", g.class_names().at(static_cast<std::size_t>(n.cls))},
            {"certainty", n.certainty},
            {"p", n.p},
            {"assigned", n.assigned},
            {"features", n.features},
            {"topology", n.topology}};
}

std::shared_ptr<const Snapshot> make_snapshot(std::uint64_t version, const AttributedGraph &g,
                                              std::shared_ptr<const EngineState> state) {
    auto snap = std::make_shared<Snapshot>();
    snap->version = version;
    snap->graph = g;
    snap->hp = state->hp;
    for (const auto &c : state->topology.columns())
        snap->topology_columns.push_back(c.name);
    const std::size_t k = g.class_count();
    snap->nodes.resize(g.capacity());
    for (NodeId v : g.live_nodes()) {
        NodeView n;
        n.id = v;
        n.name = g.node_name(v);
        n.label = g.label(v);
        n.features.assign(g.features(v).begin(), g.features(v).end());
        if (state->topology.cols() > 0 && v < state->topology.rows())
            n.topology.assign(state->topology.row(v).begin(), state->topology.row(v).end());
        if (n.label != kUnlabeled) {
            n.cls = n.label;
            n.certainty = 1.0;
            n.p.assign(k, 0.0);
            n.p[static_cast<std::size_t>(n.label)] = 1.0;
        } else if (const auto *p = state->predictions.find(v)) {
            n.cls = p->label;
            n.certainty = p->certainty;
            n.p = p->probabilities;
            n.assigned = p->assigned;
        }
        snap->nodes[v] = std::move(n);
    }
    snap->state = std::move(state);
    return snap;
}

json diff_snapshots(const Snapshot &before, const Snapshot &after) {
    json nodes = json::array();
    json removed = json::array();
    const std::size_t n = std::max(before.nodes.size(), after.nodes.size());
    for (NodeId v = 0; v < n; ++v) {
        const auto *b = v < before.nodes.size() && before.nodes[v] ? &*before.nodes[v] : nullptr;
        const auto *a = v < after.nodes.size() && after.nodes[v] ? &*after.nodes[v] : nullptr;
        if (a != nullptr && (b == nullptr || !(*a == *b)))
            nodes.push_back(to_json(*a, after.graph));
        else if (a == nullptr && b != nullptr)
            removed.push_back(v);
    }
    json set = json::array();
    json gone = json::array();
    for (NodeId u : after.graph.live_nodes())
        for (const auto &nb : after.graph.neighbors(u))
            if (u < nb.id && !(has_live_edge(before.graph, u, nb.id) && before.graph.edge_weight(u, nb.id) == nb.weight))
                set.push_back({u, nb.id, nb.weight});
    for (NodeId u : before.graph.live_nodes())
        for (const auto &nb : before.graph.neighbors(u))
            if (u < nb.id && !has_live_edge(after.graph, u, nb.id))
                gone.push_back({u, nb.id});
    return {{"base_version", before.version}, {"version", after.version}, {"nodes", nodes},
            {"removed_nodes", removed},       {"edges_set", set},          {"edges_removed", gone}};
}

// -- Session -----------------------------------------------------------------------

Session::Session(std::string id, AttributedGraph g, const Hyperparams &hp) : id_(std::move(id)), graph_(std::move(g)) {
    hp.validate();
    hp_ = hp;
    auto state = std::make_shared<const EngineState>(fit(graph_, NodePartition::from_graph(graph_), hp_));
    snapshot_ = make_snapshot(version_, graph_, std::move(state));
    worker_ = std::jthread([this](std::stop_token stop) { worker_loop(stop); });
}

Session::~Session() { close(); }

void Session::close() {
    {
        std::lock_guard lock(write_mutex_);
        if (closing_)
            return;
        closing_ = true;
        if (running_)
            running_->request_stop();
    }
    work_cv_.notify_all();
    if (worker_.joinable())
        worker_.join();
    {
        std::lock_guard lock(publish_mutex_);
        closed_ = true;
    }
    publish_cv_.notify_all();
}

bool Session::closed() const {
    std::lock_guard lock(publish_mutex_);
    return closed_;
}

std::shared_ptr<const Snapshot> Session::snapshot() const {
    std::lock_guard lock(publish_mutex_);
    return snapshot_;
}

std::uint64_t Session::version() const { return snapshot()->version; }

void Session::worker_loop(std::stop_token) {
    std::unique_lock lock(write_mutex_);
    for (;;) {
        work_cv_.wait(lock, [&] { return closing_ || !pending_.empty() || retrain_version_ != 0; });
        if (closing_)
            return;
        const AttributedGraph g = graph_;
        const Hyperparams hp = hp_;
        const bool retrain = retrain_version_ != 0;
        const auto work = pending_;
        const auto target = version_;
        std::stop_source source;
        running_ = source;
        const auto base = snapshot();
        lock.unlock();

        std::shared_ptr<const Snapshot> snap;
        json delta;
        std::optional<json> failure;
        try {
            const RunOptions opts{nullptr, source.get_token()};
            json extra = json::object();
            std::shared_ptr<const EngineState> state;
            if (retrain) {
                state = std::make_shared<const EngineState>(fit(g, NodePartition::from_graph(g), hp, opts));
                extra = {{"type", "retrain"},
                         {"localized", false},
                         {"recomputed", nullptr},
                         {"hyperparams", wire::to_json(hp)}};
            } else {
                auto next = std::make_shared<EngineState>(*base->state);
                std::vector<ChangeRecord> records;
                for (const auto &p : work)
                    records.push_back(p.record);
                const auto d = absorb_changes(*next, g, records, opts);
                extra = {{"type", "mutation"}, {"localized", d.localized}, {"recomputed", d.recomputed}};
                state = std::move(next);
            }
            snap = make_snapshot(target, g, state);
            delta = diff_snapshots(*base, *snap);
            for (const auto &[key, value] : extra.items())
                delta[key] = value;
            json mutations = json::array();
            for (const auto &p : work)
                mutations.push_back({{"version", p.version}, {"mutation", p.mutation}});
            delta["mutations"] = std::move(mutations);
            if (retrain)
                delta["topology_columns"] = snap->topology_columns;
        } catch (const Error &e) {
            if (e.code() != ErrorCode::cancelled)
                failure = wire::error_body(e);
        }

        lock.lock();
        running_.reset();
        if (!snap && !failure)
            continue; // cancelled by a newer write; redo with the longer queue
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(work.size()));
        if (retrain && retrain_version_ <= target)
            retrain_version_ = 0;
        if (failure) {
            // The graph moved on without a model; the next write refits.
            retrain_version_ = 0;
            std::lock_guard plock(publish_mutex_);
            for (auto v = base->version + 1; v <= target; ++v)
                failures_[v] = *failure;
            publish_cv_.notify_all();
            continue;
        }
        lock.unlock();
        publish(std::move(snap), std::move(delta));
        lock.lock();
    }
}

void Session::publish(std::shared_ptr<const Snapshot> snap, json delta) {
    {
        std::lock_guard lock(publish_mutex_);
        snapshot_ = std::move(snap);
        log_.push_back(std::move(delta));
        while (log_.size() > kLogCapacity)
            log_.pop_front();
    }
    publish_cv_.notify_all();
}

json Session::wait_for(std::uint64_t version) {
    std::unique_lock lock(publish_mutex_);
    publish_cv_.wait(lock, [&] { return closed_ || snapshot_->version >= version || failures_.count(version) > 0; });
    if (const auto it = failures_.find(version); it != failures_.end()) {
        const auto body = it->second;
        throw Error(ErrorCode::invariant_violation,
                    "inference failed after the write: " + body["error"]["message"].get<std::string>());
    }
    if (snapshot_->version < version)
        throw Error(ErrorCode::not_found, "session " + id_ + " was closed");
    json delta = nullptr;
    for (const auto &d : log_)
        if (d["base_version"].get<std::uint64_t>() < version && version <= d["version"].get<std::uint64_t>())
            delta = d;
    return {{"version", snapshot_->version}, {"accepted_version", version}, {"delta", delta}};
}

json Session::mutate(const Mutation &m) {
    std::uint64_t mine = 0;
    {
        std::lock_guard lock(write_mutex_);
        if (closing_)
            throw Error(ErrorCode::not_found, "session " + id_ + " was closed");
        if (const auto c = emptied_class(graph_, m))
            throw Error(ErrorCode::missing_class, "the change would leave class '" +
                                                      graph_.class_names()[static_cast<std::size_t>(*c)] +
                                                      "' without labeled nodes");
        auto record = graph_.apply(m);
        json payload = wire::to_json(m, graph_);
        if (std::holds_alternative<mutation::AddNode>(m))
            payload["node"] = record.touched.front();
        mine = ++version_;
        pending_.push_back({mine, std::move(record), std::move(payload)});
        if (running_)
            running_->request_stop();
    }
    work_cv_.notify_all();
    return wait_for(mine);
}

json Session::set_hyperparams(const Hyperparams &hp) {
    hp.validate();
    std::uint64_t mine = 0;
    {
        std::lock_guard lock(write_mutex_);
        if (closing_)
            throw Error(ErrorCode::not_found, "session " + id_ + " was closed");
        hp_ = hp;
        mine = ++version_;
        retrain_version_ = mine;
        if (running_)
            running_->request_stop();
    }
    work_cv_.notify_all();
    auto out = wait_for(mine);
    out["hyperparams"] = wire::to_json(snapshot()->hp);
    return out;
}

json Session::hyperparams() const {
    const auto snap = snapshot();
    return {{"version", snap->version}, {"hyperparams", wire::to_json(snap->hp)}};
}

json Session::summary() const {
    const auto snap = snapshot();
    const auto part = NodePartition::from_graph(snap->graph);
    return {{"session", id_},
            {"version", snap->version},
            {"nodes", snap->graph.node_count()},
            {"edges", snap->graph.edge_count()},
            {"labeled", part.labeled().size()},
            {"classes", snap->graph.class_names()},
            {"feature_columns", feature_columns(snap->graph)},
            {"topology_columns", snap->topology_columns},
            {"iterations", snap->state->iterations},
            {"hyperparams", wire::to_json(snap->hp)}};
}

json Session::graph_view(const GraphFilter &filter) const {
    const auto snap = snapshot();
    const auto &g = snap->graph;
    std::vector<char> keep(g.capacity(), 0);
    std::set<ClassId> classes;
    std::set<NodeId> nodes;
    if (filter.classes)
        classes.insert(filter.classes->begin(), filter.classes->end());
    if (filter.nodes)
        nodes.insert(filter.nodes->begin(), filter.nodes->end());
    json out_nodes = json::array();
    for (NodeId v : g.live_nodes()) {
        const auto &n = *snap->nodes[v];
        bool pass = true;
        if (filter.min_certainty)
            pass = pass && n.certainty >= *filter.min_certainty;
        if (filter.max_certainty)
            pass = pass && n.certainty <= *filter.max_certainty;
        if (filter.classes)
            pass = pass && classes.count(n.cls) > 0;
        if (filter.nodes)
            pass = pass && nodes.count(v) > 0;
        if (filter.invert)
            pass = !pass;
        if (pass) {
            keep[v] = 1;
            out_nodes.push_back(to_json(n, g));
        }
    }
    return {{"version", snap->version},
            {"classes", g.class_names()},
            {"feature_columns", feature_columns(g)},
            {"topology_columns", snap->topology_columns},
            {"nodes", std::move(out_nodes)},
            {"edges", edge_list(g, &keep)}};
}

json Session::node_details(NodeId v) const {
    const auto snap = snapshot();
    const auto &g = snap->graph;
    if (v >= snap->nodes.size() || !snap->nodes[v])
        throw Error(ErrorCode::not_found, "node " + std::to_string(v) + " does not exist");
    const auto &n = *snap->nodes[v];
    std::vector<std::size_t> by_class(g.class_count(), 0);
    json list = json::array();
    for (const auto &nb : g.neighbors(v)) {
        const auto &m = *snap->nodes[nb.id];
        ++by_class[static_cast<std::size_t>(m.cls)];
        list.push_back({{"id", nb.id}, {"weight", nb.weight}, {"class", m.cls}, {"labeled", m.label != kUnlabeled}});
    }
    json weights = nullptr;
    const auto &state = *snap->state;
    if (n.label == kUnlabeled && v < state.relational_weights.rows()) {
        const auto wr = state.relational_weights.row(v);
        const auto wi = state.iid_weights.row(v);
        weights = {{"relational", std::vector<double>(wr.begin(), wr.end())},
                   {"iid", std::vector<double>(wi.begin(), wi.end())}};
    }
    return {{"version", snap->version},
            {"node", to_json(n, g)},
            {"neighbors", {{"count", g.degree(v)}, {"by_class", by_class}, {"list", list}}},
            {"weights", weights}};
}

json Session::local_model(std::span<const NodeId> nodes, const std::optional<Hyperparams> &hp_override,
                          const ReportConfig &cfg) const {
    const auto snap = snapshot();
    const auto &g = snap->graph;
    const Hyperparams hp = hp_override.value_or(snap->hp);
    hp.validate();
    if (cfg.folds < 2 || cfg.trials < 1)
        throw Error(ErrorCode::parameter, "folds must be at least 2 and trials at least 1");
    if (nodes.empty())
        throw Error(ErrorCode::degenerate_task, "the selection is empty");
    for (NodeId v : nodes)
        if (!g.alive(v))
            throw Error(ErrorCode::invalid_node, "node " + std::to_string(v) + " does not exist");
    const auto sub = induced_subgraph(g, nodes);

    std::vector<ClassId> present;
    for (NodeId v = 0; v < sub.graph.capacity(); ++v)
        if (sub.graph.is_labeled(v))
            present.push_back(sub.graph.label(v));
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    if (present.size() < 2)
        throw Error(ErrorCode::degenerate_task, "the selection has labeled nodes of " +
                                                    std::to_string(present.size()) +
                                                    " class(es); a local model needs at least two");

    // Same subgraph with classes renumbered to those present.
    const std::size_t n = sub.graph.capacity();
    AttributedGraph h(n, g.feature_dim(), present.size());
    std::vector<std::string> names;
    for (ClassId c : present)
        names.push_back(g.class_names()[static_cast<std::size_t>(c)]);
    h.set_class_names(names);
    for (NodeId v = 0; v < n; ++v) {
        h.set_node_name(v, sub.graph.node_name(v));
        h.set_features(v, sub.graph.features(v));
        if (sub.graph.is_labeled(v))
            h.set_label(v, static_cast<ClassId>(std::lower_bound(present.begin(), present.end(),
                                                                 sub.graph.label(v)) -
                                                present.begin()));
        for (const auto &nb : sub.graph.neighbors(v))
            if (v < nb.id)
                h.add_edge(v, nb.id, nb.weight);
    }
    const auto part = NodePartition::from_graph(h);
    const auto counts = part.class_counts(present.size());
    const int folds = std::min<int>(cfg.folds, static_cast<int>(*std::min_element(counts.begin(), counts.end())));

    json out = {{"version", snap->version},
                {"nodes", h.node_count()},
                {"edges", h.edge_count()},
                {"labeled", part.labeled().size()},
                {"classes", present},
                {"hyperparams", wire::to_json(hp)}};
    if (folds >= 2) {
        EvalConfig ec;
        ec.folds = folds;
        ec.trials = cfg.trials;
        ec.seed = cfg.seed;
        ec.dataset = "selection";
        const auto report = cross_validate(h, part, ec, rsm_method(), {hp});
        json per_fold = json::array();
        for (const auto &row : report.folds)
            per_fold.push_back({{"trial", row.trial}, {"fold", row.fold}, {"accuracy", row.accuracy}});
        out["folds"] = folds;
        out["trials"] = cfg.trials;
        out["accuracy"] = report.mean;
        out["accuracy_std"] = report.stddev;
        out["fold_accuracy"] = per_fold;
    } else {
        out["folds"] = 0;
        out["trials"] = 0;
        out["accuracy"] = nullptr;
        out["accuracy_std"] = nullptr;
        out["fold_accuracy"] = json::array();
    }
    json preds = json::array();
    for (const auto &p : run(h, part, hp).predictions) {
        std::vector<double> full(g.class_count(), 0.0);
        for (std::size_t c = 0; c < present.size(); ++c)
            full[static_cast<std::size_t>(present[c])] = p.probabilities[c];
        preds.push_back({{"node", sub.original_ids[p.node]},
                         {"class", present[static_cast<std::size_t>(p.label)]},
                         {"certainty", p.certainty},
                         {"p", full},
                         {"assigned", p.assigned}});
    }
    out["predictions"] = std::move(preds);
    return out;
}

json Session::report(const ReportConfig &cfg) const {
    const auto live = snapshot()->graph.live_nodes();
    return local_model(live, std::nullopt, cfg);
}

std::vector<json> Session::deltas_since(std::uint64_t since) const {
    std::lock_guard lock(publish_mutex_);
    std::vector<json> out;
    if (since >= snapshot_->version)
        return out;
    if (log_.empty() || log_.front()["base_version"].get<std::uint64_t>() > since)
        throw Error(ErrorCode::stale_state, "deltas after version " + std::to_string(since) +
                                                " are no longer retained; fetch the graph again");
    for (const auto &d : log_)
        if (d["version"].get<std::uint64_t>() > since)
            out.push_back(d);
    return out;
}

bool Session::wait_for_delta(std::uint64_t since, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(publish_mutex_);
    return publish_cv_.wait_for(lock, timeout, [&] { return closed_ || snapshot_->version > since; }) &&
           snapshot_->version > since;
}

// -- SessionManager ------------------------------------------------------------------

SessionManager::SessionManager(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {}

SessionManager::~SessionManager() {
    std::lock_guard lock(mutex_);
    for (auto &[id, s] : sessions_)
        s->close();
}

std::shared_ptr<Session> SessionManager::create(const json &body) {
    if (!body.is_object() || !body.contains("dataset") || !body.at("dataset").is_object())
        throw Error(ErrorCode::format, "request needs a 'dataset' object");
    const auto &ds = body.at("dataset");
    AttributedGraph g;
    auto text = [&](const char *key) -> std::optional<std::string> {
        if (!ds.contains(key))
            return std::nullopt;
        if (!ds.at(key).is_string())
            throw Error(ErrorCode::format, std::string("dataset field '") + key + "' must be a string");
        return ds.at(key).get<std::string>();
    };
    if (const auto path = text("path")) {
        std::filesystem::path dir(*path);
        if (dir.is_relative() && !data_dir_.empty())
            dir = data_dir_ / dir;
        g = load_dataset(DatasetPaths::bundle(dir)).graph;
    } else if (ds.contains("synthetic")) {
        const auto &s = ds.at("synthetic");
        synthetic::PlantedSpec spec;
        double fraction = 0.2;
        try {
            spec.nodes = s.value("nodes", spec.nodes);
            spec.blocks = s.value("blocks", spec.blocks);
            spec.p_in = s.value("p_in", spec.p_in);
            spec.p_out = s.value("p_out", spec.p_out);
            spec.feature_dim = s.value("feature_dim", spec.feature_dim);
            spec.signal = s.value("signal", spec.signal);
            spec.seed = s.value("seed", spec.seed);
            fraction = s.value("label_fraction", fraction);
        } catch (const json::exception &e) {
            throw Error(ErrorCode::format, std::string("bad synthetic spec: ") + e.what());
        }
        g = synthetic::planted_partition(spec);
        const auto labels = synthetic::keep_labels(g, synthetic::stratified_sample(g, fraction, spec.seed + 1));
        for (NodeId v = 0; v < g.capacity(); ++v)
            g.set_label(v, labels[v]);
    } else if (const auto edges = text("edges")) {
        g = load_dataset(DatasetTexts{*edges, text("features"), text("labels").value_or(""), text("classes")}).graph;
    } else {
        throw Error(ErrorCode::format, "dataset needs 'path', 'synthetic' or inline 'edges'/'labels' texts");
    }
    Hyperparams hp;
    if (body.contains("hyperparams"))
        hp = wire::hyperparams_from_json(body.at("hyperparams"));

    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = "s" + std::to_string(next_id_++);
    }
    auto session = std::make_shared<Session>(id, std::move(g), hp);
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, session);
    return session;
}

std::shared_ptr<Session> SessionManager::get(const std::string &id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end())
        throw Error(ErrorCode::not_found, "no session '" + id + "'");
    return it->second;
}

void SessionManager::destroy(const std::string &id) {
    std::shared_ptr<Session> s;
    {
        std::lock_guard lock(mutex_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end())
            throw Error(ErrorCode::not_found, "no session '" + id + "'");
        s = it->second;
        sessions_.erase(it);
    }
    s->close();
}

std::vector<std::string> SessionManager::ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto &[id, s] : sessions_)
        out.push_back(id);
    return out;
}

} // namespace rsm
