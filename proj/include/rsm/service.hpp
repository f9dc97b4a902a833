#pragma once

#include <rsm/engine.hpp>
#include <rsm/eval.hpp>
#include <rsm/graph.hpp>
#include <rsm/wire.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

namespace rsm {

/// What the explorer shows for one live node.
struct NodeView {
    NodeId id = 0;
    std::string name;
    ClassId label = kUnlabeled; // given label
    ClassId cls = 0;            // given or predicted
    double certainty = 1.0;
    std::vector<double> p;
    bool assigned = false;
    std::vector<double> features;
    std::vector<double> topology;

    friend bool operator==(const NodeView &, const NodeView &) = default;
};

/// One immutable, fully consistent model version.
struct Snapshot {
    std::uint64_t version = 0;
    AttributedGraph graph;
    Hyperparams hp;
    std::shared_ptr<const EngineState> state;
    std::vector<std::string> topology_columns;
    std::vector<std::optional<NodeView>> nodes; // by id, empty for dead ids
};

struct GraphFilter {
    std::optional<double> min_certainty; // keep certainty >= t
    std::optional<double> max_certainty; // keep certainty <= t
    std::optional<std::vector<ClassId>> classes;
    std::optional<std::vector<NodeId>> nodes;
    bool invert = false; // return the complement of the selection
};

/// Cross-validation settings for local models and reports. The fold count
/// shrinks to the smallest class size when needed.
struct ReportConfig {
    int folds = 5;
    int trials = 1;
    std::uint64_t seed = 1;
};

/// An interactive model: a graph, its hyperparameters and the current
/// inference result.
///
/// Writers (mutations, retrains) are serialized; each accepted write gets the
/// next version and is handed to a background worker, which absorbs all
/// pending writes in one pass. A write arriving while the worker is busy
/// cancels the pass and the worker restarts with the longer queue. Readers
/// always see the last published snapshot.
class Session {
public:
    Session(std::string id, AttributedGraph g, const Hyperparams &hp);
    ~Session();

    Session(const Session &) = delete;
    Session &operator=(const Session &) = delete;

    const std::string &id() const noexcept { return id_; }
    std::shared_ptr<const Snapshot> snapshot() const;

    wire::json summary() const;
    wire::json graph_view(const GraphFilter &filter) const;
    wire::json node_details(NodeId v) const;
    wire::json hyperparams() const;

    /// Both block until the write is reflected in a published snapshot and
    /// return that version together with the delta that covered it.
    wire::json set_hyperparams(const Hyperparams &hp);
    wire::json mutate(const Mutation &m);

    wire::json local_model(std::span<const NodeId> nodes, const std::optional<Hyperparams> &hp,
                           const ReportConfig &cfg) const;
    wire::json report(const ReportConfig &cfg) const;

    /// Deltas with version > since, oldest first. Throws not_found when
    /// `since` is older than the retained log.
    std::vector<wire::json> deltas_since(std::uint64_t since) const;
    /// Waits until a delta newer than `since` exists or the timeout passes.
    bool wait_for_delta(std::uint64_t since, std::chrono::milliseconds timeout) const;
    std::uint64_t version() const;

    void close();
    bool closed() const;

private:
    struct Pending {
        std::uint64_t version;
        ChangeRecord record;
        wire::json mutation;
    };

    void worker_loop(std::stop_token stop);
    void publish(std::shared_ptr<const Snapshot> snap, wire::json delta);
    wire::json wait_for(std::uint64_t version);

    std::string id_;

    mutable std::mutex write_mutex_;
    std::condition_variable work_cv_;
    AttributedGraph graph_;
    Hyperparams hp_;
    std::uint64_t version_ = 0;
    std::vector<Pending> pending_;
    std::uint64_t retrain_version_ = 0; // version of the newest unserved retrain
    std::optional<std::stop_source> running_;
    bool closing_ = false;

    mutable std::mutex publish_mutex_;
    mutable std::condition_variable publish_cv_;
    std::shared_ptr<const Snapshot> snapshot_;
    std::deque<wire::json> log_;
    std::map<std::uint64_t, wire::json> failures_; // version -> error body
    bool closed_ = false;

    std::jthread worker_;
};

/// Builds the snapshot for a graph and a completed engine state.
std::shared_ptr<const Snapshot> make_snapshot(std::uint64_t version, const AttributedGraph &g,
                                              std::shared_ptr<const EngineState> state);
/// Differences between two snapshots in wire form.
wire::json diff_snapshots(const Snapshot &before, const Snapshot &after);
wire::json to_json(const NodeView &n, const AttributedGraph &g);

class SessionManager {
public:
    explicit SessionManager(std::filesystem::path data_dir = {});
    ~SessionManager();

    /// Body: {"dataset": {...}, "hyperparams": {...}}; see the wire protocol.
    std::shared_ptr<Session> create(const wire::json &body);
    std::shared_ptr<Session> get(const std::string &id) const;
    void destroy(const std::string &id);
    std::vector<std::string> ids() const;

private:
    std::filesystem::path data_dir_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
};

} // namespace rsm
