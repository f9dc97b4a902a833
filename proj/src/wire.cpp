#include <rsm/wire.hpp>

#include <algorithm>
#include <array>
#include <utility>

namespace rsm::wire {

namespace {

constexpr std::array<std::pair<MetaFeature, const char *>, 4> kMetaNames{{
    {meta_estimates, "estimates"},
    {meta_relational_weights, "relational_weights"},
    {meta_iid_weights, "iid_weights"},
    {meta_certainty, "certainty"},
}};

[[noreturn]] void bad(const std::string &what) { throw Error(ErrorCode::format, what); }

template <class T> T get(const json &j, const char *key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &) {
        bad(std::string("field '") + key + "' is missing or has the wrong type");
    }
}

template <class T> void maybe(const json &j, const char *key, T &out) {
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception &) {
        bad(std::string("field '") + key + "' has the wrong type");
    }
}

void reject_unknown(const json &j, std::initializer_list<const char *> known, const char *where) {
    if (!j.is_object())
        bad(std::string(where) + " must be an object");
    for (const auto &[key, value] : j.items())
        if (std::none_of(known.begin(), known.end(), [&](const char *k) { return key == k; }))
            throw Error(ErrorCode::parameter, std::string("unknown ") + where + " field '" + key + "'");
}

ClassId class_from_json(const json &j, const AttributedGraph &g) {
    if (j.is_number_integer()) {
        const auto c = j.get<long long>();
        if (c < 0 || static_cast<std::size_t>(c) >= g.class_count())
            throw Error(ErrorCode::invariant_violation, "class " + std::to_string(c) + " out of range");
        return static_cast<ClassId>(c);
    }
    if (j.is_string()) {
        const auto &names = g.class_names();
        const auto it = std::find(names.begin(), names.end(), j.get<std::string>());
        if (it == names.end())
            throw Error(ErrorCode::reference, "unknown class '" + j.get<std::string>() + "'");
        return static_cast<ClassId>(it - names.begin());
    }
    bad("class must be an index or a name");
}

NodeId node_from_json(const json &j, const char *key) {
    const auto v = get<long long>(j, key);
    if (v < 0)
        throw Error(ErrorCode::invalid_node, "node " + std::to_string(v) + " does not exist");
    return static_cast<NodeId>(v);
}

} // namespace

json to_json(const Hyperparams &hp) {
    json meta = json::array();
    for (const auto &[bit, name] : kMetaNames)
        if (hp.features.meta & bit)
            meta.push_back(name);
    return {
        {"alpha", hp.alpha},
        {"omega", hp.omega},
        {"hops", hp.hops},
        {"tau_max", hp.tau_max},
        {"kernel",
         {{"kind", to_string(hp.kernel.kind)},
          {"sigma", hp.kernel.sigma},
          {"degree", hp.kernel.degree},
          {"offset", hp.kernel.offset}}},
        {"ssl", hp.ssl},
        {"topk", hp.topk_fraction},
        {"epsilon", hp.epsilon},
        {"prior_iters", hp.prior_iters},
        {"mesh", hp.mesh},
        {"prior", to_string(hp.prior_mode)},
        {"features",
         {{"raw", hp.features.raw},
          {"topology", hp.features.topology},
          {"topology_global", hp.features.topology_global},
          {"relational_class", hp.features.relational_class},
          {"relational_attr", hp.features.relational_attr},
          {"aggregation", to_string(hp.features.aggregation)},
          {"normalization", to_string(hp.features.normalization)},
          {"meta", meta}}},
        {"use_edge_weight", hp.use_edge_weight},
        {"workers", hp.workers},
    };
}

Hyperparams hyperparams_from_json(const json &j, Hyperparams hp) {
    reject_unknown(j,
                   {"alpha", "omega", "hops", "tau_max", "kernel", "ssl", "topk", "epsilon", "prior_iters", "mesh",
                    "prior", "features", "use_edge_weight", "workers"},
                   "hyperparameter");
    maybe(j, "alpha", hp.alpha);
    maybe(j, "omega", hp.omega);
    maybe(j, "hops", hp.hops);
    maybe(j, "tau_max", hp.tau_max);
    maybe(j, "ssl", hp.ssl);
    maybe(j, "topk", hp.topk_fraction);
    maybe(j, "epsilon", hp.epsilon);
    maybe(j, "prior_iters", hp.prior_iters);
    maybe(j, "mesh", hp.mesh);
    maybe(j, "use_edge_weight", hp.use_edge_weight);
    maybe(j, "workers", hp.workers);
    if (j.contains("prior"))
        hp.prior_mode = parse_prior_mode(get<std::string>(j, "prior"));
    if (j.contains("kernel")) {
        const auto &k = j.at("kernel");
        reject_unknown(k, {"kind", "sigma", "degree", "offset"}, "kernel");
        if (k.contains("kind"))
            hp.kernel.kind = parse_kernel(get<std::string>(k, "kind"));
        maybe(k, "sigma", hp.kernel.sigma);
        maybe(k, "degree", hp.kernel.degree);
        maybe(k, "offset", hp.kernel.offset);
    }
    if (j.contains("features")) {
        const auto &f = j.at("features");
        reject_unknown(f,
                       {"raw", "topology", "topology_global", "relational_class", "relational_attr", "aggregation",
                        "normalization", "meta"},
                       "feature");
        maybe(f, "raw", hp.features.raw);
        maybe(f, "topology", hp.features.topology);
        maybe(f, "topology_global", hp.features.topology_global);
        maybe(f, "relational_class", hp.features.relational_class);
        maybe(f, "relational_attr", hp.features.relational_attr);
        if (f.contains("aggregation"))
            hp.features.aggregation = parse_aggregation(get<std::string>(f, "aggregation"));
        if (f.contains("normalization"))
            hp.features.normalization = parse_normalization(get<std::string>(f, "normalization"));
        if (f.contains("meta")) {
            hp.features.meta = meta_none;
            for (const auto &name : get<std::vector<std::string>>(f, "meta")) {
                const auto it = std::find_if(kMetaNames.begin(), kMetaNames.end(),
                                             [&](const auto &p) { return name == p.second; });
                if (it == kMetaNames.end())
                    throw Error(ErrorCode::parameter, "unknown meta feature '" + name + "'");
                hp.features.meta |= it->first;
            }
        }
    }
    hp.validate();
    return hp;
}

json to_json(const Mutation &m, const AttributedGraph &g) {
    auto class_name = [&](ClassId c) -> json {
        if (c == kUnlabeled)
            return nullptr;
        return g.class_names().at(static_cast<std::size_t>(c));
    };
    return std::visit(
        [&](const auto &op) -> json {
            using T = std::decay_t<decltype(op)>;
            if constexpr (std::is_same_v<T, mutation::AddNode>)
                return {{"op", "add_node"}, {"features", op.features}, {"class", class_name(op.label)},
                        {"name", op.name}};
            else if constexpr (std::is_same_v<T, mutation::DeleteNode>)
                return {{"op", "delete_node"}, {"node", op.node}};
            else if constexpr (std::is_same_v<T, mutation::ReviveNode>)
                return {{"op", "revive_node"}, {"node", op.node}};
            else if constexpr (std::is_same_v<T, mutation::AddEdge>)
                return {{"op", "add_edge"}, {"u", op.u}, {"v", op.v}, {"weight", op.weight}};
            else if constexpr (std::is_same_v<T, mutation::DeleteEdge>)
                return {{"op", "delete_edge"}, {"u", op.u}, {"v", op.v}};
            else if constexpr (std::is_same_v<T, mutation::SetLabel>)
                return {{"op", "set_label"}, {"node", op.node}, {"class", class_name(op.label)}};
            else if constexpr (std::is_same_v<T, mutation::ClearLabel>)
                return {{"op", "clear_label"}, {"node", op.node}};
            else
                return {{"op", "set_feature"}, {"node", op.node}, {"column", op.column}, {"value", op.value}};
        },
        m);
}

Mutation mutation_from_json(const json &j, const AttributedGraph &g) {
    if (!j.is_object())
        bad("mutation must be an object");
    const auto op = get<std::string>(j, "op");
    if (op == "add_node") {
        reject_unknown(j, {"op", "features", "class", "name"}, "add_node");
        mutation::AddNode m;
        maybe(j, "features", m.features);
        maybe(j, "name", m.name);
        if (j.contains("class") && !j.at("class").is_null())
            m.label = class_from_json(j.at("class"), g);
        return m;
    }
    if (op == "delete_node") {
        reject_unknown(j, {"op", "node"}, "delete_node");
        return mutation::DeleteNode{node_from_json(j, "node")};
    }
    if (op == "revive_node") {
        reject_unknown(j, {"op", "node"}, "revive_node");
        return mutation::ReviveNode{node_from_json(j, "node")};
    }
    if (op == "add_edge") {
        reject_unknown(j, {"op", "u", "v", "weight"}, "add_edge");
        mutation::AddEdge m{node_from_json(j, "u"), node_from_json(j, "v"), 1.0};
        maybe(j, "weight", m.weight);
        return m;
    }
    if (op == "delete_edge") {
        reject_unknown(j, {"op", "u", "v"}, "delete_edge");
        return mutation::DeleteEdge{node_from_json(j, "u"), node_from_json(j, "v")};
    }
    if (op == "set_label") {
        reject_unknown(j, {"op", "node", "class"}, "set_label");
        if (!j.contains("class") || j.at("class").is_null())
            return mutation::ClearLabel{node_from_json(j, "node")};
        return mutation::SetLabel{node_from_json(j, "node"), class_from_json(j.at("class"), g)};
    }
    if (op == "clear_label") {
        reject_unknown(j, {"op", "node"}, "clear_label");
        return mutation::ClearLabel{node_from_json(j, "node")};
    }
    if (op == "set_feature") {
        reject_unknown(j, {"op", "node", "column", "value"}, "set_feature");
        return mutation::SetFeature{node_from_json(j, "node"), get<std::size_t>(j, "column"),
                                    get<double>(j, "value")};
    }
    throw Error(ErrorCode::parameter, "unknown mutation '" + op + "'");
}

json to_json(const NodePrediction &p) {
    return {{"node", p.node},
            {"class", p.label},
            {"certainty", p.certainty},
            {"p", p.probabilities},
            {"assigned", p.assigned}};
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::stale_state: return 409;
    case ErrorCode::missing_class:
    case ErrorCode::degenerate_task:
    case ErrorCode::stratification:
    case ErrorCode::missing_label: return 422;
    case ErrorCode::cancelled: return 503;
    case ErrorCode::domain: return 500;
    default: return 400;
    }
}

json error_body(const Error &e) { return error_body(to_string(e.code()), e.what()); }

json error_body(std::string_view code, std::string_view message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

} // namespace rsm::wire
