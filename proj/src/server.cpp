#include <rsm/server.hpp>

#include <httplib.h>

#include <atomic>
#include <charconv>
#include <thread>

namespace rsm {

using wire::json;

namespace {

template <class T> T parse_number(const std::string &text, const std::string &name) {
    T value{};
    const auto *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw Error(ErrorCode::format, "query parameter '" + name + "' is not a valid number: '" + text + "'");
    return value;
}

std::vector<std::string> split(const std::string &text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string::npos ? text.size() : comma;
        if (end > start)
            out.push_back(text.substr(start, end - start));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return out;
}

bool parse_bool(const std::string &text, const std::string &name) {
    if (text == "true" || text == "1")
        return true;
    if (text == "false" || text == "0")
        return false;
    throw Error(ErrorCode::format, "query parameter '" + name + "' must be true or false");
}

json parse_body(const httplib::Request &req) {
    if (req.body.empty())
        return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error &e) {
        throw Error(ErrorCode::format, std::string("request body is not valid JSON: ") + e.what());
    }
}

void send(httplib::Response &res, int status, const json &body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

ClassId parse_class(const std::string &text, const std::vector<std::string> &names) {
    const auto it = std::find(names.begin(), names.end(), text);
    if (it != names.end())
        return static_cast<ClassId>(it - names.begin());
    const auto c = parse_number<int>(text, "classes");
    if (c < 0 || static_cast<std::size_t>(c) >= names.size())
        throw Error(ErrorCode::reference, "unknown class '" + text + "'");
    return c;
}

ReportConfig report_config(const json &j) {
    ReportConfig cfg;
    try {
        cfg.folds = j.value("folds", cfg.folds);
        cfg.trials = j.value("trials", cfg.trials);
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const json::exception &e) {
        throw Error(ErrorCode::format, std::string("bad report settings: ") + e.what());
    }
    return cfg;
}

std::string sse_event(const char *event, const json &data, std::optional<std::uint64_t> id = std::nullopt) {
    std::string out;
    if (id)
        out += "id: " + std::to_string(*id) + "\n";
    out += std::string("event: ") + event + "\ndata: " + data.dump() + "\n\n";
    return out;
}

} // namespace

struct Server::Impl {
    ServerOptions options;
    SessionManager manager;
    httplib::Server http;
    std::atomic<bool> stopping{false};
    int port = -1;
    std::thread thread;

    explicit Impl(ServerOptions o) : options(std::move(o)), manager(options.data_dir) { routes(); }

    template <class F> auto guarded(F f) {
        return [this, f](const httplib::Request &req, httplib::Response &res) {
            res.set_header("Access-Control-Allow-Origin", options.cors_origin);
            try {
                f(req, res);
            } catch (const Error &e) {
                send(res, wire::http_status(e.code()), wire::error_body(e));
            } catch (const std::exception &e) {
                send(res, 500, wire::error_body("internal", e.what()));
            }
        };
    }

    std::shared_ptr<Session> session(const httplib::Request &req) { return manager.get(req.matches[1]); }

    void routes();
    void events(const httplib::Request &req, httplib::Response &res);
};

void Server::Impl::routes() {
    http.Options(R"(/.*)", [this](const httplib::Request &, httplib::Response &res) {
        res.set_header("Access-Control-Allow-Origin", options.cors_origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
        res.status = 204;
    });

    http.Get("/health", guarded([this](const httplib::Request &, httplib::Response &res) {
                 send(res, 200, {{"status", "ok"}, {"sessions", manager.ids().size()}});
             }));

    http.Get("/sessions", guarded([this](const httplib::Request &, httplib::Response &res) {
                 send(res, 200, {{"sessions", manager.ids()}});
             }));

    http.Post("/sessions", guarded([this](const httplib::Request &req, httplib::Response &res) {
                  send(res, 201, manager.create(parse_body(req))->summary());
              }));

    http.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 send(res, 200, session(req)->summary());
             }));

    http.Delete(R"(/sessions/([^/]+))", guarded([this](const httplib::Request &req, httplib::Response &res) {
                    manager.destroy(req.matches[1]);
                    res.status = 204;
                }));

    http.Get(R"(/sessions/([^/]+)/hyperparams)",
             guarded([this](const httplib::Request &req, httplib::Response &res) {
                 send(res, 200, session(req)->hyperparams());
             }));

    http.Put(R"(/sessions/([^/]+)/hyperparams)",
             guarded([this](const httplib::Request &req, httplib::Response &res) {
                 auto s = session(req);
                 const auto hp = wire::hyperparams_from_json(parse_body(req), s->snapshot()->hp);
                 send(res, 200, s->set_hyperparams(hp));
             }));

    http.Get(R"(/sessions/([^/]+)/graph)", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 auto s = session(req);
                 GraphFilter f;
                 if (req.has_param("min_certainty"))
                     f.min_certainty = parse_number<double>(req.get_param_value("min_certainty"), "min_certainty");
                 if (req.has_param("max_certainty"))
                     f.max_certainty = parse_number<double>(req.get_param_value("max_certainty"), "max_certainty");
                 if (req.has_param("classes")) {
                     const auto names = s->snapshot()->graph.class_names();
                     f.classes.emplace();
                     for (const auto &c : split(req.get_param_value("classes")))
                         f.classes->push_back(parse_class(c, names));
                 }
                 if (req.has_param("nodes")) {
                     f.nodes.emplace();
                     for (const auto &v : split(req.get_param_value("nodes")))
                         f.nodes->push_back(parse_number<NodeId>(v, "nodes"));
                 }
                 if (req.has_param("invert"))
                     f.invert = parse_bool(req.get_param_value("invert"), "invert");
                 send(res, 200, s->graph_view(f));
             }));

    http.Get(R"(/sessions/([^/]+)/nodes/([^/]+))",
             guarded([this](const httplib::Request &req, httplib::Response &res) {
                 send(res, 200, session(req)->node_details(parse_number<NodeId>(req.matches[2], "node")));
             }));

    http.Post(R"(/sessions/([^/]+)/mutations)",
              guarded([this](const httplib::Request &req, httplib::Response &res) {
                  auto s = session(req);
                  const auto m = wire::mutation_from_json(parse_body(req), s->snapshot()->graph);
                  send(res, 200, s->mutate(m));
              }));

    http.Post(R"(/sessions/([^/]+)/labels)", guarded([this](const httplib::Request &req, httplib::Response &res) {
                  auto s = session(req);
                  auto body = parse_body(req);
                  if (!body.is_object())
                      throw Error(ErrorCode::format, "label request must be an object");
                  body["op"] = "set_label";
                  send(res, 200, s->mutate(wire::mutation_from_json(body, s->snapshot()->graph)));
              }));

    http.Post(R"(/sessions/([^/]+)/local-model)",
              guarded([this](const httplib::Request &req, httplib::Response &res) {
                  auto s = session(req);
                  const auto body = parse_body(req);
                  if (!body.is_object() || !body.contains("nodes") || !body.at("nodes").is_array())
                      throw Error(ErrorCode::format, "local-model request needs a 'nodes' array");
                  std::vector<NodeId> nodes;
                  for (const auto &v : body.at("nodes")) {
                      if (!v.is_number_integer() || v.get<long long>() < 0)
                          throw Error(ErrorCode::format, "'nodes' must hold node ids");
                      nodes.push_back(v.get<NodeId>());
                  }
                  std::optional<Hyperparams> hp;
                  if (body.contains("hyperparams"))
                      hp = wire::hyperparams_from_json(body.at("hyperparams"), s->snapshot()->hp);
                  send(res, 200, s->local_model(nodes, hp, report_config(body)));
              }));

    http.Get(R"(/sessions/([^/]+)/report)", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 ReportConfig cfg;
                 if (req.has_param("folds"))
                     cfg.folds = parse_number<int>(req.get_param_value("folds"), "folds");
                 if (req.has_param("trials"))
                     cfg.trials = parse_number<int>(req.get_param_value("trials"), "trials");
                 if (req.has_param("seed"))
                     cfg.seed = parse_number<std::uint64_t>(req.get_param_value("seed"), "seed");
                 send(res, 200, session(req)->report(cfg));
             }));

    http.Get(R"(/sessions/([^/]+)/deltas)", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 auto s = session(req);
                 const auto since = req.has_param("since")
                                        ? parse_number<std::uint64_t>(req.get_param_value("since"), "since")
                                        : 0;
                 send(res, 200, {{"version", s->version()}, {"deltas", s->deltas_since(since)}});
             }));

    http.Get(R"(/sessions/([^/]+)/events)", guarded([this](const httplib::Request &req, httplib::Response &res) {
                 events(req, res);
             }));
}

void Server::Impl::events(const httplib::Request &req, httplib::Response &res) {
    auto s = session(req);
    std::uint64_t since = s->version();
    if (req.has_param("since"))
        since = parse_number<std::uint64_t>(req.get_param_value("since"), "since");
    else if (req.has_header("Last-Event-ID"))
        since = parse_number<std::uint64_t>(req.get_header_value("Last-Event-ID"), "Last-Event-ID");
    s->deltas_since(since); // reject a stale cursor before streaming

    res.set_header("Cache-Control", "no-cache");
    auto hello = std::make_shared<bool>(true);
    res.set_chunked_content_provider(
        "text/event-stream", [this, s, since, hello](std::size_t, httplib::DataSink &sink) mutable {
            auto write = [&](const std::string &chunk) { return sink.write(chunk.data(), chunk.size()); };
            if (*hello) {
                *hello = false;
                return write(sse_event("hello", {{"session", s->id()}, {"version", since}}));
            }
            const auto slice = std::min(options.keepalive, std::chrono::milliseconds(200));
            auto waited = std::chrono::milliseconds(0);
            bool fresh = false;
            while (!stopping && !s->closed() && waited < options.keepalive) {
                if ((fresh = s->wait_for_delta(since, slice)))
                    break;
                waited += slice;
            }
            if (stopping || s->closed()) {
                write(sse_event("closed", {{"session", s->id()}}));
                sink.done();
                return true;
            }
            if (!fresh)
                return write(": keepalive\n\n");
            std::vector<json> deltas;
            try {
                deltas = s->deltas_since(since);
            } catch (const Error &e) {
                write(sse_event("reset", wire::error_body(e)));
                sink.done();
                return true;
            }
            for (const auto &d : deltas) {
                since = d["version"].get<std::uint64_t>();
                if (!write(sse_event("delta", d, since)))
                    return false;
            }
            return true;
        });
}

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Server::~Server() { stop(); }

int Server::bind() {
    if (impl_->port >= 0)
        return impl_->port;
    const auto &o = impl_->options;
    if (o.port == 0) {
        impl_->port = impl_->http.bind_to_any_port(o.host);
    } else if (impl_->http.bind_to_port(o.host, o.port)) {
        impl_->port = o.port;
    }
    if (impl_->port < 0)
        throw Error(ErrorCode::parameter, "cannot bind " + o.host + ":" + std::to_string(o.port));
    return impl_->port;
}

void Server::run() {
    bind();
    impl_->http.listen_after_bind();
}

int Server::start() {
    const int port = bind();
    impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
    return port;
}

void Server::stop() {
    impl_->stopping = true;
    impl_->http.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

SessionManager &Server::sessions() { return impl_->manager; }

} // namespace rsm
