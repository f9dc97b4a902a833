#pragma once

#include <rsm/service.hpp>

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

namespace rsm {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080; // 0 picks a free port
    std::filesystem::path data_dir;
    std::chrono::milliseconds keepalive{15000}; // SSE comment interval
    std::string cors_origin = "*";
};

/// HTTP/JSON front end over a SessionManager. See docs/wire-protocol.md.
class Server {
public:
    explicit Server(ServerOptions options);
    ~Server();

    Server(const Server &) = delete;
    Server &operator=(const Server &) = delete;

    /// Binds the socket and returns the port in use.
    int bind();
    /// Serves until stop(). Binds first if needed.
    void run();
    /// run() on a background thread; returns the port.
    int start();
    void stop();

    SessionManager &sessions();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace rsm
