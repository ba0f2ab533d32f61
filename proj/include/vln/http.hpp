#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "vln/runner.hpp"
#include "vln/service.hpp"

namespace vln {

struct ServerConfig {
    std::optional<std::filesystem::path> data_root;
    std::string bind = "127.0.0.1";
    int port = 8080;
    int idle_timeout_s = 600;
    bool debug = false;
    std::uint64_t seed = 42;  ///< synthetic fallback seed
};

/// Reads a JSON object with any of the ServerConfig keys. Throws DataError.
ServerConfig load_server_config(const std::filesystem::path& path);
/// VLNDE_BIND ("host" or "host:port") and VLNDE_DEBUG ("1"/"true"/"0"/"false").
void apply_env_overrides(ServerConfig& config);

/// HTTP/JSON binding of an EpisodeService.
///   POST /episodes, POST /episodes/{token}/action, GET /episodes/{token}, GET /health,
///   GET /episodes/{token}/expert_action (answers only when the service runs in debug mode).
class HttpServer {
   public:
    explicit HttpServer(EpisodeService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Returns the bound port (useful with port 0). Throws std::runtime_error on failure.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void serve();
    void stop();

   private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Forwards each decision to "remote:<url>". The endpoint receives
/// {system, prompt, space, vocabulary} as JSON and answers {"text": "..."}, which goes
/// through parse_action. The URL path defaults to /act; GET /health on the same host is
/// probed at construction and must answer 200.
class RemotePolicy : public Policy {
   public:
    explicit RemotePolicy(const std::string& url, double timeout_s = 30.0);
    ~RemotePolicy() override;
    Action decide(const DecisionContext& context) override;

   private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace vln
