#include "vln/http.hpp"

#include <cstdlib>
#include <fstream>
#include <variant>

#include <fmt/core.h>
#include <httplib.h>

#include "vln/errors.hpp"
#include "vln/prompts.hpp"

namespace vln {

using nlohmann::json;

ServerConfig load_server_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
    ServerConfig c;
    try {
        json doc;
        in >> doc;
        if (doc.contains("data_root")) c.data_root = doc["data_root"].get<std::string>();
        c.bind = doc.value("bind", c.bind);
        c.port = doc.value("port", c.port);
        c.idle_timeout_s = doc.value("idle_timeout_s", c.idle_timeout_s);
        c.debug = doc.value("debug", c.debug);
        c.seed = doc.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw DataError(fmt::format("{}: {}", path.string(), e.what()));
    }
    return c;
}

void apply_env_overrides(ServerConfig& config) {
    if (const char* bind = std::getenv("VLNDE_BIND"); bind && *bind) {
        std::string value(bind);
        if (const auto colon = value.rfind(':'); colon != std::string::npos) {
            config.port = std::stoi(value.substr(colon + 1));
            value.resize(colon);
        }
        config.bind = value;
    }
    if (const char* debug = std::getenv("VLNDE_DEBUG"); debug && *debug) {
        const std::string v(debug);
        config.debug = v == "1" || v == "true" || v == "on";
    }
}

struct HttpServer::Impl {
    EpisodeService& service;
    httplib::Server server;

    explicit Impl(EpisodeService& s) : service(s) {}

    static void reply(httplib::Response& res, const ServiceResponse& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    }

    static std::optional<json> body(const httplib::Request& req, httplib::Response& res) {
        try {
            return json::parse(req.body);
        } catch (const json::exception& e) {
            reply(res, {400, {{"error", fmt::format("request body is not JSON: {}", e.what())}}});
            return std::nullopt;
        }
    }
};

HttpServer::HttpServer(EpisodeService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    Impl* self = impl_.get();

    srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        Impl::reply(res, {200, {{"status", "ok"}}});
    });
    srv.Post("/episodes", [self](const httplib::Request& req, httplib::Response& res) {
        if (auto doc = Impl::body(req, res)) Impl::reply(res, self->service.create(*doc));
    });
    srv.Post(R"(/episodes/([0-9a-f]+)/action)", [self](const httplib::Request& req, httplib::Response& res) {
        if (auto doc = Impl::body(req, res)) Impl::reply(res, self->service.act(req.matches[1], *doc));
    });
    srv.Get(R"(/episodes/([0-9a-f]+)/expert_action)", [self](const httplib::Request& req, httplib::Response& res) {
        Impl::reply(res, self->service.expert_action(req.matches[1]));
    });
    srv.Get(R"(/episodes/([0-9a-f]+))", [self](const httplib::Request& req, httplib::Response& res) {
        Impl::reply(res, self->service.snapshot(req.matches[1]));
    });
    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        Impl::reply(res, {500, {{"error", what}}});
    });
    srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) res.set_content(json{{"error", "not found"}}.dump(), "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    auto& srv = impl_->server;
    if (port == 0) {
        const int bound = srv.bind_to_any_port(host);
        if (bound < 0) throw std::runtime_error(fmt::format("cannot bind {}", host));
        return bound;
    }
    if (!srv.bind_to_port(host, port)) throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
    return port;
}

void HttpServer::serve() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

struct RemotePolicy::Impl {
    std::unique_ptr<httplib::Client> client;
    std::string path;
};

RemotePolicy::RemotePolicy(const std::string& url, double timeout_s) : impl_(std::make_unique<Impl>()) {
    std::string base = url;
    if (base.rfind("remote:", 0) == 0) base = base.substr(7);
    const auto scheme = base.find("://");
    const auto slash = base.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    impl_->path = slash == std::string::npos ? "/act" : base.substr(slash);
    if (slash != std::string::npos) base.resize(slash);

    impl_->client = std::make_unique<httplib::Client>(base);
    if (!impl_->client->is_valid()) throw std::runtime_error(fmt::format("invalid remote policy url '{}'", url));
    const auto secs = static_cast<time_t>(timeout_s);
    const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
    impl_->client->set_connection_timeout(secs, usecs);
    impl_->client->set_read_timeout(secs, usecs);
    impl_->client->set_write_timeout(secs, usecs);

    const auto probe = impl_->client->Get("/health");
    if (!probe) {
        throw std::runtime_error(
            fmt::format("remote policy {} unreachable: {}", base, httplib::to_string(probe.error())));
    }
    if (probe->status != 200) {
        throw std::runtime_error(fmt::format("remote policy {} health check returned {}", base, probe->status));
    }
}

RemotePolicy::~RemotePolicy() = default;

Action RemotePolicy::decide(const DecisionContext& context) {
    const Prompt& prompt = context.prompt();
    const json request = {{"system", render_system_prompt(context.spec().space)},
                          {"prompt", to_json(prompt)},
                          {"space", to_string(context.spec().space)},
                          {"vocabulary", prompt.vocabulary}};
    const auto res = impl_->client->Post(impl_->path, request.dump(), "application/json");
    if (!res) throw std::runtime_error(fmt::format("remote policy request failed: {}", httplib::to_string(res.error())));
    if (res->status != 200) throw std::runtime_error(fmt::format("remote policy returned {}", res->status));
    std::string text;
    try {
        text = json::parse(res->body).at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw std::runtime_error(fmt::format("malformed remote policy reply: {}", e.what()));
    }
    int k = 0;
    if (const auto* pano = std::get_if<PanoObservation>(&context.observation())) {
        k = static_cast<int>(pano->candidates.size());
    }
    return parse_action(text, context.spec().space, k);
}

}  // namespace vln
