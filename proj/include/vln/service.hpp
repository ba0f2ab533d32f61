#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include <json.hpp>

#include "vln/data.hpp"
#include "vln/runner.hpp"

namespace vln {

/// Status code plus JSON body; the HTTP layer forwards both verbatim.
struct ServiceResponse {
    int status = 200;
    nlohmann::json body;
};

struct ServiceOptions {
    std::chrono::seconds idle_timeout{600};
    bool debug = false;
    std::function<std::chrono::steady_clock::time_point()> clock = [] { return std::chrono::steady_clock::now(); };
};

/// Episode sessions driven one action per request. Thread-safe. Each session is owned by
/// at most one request at a time; a second concurrent request gets 409 instead of waiting.
/// Sessions live in memory only and do not survive a restart.
class EpisodeService {
   public:
    using SplitLoader = std::function<Dataset(const std::string& split)>;

    EpisodeService(SplitLoader loader, ServiceOptions options = {});
    ~EpisodeService();

    /// {split, episode_id, instruction_index = 0, space = "pano", variant = {}}
    ///   -> {episode_token, system_prompt, prompt, step, done}
    ServiceResponse create(const nlohmann::json& request);
    /// {token: "<action>"} -> {done: false, step, prompt} or {done: true, step, summary}
    ServiceResponse act(const std::string& token, const nlohmann::json& request);
    ServiceResponse snapshot(const std::string& token);
    /// Debug only; 404 otherwise.
    ServiceResponse expert_action(const std::string& token);

    /// Drops sessions idle for longer than the timeout; later requests for them get 410.
    std::size_t expire_idle();
    std::size_t active() const;

   private:
    struct Session;
    struct Lookup;

    const Dataset& dataset(const std::string& split);
    Lookup find(const std::string& token);
    std::string new_token();

    SplitLoader loader_;
    ServiceOptions options_;

    std::mutex datasets_mutex_;
    std::map<std::string, Dataset> datasets_;

    mutable std::mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::set<std::string> expired_;
    std::uint64_t counter_ = 0;
    std::uint64_t token_salt_;
};

}  // namespace vln
