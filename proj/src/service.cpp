#include "vln/service.hpp"

#include <algorithm>
#include <random>

#include <fmt/core.h>

#include "vln/errors.hpp"
#include "vln/expert.hpp"
#include "vln/metrics.hpp"
#include "vln/prompts.hpp"

namespace vln {

using nlohmann::json;

struct EpisodeService::Session {
    std::mutex busy;
    std::string split;
    EpisodeSpec spec;
    AgentState state;
    Observation observation;
    std::chrono::steady_clock::time_point last_used;  ///< guarded by sessions_mutex_
};

struct EpisodeService::Lookup {
    std::shared_ptr<Session> session;
    ServiceResponse failure;
};

namespace {

ServiceResponse fail(int status, std::string message) { return {status, {{"error", std::move(message)}}}; }

int candidate_count(const Observation& obs) {
    if (const auto* pano = std::get_if<PanoObservation>(&obs)) return static_cast<int>(pano->candidates.size());
    return 0;
}

json summary(const EpisodeSpec& spec, const AgentState& state) {
    const auto record = make_record(spec, state);
    const auto c = score_online(record, spec);
    return {{"episode_id", spec.episode_id},
            {"ne", c.ne_m},
            {"pl", c.pl_m},
            {"oracle_success", c.oracle_success},
            {"success", c.success},
            {"spl", c.spl},
            {"cls", c.cls},
            {"steps", record.steps},
            {"stopped", record.stopped},
            {"record", to_json(record)}};
}

}  // namespace

EpisodeService::EpisodeService(SplitLoader loader, ServiceOptions options)
    : loader_(std::move(loader)), options_(std::move(options)) {
    std::random_device rd;
    token_salt_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

EpisodeService::~EpisodeService() = default;

const Dataset& EpisodeService::dataset(const std::string& split) {
    std::lock_guard lock(datasets_mutex_);
    auto it = datasets_.find(split);
    if (it == datasets_.end()) it = datasets_.emplace(split, loader_(split)).first;
    return it->second;
}

std::string EpisodeService::new_token() {
    std::random_device rd;
    const std::uint64_t hi = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    const std::uint64_t lo = fnv1a(std::to_string(++counter_), token_salt_);
    return fmt::format("{:016x}{:016x}", hi, lo);
}

std::size_t EpisodeService::expire_idle() {
    std::lock_guard lock(sessions_mutex_);
    const auto now = options_.clock();
    std::size_t dropped = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (now - it->second->last_used > options_.idle_timeout) {
            expired_.insert(it->first);
            it = sessions_.erase(it);
            ++dropped;
        } else {
            ++it;
        }
    }
    return dropped;
}

std::size_t EpisodeService::active() const {
    std::lock_guard lock(sessions_mutex_);
    return sessions_.size();
}

EpisodeService::Lookup EpisodeService::find(const std::string& token) {
    expire_idle();
    std::lock_guard lock(sessions_mutex_);
    const auto it = sessions_.find(token);
    if (it == sessions_.end()) {
        if (expired_.count(token)) return {nullptr, fail(410, "episode expired")};
        return {nullptr, fail(404, "unknown episode token")};
    }
    it->second->last_used = options_.clock();
    return {it->second, {}};
}

ServiceResponse EpisodeService::create(const json& request) {
    auto session = std::make_shared<Session>();
    std::string episode_id;
    int instruction_index = 0;
    ActionSpace space = ActionSpace::pano;
    Variant variant;
    try {
        session->split = request.at("split").get<std::string>();
        const auto& id = request.at("episode_id");
        episode_id = id.is_string() ? id.get<std::string>() : id.dump();
        instruction_index = request.value("instruction_index", 0);
        space = action_space_from_string(request.value("space", std::string("pano")));
        if (request.contains("variant") && !request["variant"].is_null()) {
            variant = variant_from_json(request["variant"]);
        }
        variant.fov.validate();
    } catch (const json::exception& e) {
        return fail(400, fmt::format("malformed request: {}", e.what()));
    } catch (const std::exception& e) {
        return fail(400, e.what());
    }

    const Dataset* ds = nullptr;
    try {
        ds = &dataset(session->split);
    } catch (const DataError& e) {
        return fail(404, fmt::format("unknown split {}: {}", session->split, e.what()));
    }
    const auto it = std::find_if(ds->episodes.begin(), ds->episodes.end(), [&](const EpisodeSpec& e) {
        return e.episode_id == episode_id && e.instruction_index == instruction_index;
    });
    if (it == ds->episodes.end()) {
        return fail(404, fmt::format("no episode {} with instruction {} in split {}", episode_id,
                                     instruction_index, session->split));
    }

    session->spec = *it;
    session->spec.space = space;
    session->spec.variant = variant;
    try {
        session->spec.validate();
    } catch (const Error& e) {
        return fail(400, e.what());
    }
    session->state = initial_state(session->spec);
    session->observation = observe(session->state, session->spec);
    session->last_used = options_.clock();

    json body = {{"system_prompt", render_system_prompt(space)},
                 {"prompt", to_json(render_state_prompt(session->state, session->observation, session->spec))},
                 {"step", session->state.step},
                 {"done", false}};
    std::lock_guard lock(sessions_mutex_);
    std::string token = new_token();
    body["episode_token"] = token;
    sessions_.emplace(std::move(token), std::move(session));
    return {200, std::move(body)};
}

ServiceResponse EpisodeService::act(const std::string& token, const json& request) {
    auto found = find(token);
    if (!found.session) return found.failure;
    Session& s = *found.session;
    std::unique_lock busy(s.busy, std::try_to_lock);
    if (!busy) return fail(409, "another request for this episode is in progress");
    if (s.state.done) return fail(409, "episode finished");

    std::string raw;
    try {
        raw = request.at("token").get<std::string>();
    } catch (const json::exception& e) {
        return fail(400, fmt::format("malformed request: {}", e.what()));
    }

    StepResult result;
    try {
        const Action action = parse_action(raw, s.spec.space, candidate_count(s.observation));
        result = step(s.state, s.spec, action);
    } catch (const ParseError& e) {
        return {422, {{"error", e.what()}, {"raw", raw}}};
    } catch (const SimulationError& e) {
        return {422, {{"error", e.what()}, {"raw", raw}}};
    }
    s.state = std::move(result.state);
    if (result.observation) s.observation = std::move(*result.observation);

    if (s.state.done) return {200, {{"done", true}, {"step", s.state.step}, {"summary", summary(s.spec, s.state)}}};
    return {200,
            {{"done", false},
             {"step", s.state.step},
             {"prompt", to_json(render_state_prompt(s.state, s.observation, s.spec))}}};
}

ServiceResponse EpisodeService::snapshot(const std::string& token) {
    auto found = find(token);
    if (!found.session) return found.failure;
    Session& s = *found.session;
    std::unique_lock busy(s.busy, std::try_to_lock);
    if (!busy) return fail(409, "another request for this episode is in progress");

    json history = json::array();
    for (const auto& h : s.state.history) {
        history.push_back({{"node", h.view.node}, {"heading_deg", h.view.heading_deg}, {"action", h.action.token()}});
    }
    return {200,
            {{"split", s.split},
             {"episode_id", s.spec.episode_id},
             {"instruction_index", s.spec.instruction_index},
             {"space", to_string(s.spec.space)},
             {"variant", to_json(s.spec.variant)},
             {"node", s.state.node},
             {"heading_deg", s.state.heading_deg},
             {"distance_m", s.state.distance_m},
             {"step", s.state.step},
             {"done", s.state.done},
             {"stopped", s.state.stopped},
             {"history", std::move(history)}}};
}

ServiceResponse EpisodeService::expert_action(const std::string& token) {
    if (!options_.debug) return fail(404, "not found");
    auto found = find(token);
    if (!found.session) return found.failure;
    Session& s = *found.session;
    std::unique_lock busy(s.busy, std::try_to_lock);
    if (!busy) return fail(409, "another request for this episode is in progress");
    if (s.state.done) return fail(409, "episode finished");
    try {
        return {200, {{"token", next_expert_action(s.state, s.spec).token()}}};
    } catch (const ExpertError& e) {
        return fail(500, e.what());
    }
}

}  // namespace vln
