#include "vln/runner.hpp"

#include <chrono>

#include <fmt/core.h>

#include "vln/errors.hpp"

namespace vln {

const Prompt& DecisionContext::prompt() const {
    if (!prompt_) prompt_ = render_state_prompt(state_, observation_, spec_, options_);
    return *prompt_;
}

std::vector<Action> EpisodeRecord::learnable_actions() const {
    std::vector<Action> out;
    for (const auto& a : actions) {
        if (a.learnable()) out.push_back(a);
    }
    return out;
}

EpisodeRecord make_record(const EpisodeSpec& spec, const AgentState& state) {
    EpisodeRecord r;
    r.episode_id = spec.episode_id;
    r.instruction_index = spec.instruction_index;
    r.scan_id = spec.graph ? spec.graph->scan_id() : std::string();
    r.space = spec.space;
    r.variant = spec.variant;
    r.start = spec.start;
    r.goal = spec.goal;
    r.start_heading_deg = spec.start_heading_deg;

    r.path.push_back(spec.start);
    for (const auto& entry : state.history) {
        r.actions.push_back(entry.action);
        r.poses.push_back({entry.view.node, entry.view.heading_deg});
    }
    r.poses.push_back({state.node, state.heading_deg});
    for (std::size_t i = 0; i < r.actions.size(); ++i) {
        const auto kind = r.actions[i].kind;
        if (kind == Action::Kind::move || kind == Action::Kind::candidate) {
            r.path.push_back(r.poses[i + 1].node);
        }
    }
    r.stopped = state.done && state.stopped;
    r.steps = state.step - 1;
    r.distance_m = state.distance_m;
    return r;
}

EpisodeRecord run_episode(Policy& policy, const EpisodeSpec& spec, const RunOptions& options) {
    spec.validate();
    policy.begin_episode(spec);

    AgentState state = initial_state(spec);
    Observation observation = observe(state, spec);
    std::vector<double> step_ms;
    std::vector<std::string> prompts;

    std::optional<std::string> failure;
    while (!state.done) {
        const auto t0 = std::chrono::steady_clock::now();
        DecisionContext context(spec, state, observation, options.prompt);
        Action action;
        StepResult result;
        try {
            try {
                action = policy.decide(context);
            } catch (const std::exception& e) {
                throw PolicyError(spec.episode_id, state.step,
                                  fmt::format("episode {} step {}: policy failed: {}", spec.episode_id,
                                              state.step, e.what()));
            }
            if (options.record_prompts) prompts.push_back(context.prompt().flat_text());
            try {
                result = step(state, spec, action);
            } catch (const SimulationError& e) {
                throw PolicyError(spec.episode_id, state.step,
                                  fmt::format("episode {} step {}: illegal action '{}': {}",
                                              spec.episode_id, state.step, action.token(), e.what()));
            }
        } catch (const PolicyError& e) {
            if (!options.capture_policy_errors) throw;
            failure = e.what();
            break;
        }
        state = std::move(result.state);
        if (result.observation) observation = std::move(*result.observation);
        step_ms.push_back(
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }

    EpisodeRecord record = make_record(spec, state);
    record.error = std::move(failure);
    record.step_ms = std::move(step_ms);
    record.prompts = std::move(prompts);
    return record;
}

EpisodeRecord replay(const EpisodeSpec& spec, std::span<const Action> learnable_actions) {
    spec.validate();
    AgentState state = initial_state(spec);
    for (const auto& action : learnable_actions) {
        if (state.done) throw SimulationError("replay: actions remain after the episode finished");
        state = step(std::move(state), spec, action).state;
    }
    return make_record(spec, state);
}

namespace {

nlohmann::json actions_json(const std::vector<Action>& actions) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& a : actions) out.push_back(a.token());
    return out;
}

}  // namespace

nlohmann::json to_json(const EpisodeRecord& r) {
    nlohmann::json poses = nlohmann::json::array();
    for (const auto& p : r.poses) poses.push_back({{"node", p.node}, {"heading_deg", p.heading_deg}});
    nlohmann::json doc = {{"schema_version", EpisodeRecord::kSchemaVersion},
                          {"episode_id", r.episode_id},
                          {"instruction_index", r.instruction_index},
                          {"scan_id", r.scan_id},
                          {"space", to_string(r.space)},
                          {"variant", to_json(r.variant)},
                          {"start", r.start},
                          {"goal", r.goal},
                          {"start_heading_deg", r.start_heading_deg},
                          {"actions", actions_json(r.actions)},
                          {"poses", std::move(poses)},
                          {"path", r.path},
                          {"step_ms", r.step_ms},
                          {"stopped", r.stopped},
                          {"steps", r.steps},
                          {"distance_m", r.distance_m},
                          {"error", r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr)}};
    if (!r.prompts.empty()) doc["prompts"] = r.prompts;
    return doc;
}

EpisodeRecord record_from_json(const nlohmann::json& doc) {
    try {
        const int version = doc.at("schema_version").get<int>();
        if (version != EpisodeRecord::kSchemaVersion) {
            throw DataError(fmt::format("unsupported episode record schema_version {}", version));
        }
        EpisodeRecord r;
        r.episode_id = doc.at("episode_id").get<std::string>();
        r.instruction_index = doc.at("instruction_index").get<int>();
        r.scan_id = doc.at("scan_id").get<std::string>();
        r.space = action_space_from_string(doc.at("space").get<std::string>());
        r.variant = variant_from_json(doc.at("variant"));
        r.start = doc.at("start").get<std::string>();
        r.goal = doc.at("goal").get<std::string>();
        r.start_heading_deg = doc.at("start_heading_deg").get<double>();
        for (const auto& a : doc.at("actions")) r.actions.push_back(action_from_token(a.get<std::string>()));
        for (const auto& p : doc.at("poses")) {
            r.poses.push_back({p.at("node").get<std::string>(), p.at("heading_deg").get<double>()});
        }
        r.path = doc.at("path").get<std::vector<std::string>>();
        r.step_ms = doc.at("step_ms").get<std::vector<double>>();
        if (doc.contains("prompts")) r.prompts = doc["prompts"].get<std::vector<std::string>>();
        r.stopped = doc.at("stopped").get<bool>();
        r.steps = doc.at("steps").get<int>();
        r.distance_m = doc.at("distance_m").get<double>();
        if (!doc.at("error").is_null()) r.error = doc["error"].get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("malformed episode record: {}", e.what()));
    }
}

}  // namespace vln
