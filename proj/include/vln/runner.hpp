#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vln/prompts.hpp"
#include "vln/simulator.hpp"

namespace vln {

/// Everything a policy may look at when choosing the next action. The prompt is
/// rendered on first use only, so policies that ignore it pay nothing.
class DecisionContext {
   public:
    DecisionContext(const EpisodeSpec& spec, const AgentState& state, const Observation& observation,
                    PromptOptions options = {})
        : spec_(spec), state_(state), observation_(observation), options_(options) {}

    const EpisodeSpec& spec() const { return spec_; }
    const AgentState& state() const { return state_; }
    const Observation& observation() const { return observation_; }
    const Prompt& prompt() const;

   private:
    const EpisodeSpec& spec_;
    const AgentState& state_;
    const Observation& observation_;
    PromptOptions options_;
    mutable std::optional<Prompt> prompt_;
};

class Policy {
   public:
    virtual ~Policy() = default;
    virtual void begin_episode(const EpisodeSpec& /*spec*/) {}
    virtual Action decide(const DecisionContext& context) = 0;
};

struct Pose {
    NodeId node;
    double heading_deg = 0.0;

    bool operator==(const Pose&) const = default;
};

struct EpisodeRecord {
    static constexpr int kSchemaVersion = 1;

    std::string episode_id;
    int instruction_index = 0;
    std::string scan_id;
    ActionSpace space = ActionSpace::pano;
    Variant variant{};
    NodeId start;
    NodeId goal;
    double start_heading_deg = 0.0;

    /// Every executed action, simulator-inserted adjusts included.
    std::vector<Action> actions;
    /// Pose before each entry of `actions`, plus the final pose (size = actions + 1).
    std::vector<Pose> poses;
    /// Visited nodes, starting at `start`; one extra entry per relocation.
    std::vector<NodeId> path;
    /// Wall-clock time of each policy decision.
    std::vector<double> step_ms;
    /// Flattened prompt text per decision when prompt recording is enabled.
    std::vector<std::string> prompts;

    bool stopped = false;
    int steps = 0;
    double distance_m = 0.0;
    std::optional<std::string> error;

    std::vector<Action> learnable_actions() const;
};

/// Builds the record of an episode from its (possibly unfinished) state.
EpisodeRecord make_record(const EpisodeSpec& spec, const AgentState& state);

struct RunOptions {
    bool record_prompts = false;
    /// Return the partial record with `error` set instead of throwing PolicyError.
    bool capture_policy_errors = false;
    PromptOptions prompt{};
};

/// Greedy closed loop: observe, ask the policy, step, until done or out of steps.
/// Policy exceptions and illegal choices surface as PolicyError with the step number.
EpisodeRecord run_episode(Policy& policy, const EpisodeSpec& spec, const RunOptions& options = {});

/// Feeds learnable actions through the simulator; adjusts are re-inserted as the variant dictates.
EpisodeRecord replay(const EpisodeSpec& spec, std::span<const Action> learnable_actions);

nlohmann::json to_json(const EpisodeRecord& record);
EpisodeRecord record_from_json(const nlohmann::json& doc);

}  // namespace vln
