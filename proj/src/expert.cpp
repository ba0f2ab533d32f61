#include "vln/expert.hpp"

#include <limits>

#include <fmt/core.h>

#include "vln/errors.hpp"

namespace vln {

namespace {

constexpr int kHalfTurns = 6;  // 6 x 30 degrees covers the half circle

std::size_t relocations(const AgentState& state) {
    std::size_t n = 0;
    for (const auto& entry : state.history) {
        if (entry.action.kind == Action::Kind::move || entry.action.kind == Action::Kind::candidate) ++n;
    }
    return n;
}

/// Node the teacher wants to reach next, or nullopt when it should stop.
std::optional<NodeId> next_target(const AgentState& state, const EpisodeSpec& spec) {
    const auto& path = spec.gt_path;
    const std::size_t progress = relocations(state);
    if (progress < path.size() && path[progress] == state.node) {
        if (progress + 1 == path.size()) return std::nullopt;
        return path[progress + 1];
    }
    if (state.node == spec.goal) return std::nullopt;
    const auto detour = spec.graph->shortest_path(state.node, spec.goal);
    if (!detour) {
        throw ExpertError(fmt::format("episode {}: goal {} unreachable from {}", spec.episode_id,
                                      spec.goal, state.node));
    }
    return (*detour)[1];
}

Action low_level_teacher(const AgentState& state, const EpisodeSpec& spec, const NodeId& target) {
    const NavGraph& graph = *spec.graph;
    const double half = spec.variant.move_half_angle();
    const auto centered = [&](double heading) {
        return center_node(graph, state.node, heading, half) == target;
    };
    if (centered(state.heading_deg)) return Action::move();
    for (int turns = 1; turns <= kHalfTurns; ++turns) {
        if (centered(state.heading_deg + turns * kTurnDeg)) return Action::right();
        if (centered(state.heading_deg - turns * kTurnDeg)) return Action::left();
    }
    throw ExpertError(fmt::format("episode {}: {} -> {} cannot be centered from any grid heading",
                                  spec.episode_id, state.node, target));
}

Action pano_teacher(const AgentState& state, const EpisodeSpec& spec, const NodeId& target) {
    const PanoObservation obs = observe_pano(state, spec);
    for (const auto& c : obs.candidates) {
        if (c.node == target) return Action::candidate(c.index);
    }
    throw ExpertError(fmt::format("episode {}: {} is not a candidate at {}", spec.episode_id, target,
                                  state.node));
}

std::vector<Action> generate(const EpisodeSpec& original, ActionSpace space) {
    EpisodeSpec spec = original;
    spec.space = space;
    // the expert is never cut off by the evaluation step budget
    spec.variant.max_steps = std::numeric_limits<int>::max() / 2;
    spec.validate();

    const std::size_t budget = (2 * kHalfTurns + 1) * spec.gt_path.size() + 1;
    std::vector<Action> actions;
    AgentState state = initial_state(spec);
    while (!state.done) {
        if (actions.size() > budget) {
            throw ExpertError(fmt::format("episode {}: expert exceeded {} actions", spec.episode_id, budget));
        }
        const Action action = next_expert_action(state, spec);
        actions.push_back(action);
        state = step(std::move(state), spec, action).state;
    }
    return actions;
}

}  // namespace

Action next_expert_action(const AgentState& state, const EpisodeSpec& spec) {
    const auto target = next_target(state, spec);
    if (!target) return Action::stop();
    if (spec.space == ActionSpace::low) return low_level_teacher(state, spec, *target);
    return pano_teacher(state, spec, *target);
}

std::vector<Action> low_level_expert(const EpisodeSpec& spec) { return generate(spec, ActionSpace::low); }

std::vector<Action> pano_expert(const EpisodeSpec& spec) { return generate(spec, ActionSpace::pano); }

std::vector<Action> expert_actions(const EpisodeSpec& spec) { return generate(spec, spec.space); }

StepStats step_stats(std::span<const EpisodeSpec> episodes, ActionSpace space, const Variant& variant) {
    StepStats stats;
    std::size_t total = 0;
    for (const auto& original : episodes) {
        EpisodeSpec spec = original;
        spec.variant = variant;
        std::vector<Action> actions;
        try {
            actions = generate(spec, space);
        } catch (const Error& e) {
            throw ExpertError(fmt::format("step statistics failed on episode {}: {}", spec.episode_id, e.what()));
        }
        total += actions.size();
        ++stats.histogram[static_cast<int>(actions.size())];
        ++stats.episodes;
    }
    if (stats.episodes) stats.avg_steps = static_cast<double>(total) / static_cast<double>(stats.episodes);
    return stats;
}

}  // namespace vln
