#pragma once

#include <map>
#include <span>
#include <vector>

#include "vln/runner.hpp"
#include "vln/simulator.hpp"

namespace vln {

/// Teacher action for the current state.
///
/// Progress along gt_path is read from the number of relocations in the history. If the
/// agent has left the path, the teacher heads for the next node of the shortest path to
/// the goal instead. Low-level: move when the target is the view's center node, otherwise
/// the first turn of the shortest left/right sequence that centers it (right wins ties).
/// Throws ExpertError when no heading on the 30 degree grid centers the target.
Action next_expert_action(const AgentState& state, const EpisodeSpec& spec);

/// Learnable expert actions for the whole ground-truth path, ending in stop.
/// Simulator-inserted adjusts are not part of the list.
std::vector<Action> low_level_expert(const EpisodeSpec& spec);
std::vector<Action> pano_expert(const EpisodeSpec& spec);
/// Dispatches on spec.space.
std::vector<Action> expert_actions(const EpisodeSpec& spec);

class ExpertPolicy : public Policy {
   public:
    Action decide(const DecisionContext& context) override {
        return next_expert_action(context.state(), context.spec());
    }
};

struct StepStats {
    std::size_t episodes = 0;
    double avg_steps = 0.0;
    std::map<int, std::size_t> histogram;  ///< learnable actions per episode -> episode count
};

/// Mean learnable expert action count per episode. Each spec is re-run in `space` with
/// `variant`; errors name the failing episode.
StepStats step_stats(std::span<const EpisodeSpec> episodes, ActionSpace space, const Variant& variant);

}  // namespace vln
