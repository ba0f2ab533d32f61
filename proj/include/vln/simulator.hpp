#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vln/navgraph.hpp"

namespace vln {

enum class ActionSpace { low, pano };

std::string_view to_string(ActionSpace space);
/// Accepts "low" and "pano"; throws SimulationError otherwise.
ActionSpace action_space_from_string(std::string_view text);

/// Rotation applied by a single left/right action.
inline constexpr double kTurnDeg = 30.0;
/// Reorientations at or below this angle are not recorded as adjust steps.
inline constexpr double kAdjustEpsilonDeg = 0.01;
inline constexpr int kDefaultMaxStepsLow = 80;
inline constexpr int kDefaultMaxStepsPano = 20;

/// One entry of either action vocabulary. `adjust` is inserted by the simulator
/// and never chosen by a policy.
struct Action {
    enum class Kind { move, left, right, stop, adjust, candidate };

    Kind kind = Kind::stop;
    int index = -1;  ///< candidate index, only meaningful for Kind::candidate

    static Action move() { return {Kind::move}; }
    static Action left() { return {Kind::left}; }
    static Action right() { return {Kind::right}; }
    static Action stop() { return {Kind::stop}; }
    static Action adjust() { return {Kind::adjust}; }
    static Action candidate(int i) { return {Kind::candidate, i}; }

    bool learnable() const { return kind != Kind::adjust; }
    /// "move", "left", "right", "stop", "adjust" or the decimal candidate index.
    std::string token() const;

    bool operator==(const Action&) const = default;
};

/// Inverse of Action::token(); throws SimulationError for unknown text.
Action action_from_token(std::string_view token);

struct Variant {
    FovConfig fov{};
    bool auto_adjust = true;
    /// 0 selects the per-space default.
    int max_steps = 0;
    /// Half-angle of the cone in which a neighbor can be the move target.
    /// Defaults to half the horizontal FOV.
    std::optional<double> move_half_angle_deg;

    int effective_max_steps(ActionSpace space) const;
    double move_half_angle() const;
    bool operator==(const Variant&) const = default;
};

nlohmann::json to_json(const Variant& variant);
Variant variant_from_json(const nlohmann::json& doc);

/// Renderer-agnostic description of an image. The core never looks inside image_ref.
struct ViewDescriptor {
    enum class Kind { egocentric, panoramic, candidate };

    Kind kind = Kind::egocentric;
    NodeId node;
    double heading_deg = 0.0;
    FovConfig fov{};
    std::optional<std::string> image_ref;

    /// A panorama is three egocentric views at -120, 0 and +120 degrees around
    /// its heading; any other kind expands to itself.
    std::vector<ViewDescriptor> sub_views() const;

    bool operator==(const ViewDescriptor&) const = default;
};

std::string_view to_string(ViewDescriptor::Kind kind);
nlohmann::json to_json(const ViewDescriptor& view);
ViewDescriptor view_from_json(const nlohmann::json& doc);

struct Candidate {
    int index = 0;
    NodeId node;
    double theta_deg = 0.0;  ///< relative heading, (-180, 180], negative = left
    double delta_m = 0.0;    ///< travel distance along the edge
    ViewDescriptor view;
};

struct LowObservation {
    ViewDescriptor view;
    std::vector<Action> allowed;  ///< canonical order: move, left, right, stop
    std::optional<NodeId> center_node;
};

struct PanoObservation {
    ViewDescriptor pano;
    std::vector<Candidate> candidates;  ///< sorted left to right
};

using Observation = std::variant<LowObservation, PanoObservation>;

struct EpisodeSpec {
    std::string episode_id;
    int instruction_index = 0;
    NavGraphPtr graph;
    NodeId start;
    double start_heading_deg = 0.0;
    NodeId goal;
    std::string instruction;
    std::vector<NodeId> gt_path;
    ActionSpace space = ActionSpace::pano;
    Variant variant{};

    /// Throws SimulationError when gt_path does not run start..goal along graph edges.
    void validate() const;
};

struct HistoryEntry {
    ViewDescriptor view;  ///< what the agent saw when the action was taken
    Action action;
};

struct AgentState {
    NodeId node;
    double heading_deg = 0.0;
    double distance_m = 0.0;
    int step = 1;
    std::vector<HistoryEntry> history;
    bool done = false;
    bool stopped = false;  ///< done because the agent chose stop (not a timeout)
    NodeId goal;
};

AgentState initial_state(const EpisodeSpec& spec);

/// Neighbor of `node` closest to the view center when facing `heading_deg`, restricted to
/// |relative angle| <= half_angle_deg. Ties go to the smaller (leftmost) relative angle,
/// then to the smaller node id. Neighbors sharing the agent's xy position are never centered.
std::optional<NodeId> center_node(const NavGraph& graph, const NodeId& node, double heading_deg,
                                  double half_angle_deg);

LowObservation observe_low(const AgentState& state, const EpisodeSpec& spec);
PanoObservation observe_pano(const AgentState& state, const EpisodeSpec& spec);
/// Dispatches on spec.space.
Observation observe(const AgentState& state, const EpisodeSpec& spec);

struct StepResult {
    AgentState state;
    std::optional<Observation> observation;  ///< empty once the episode is done
    bool done = false;
};

StepResult step_low(AgentState state, const EpisodeSpec& spec, const Action& action);
StepResult step_pano(AgentState state, const EpisodeSpec& spec, const Action& action);
/// Dispatches on spec.space.
StepResult step(AgentState state, const EpisodeSpec& spec, const Action& action);

}  // namespace vln
