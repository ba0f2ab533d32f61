#include "vln/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <tuple>

#include <fmt/core.h>

#include "vln/errors.hpp"

namespace vln {

namespace {

constexpr double kTieEpsilonDeg = 1e-9;

ViewDescriptor egocentric_view(const NodeId& node, double heading, const FovConfig& fov,
                               ViewDescriptor::Kind kind = ViewDescriptor::Kind::egocentric) {
    return {kind, node, normalize_heading(heading), fov, std::nullopt};
}

/// wrap_angle, with anything a rounding error away from straight behind reported as
/// exactly +180, so the node just left always sorts last.
double relative_angle(double absolute, double heading) {
    const double rel = wrap_angle(absolute - heading);
    return std::abs(rel) >= 180.0 - kTieEpsilonDeg ? 180.0 : rel;
}

void ensure_running(const AgentState& state) {
    if (state.done) throw SimulationError("episode finished: no further actions accepted");
}

void finish_step(AgentState& state, const EpisodeSpec& spec) {
    ++state.step;
    if (!state.done && state.step > spec.variant.effective_max_steps(spec.space)) {
        state.done = true;
        state.stopped = false;
    }
}

void relocate(AgentState& state, const NavGraph& graph, const NodeId& target) {
    const auto length = graph.edge_length(state.node, target);
    if (!length) {
        throw SimulationError(fmt::format("no edge between {} and {}", state.node, target));
    }
    state.node = target;
    state.distance_m += *length;
}

StepResult finish(AgentState state, const EpisodeSpec& spec) {
    StepResult result;
    result.done = state.done;
    if (!state.done) result.observation = observe(state, spec);
    result.state = std::move(state);
    return result;
}

}  // namespace

std::string_view to_string(ActionSpace space) { return space == ActionSpace::low ? "low" : "pano"; }

ActionSpace action_space_from_string(std::string_view text) {
    if (text == "low") return ActionSpace::low;
    if (text == "pano") return ActionSpace::pano;
    throw SimulationError(fmt::format("unknown action space '{}'", text));
}

std::string Action::token() const {
    switch (kind) {
        case Kind::move: return "move";
        case Kind::left: return "left";
        case Kind::right: return "right";
        case Kind::stop: return "stop";
        case Kind::adjust: return "adjust";
        case Kind::candidate: return std::to_string(index);
    }
    return "stop";
}

Action action_from_token(std::string_view token) {
    if (token == "move") return Action::move();
    if (token == "left") return Action::left();
    if (token == "right") return Action::right();
    if (token == "stop") return Action::stop();
    if (token == "adjust") return Action::adjust();
    int value = -1;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec == std::errc() && ptr == token.data() + token.size() && value >= 0) {
        return Action::candidate(value);
    }
    throw SimulationError(fmt::format("unknown action token '{}'", token));
}

int Variant::effective_max_steps(ActionSpace space) const {
    if (max_steps > 0) return max_steps;
    return space == ActionSpace::low ? kDefaultMaxStepsLow : kDefaultMaxStepsPano;
}

double Variant::move_half_angle() const {
    if (move_half_angle_deg) return *move_half_angle_deg;
    return hfov_from_vfov(fov) / 2.0;
}

nlohmann::json to_json(const Variant& v) {
    nlohmann::json doc = {{"vfov_deg", v.fov.vfov_deg},
                          {"image_width", v.fov.image_width},
                          {"image_height", v.fov.image_height},
                          {"auto_adjust", v.auto_adjust},
                          {"max_steps", v.max_steps}};
    if (v.move_half_angle_deg) doc["move_half_angle_deg"] = *v.move_half_angle_deg;
    return doc;
}

Variant variant_from_json(const nlohmann::json& doc) {
    Variant v;
    v.fov.vfov_deg = doc.value("vfov_deg", v.fov.vfov_deg);
    v.fov.image_width = doc.value("image_width", v.fov.image_width);
    v.fov.image_height = doc.value("image_height", v.fov.image_height);
    v.auto_adjust = doc.value("auto_adjust", v.auto_adjust);
    v.max_steps = doc.value("max_steps", v.max_steps);
    if (doc.contains("move_half_angle_deg") && !doc["move_half_angle_deg"].is_null()) {
        v.move_half_angle_deg = doc["move_half_angle_deg"].get<double>();
    }
    v.fov.validate();
    return v;
}

std::vector<ViewDescriptor> ViewDescriptor::sub_views() const {
    if (kind != Kind::panoramic) return {*this};
    std::vector<ViewDescriptor> out;
    for (const double offset : {-120.0, 0.0, 120.0}) {
        out.push_back(egocentric_view(node, heading_deg + offset, fov));
        out.back().image_ref = image_ref;
    }
    return out;
}

std::string_view to_string(ViewDescriptor::Kind kind) {
    switch (kind) {
        case ViewDescriptor::Kind::egocentric: return "egocentric";
        case ViewDescriptor::Kind::panoramic: return "panoramic";
        case ViewDescriptor::Kind::candidate: return "candidate";
    }
    return "egocentric";
}

nlohmann::json to_json(const ViewDescriptor& view) {
    return {{"kind", to_string(view.kind)},
            {"node", view.node},
            {"heading_deg", view.heading_deg},
            {"vfov_deg", view.fov.vfov_deg},
            {"image_width", view.fov.image_width},
            {"image_height", view.fov.image_height},
            {"image_ref", view.image_ref ? nlohmann::json(*view.image_ref) : nlohmann::json(nullptr)}};
}

ViewDescriptor view_from_json(const nlohmann::json& doc) {
    ViewDescriptor view;
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "egocentric") {
        view.kind = ViewDescriptor::Kind::egocentric;
    } else if (kind == "panoramic") {
        view.kind = ViewDescriptor::Kind::panoramic;
    } else if (kind == "candidate") {
        view.kind = ViewDescriptor::Kind::candidate;
    } else {
        throw SimulationError(fmt::format("unknown view kind '{}'", kind));
    }
    view.node = doc.at("node").get<std::string>();
    view.heading_deg = doc.at("heading_deg").get<double>();
    view.fov = {doc.at("vfov_deg").get<double>(), doc.at("image_width").get<int>(),
                doc.at("image_height").get<int>()};
    if (doc.contains("image_ref") && !doc["image_ref"].is_null()) {
        view.image_ref = doc["image_ref"].get<std::string>();
    }
    return view;
}

void EpisodeSpec::validate() const {
    if (!graph) throw SimulationError(fmt::format("episode {} has no graph", episode_id));
    if (!graph->contains(start) || !graph->contains(goal)) {
        throw SimulationError(fmt::format("episode {}: start or goal not in scan {}", episode_id,
                                          graph->scan_id()));
    }
    if (gt_path.empty() || gt_path.front() != start || gt_path.back() != goal) {
        throw SimulationError(
            fmt::format("episode {}: ground-truth path must run from start to goal", episode_id));
    }
    for (std::size_t i = 0; i + 1 < gt_path.size(); ++i) {
        if (!graph->contains(gt_path[i + 1]) || !graph->has_edge(gt_path[i], gt_path[i + 1])) {
            throw SimulationError(fmt::format("episode {}: ({}, {}) is not a graph edge", episode_id,
                                              gt_path[i], gt_path[i + 1]));
        }
    }
    variant.fov.validate();
}

AgentState initial_state(const EpisodeSpec& spec) {
    AgentState state;
    state.node = spec.start;
    state.heading_deg = normalize_heading(spec.start_heading_deg);
    state.goal = spec.goal;
    return state;
}

std::optional<NodeId> center_node(const NavGraph& graph, const NodeId& node, double heading_deg,
                                  double half_angle_deg) {
    const std::size_t here = graph.index_of(node);
    const Position3D& origin = graph.node(here).position;

    std::optional<std::size_t> best;
    double best_rel = 0.0;
    for (const auto& n : graph.neighbors(here)) {
        const Position3D& target = graph.node(n.index).position;
        if (horizontal_distance(origin, target) == 0.0) continue;
        const double rel = relative_angle(bearing(origin, target), heading_deg);
        if (std::abs(rel) > half_angle_deg + kTieEpsilonDeg) continue;
        if (!best) {
            best = n.index;
            best_rel = rel;
            continue;
        }
        const double diff = std::abs(rel) - std::abs(best_rel);
        // neighbors arrive in id order, so an exact tie keeps the earlier (smaller) id
        if (diff < -kTieEpsilonDeg || (std::abs(diff) <= kTieEpsilonDeg && rel < best_rel - kTieEpsilonDeg)) {
            best = n.index;
            best_rel = rel;
        }
    }
    if (!best) return std::nullopt;
    return graph.id(*best);
}

LowObservation observe_low(const AgentState& state, const EpisodeSpec& spec) {
    ensure_running(state);
    LowObservation obs;
    obs.view = egocentric_view(state.node, state.heading_deg, spec.variant.fov);
    obs.center_node =
        center_node(*spec.graph, state.node, state.heading_deg, spec.variant.move_half_angle());
    if (obs.center_node) obs.allowed.push_back(Action::move());
    obs.allowed.push_back(Action::left());
    obs.allowed.push_back(Action::right());
    obs.allowed.push_back(Action::stop());
    return obs;
}

PanoObservation observe_pano(const AgentState& state, const EpisodeSpec& spec) {
    ensure_running(state);
    const NavGraph& graph = *spec.graph;
    const std::size_t here = graph.index_of(state.node);
    const Position3D& origin = graph.node(here).position;

    PanoObservation obs;
    obs.pano = egocentric_view(state.node, state.heading_deg, spec.variant.fov,
                               ViewDescriptor::Kind::panoramic);
    for (const auto& n : graph.neighbors(here)) {
        const Position3D& target = graph.node(n.index).position;
        Candidate c;
        c.node = graph.id(n.index);
        c.delta_m = n.length;
        // a neighbor straight above or below has no horizontal direction; treat it as ahead
        const bool vertical = horizontal_distance(origin, target) == 0.0;
        const double absolute = vertical ? state.heading_deg : bearing(origin, target);
        c.theta_deg = vertical ? 0.0 : relative_angle(absolute, state.heading_deg);
        c.view = egocentric_view(state.node, absolute, spec.variant.fov, ViewDescriptor::Kind::candidate);
        obs.candidates.push_back(std::move(c));
    }
    // neighbor order is id order, so stable_sort keeps ids ascending within exact ties
    std::stable_sort(obs.candidates.begin(), obs.candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                         return std::tie(a.theta_deg, a.delta_m) < std::tie(b.theta_deg, b.delta_m);
                     });
    for (std::size_t i = 0; i < obs.candidates.size(); ++i) {
        obs.candidates[i].index = static_cast<int>(i);
    }
    return obs;
}

Observation observe(const AgentState& state, const EpisodeSpec& spec) {
    if (spec.space == ActionSpace::low) return observe_low(state, spec);
    return observe_pano(state, spec);
}

StepResult step_low(AgentState state, const EpisodeSpec& spec, const Action& action) {
    ensure_running(state);
    const LowObservation obs = observe_low(state, spec);
    if (std::find(obs.allowed.begin(), obs.allowed.end(), action) == obs.allowed.end()) {
        if (action.kind == Action::Kind::move) {
            throw SimulationError(fmt::format("move not allowed at {}: no navigable node in view", state.node));
        }
        throw SimulationError(fmt::format("action '{}' is not a low-level action", action.token()));
    }

    switch (action.kind) {
        case Action::Kind::left:
        case Action::Kind::right: {
            state.history.push_back({obs.view, action});
            const double turn = action.kind == Action::Kind::left ? -kTurnDeg : kTurnDeg;
            state.heading_deg = normalize_heading(state.heading_deg + turn);
            break;
        }
        case Action::Kind::move: {
            const NavGraph& graph = *spec.graph;
            const NodeId target = *obs.center_node;
            ViewDescriptor move_view = obs.view;
            if (spec.variant.auto_adjust) {
                const double target_bearing = graph.bearing(state.node, target);
                if (std::abs(wrap_angle(target_bearing - state.heading_deg)) > kAdjustEpsilonDeg) {
                    state.history.push_back({obs.view, Action::adjust()});
                    state.heading_deg = target_bearing;
                    move_view = egocentric_view(state.node, state.heading_deg, spec.variant.fov);
                }
            }
            state.history.push_back({move_view, action});
            relocate(state, graph, target);
            break;
        }
        case Action::Kind::stop:
            state.history.push_back({obs.view, action});
            state.done = true;
            state.stopped = true;
            break;
        default:
            throw SimulationError(fmt::format("action '{}' is not a low-level action", action.token()));
    }
    finish_step(state, spec);
    return finish(std::move(state), spec);
}

StepResult step_pano(AgentState state, const EpisodeSpec& spec, const Action& action) {
    ensure_running(state);
    const PanoObservation obs = observe_pano(state, spec);
    if (action.kind == Action::Kind::stop) {
        state.history.push_back({obs.pano, action});
        state.done = true;
        state.stopped = true;
    } else if (action.kind == Action::Kind::candidate) {
        if (action.index < 0 || action.index >= static_cast<int>(obs.candidates.size())) {
            throw SimulationError(fmt::format("invalid candidate {} (K={})", action.index,
                                              obs.candidates.size()));
        }
        const Candidate& chosen = obs.candidates[static_cast<std::size_t>(action.index)];
        state.history.push_back({obs.pano, action});
        state.heading_deg = chosen.view.heading_deg;
        relocate(state, *spec.graph, chosen.node);
    } else {
        throw SimulationError(fmt::format("action '{}' is not a panoramic action", action.token()));
    }
    finish_step(state, spec);
    return finish(std::move(state), spec);
}

StepResult step(AgentState state, const EpisodeSpec& spec, const Action& action) {
    if (spec.space == ActionSpace::low) return step_low(std::move(state), spec, action);
    return step_pano(std::move(state), spec, action);
}

}  // namespace vln
