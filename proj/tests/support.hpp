#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "vln/data.hpp"
#include "vln/simulator.hpp"

namespace vln {

/// gtest value printer, keeps parametrized test names readable.
inline void PrintTo(ActionSpace space, std::ostream* os) { *os << to_string(space); }

}  // namespace vln

namespace vln::fx {

inline NavGraphPtr graph(std::initializer_list<NavGraph::Node> nodes,
                         std::initializer_list<std::pair<NodeId, NodeId>> edges, std::string scan = "test") {
    return std::make_shared<const NavGraph>(std::move(scan), std::vector<NavGraph::Node>(nodes),
                                            std::vector<std::pair<NodeId, NodeId>>(edges));
}

inline EpisodeSpec spec(NavGraphPtr g, std::vector<NodeId> path, double heading, ActionSpace space,
                        Variant variant = {}) {
    EpisodeSpec s;
    s.episode_id = "ep";
    s.graph = std::move(g);
    s.start = path.front();
    s.goal = path.back();
    s.gt_path = std::move(path);
    s.start_heading_deg = heading;
    s.instruction = "walk";
    s.space = space;
    s.variant = variant;
    return s;
}

/// Point at `dist` meters along compass bearing `deg` from the origin.
Position3D polar(double deg, double dist, double z = 0.0);

/// Star: hub "H" at the origin with one spoke per bearing, named "s0", "s1", ... in order.
NavGraphPtr star(std::initializer_list<double> bearings, double dist = 2.0);

/// Small synthetic world used across suites.
SyntheticWorld small_world(std::uint64_t seed, int nodes = 60, int episodes = 50);

}  // namespace vln::fx
