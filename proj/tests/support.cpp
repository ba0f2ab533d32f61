#include "support.hpp"

#include <cmath>
#include <numbers>

namespace vln::fx {

Position3D polar(double deg, double dist, double z) {
    const double rad = deg * std::numbers::pi / 180.0;
    return {dist * std::sin(rad), dist * std::cos(rad), z};
}

NavGraphPtr star(std::initializer_list<double> bearings, double dist) {
    std::vector<NavGraph::Node> nodes{{"H", {0, 0, 0}}};
    std::vector<std::pair<NodeId, NodeId>> edges;
    int i = 0;
    for (const double b : bearings) {
        const NodeId id = "s" + std::to_string(i++);
        nodes.push_back({id, polar(b, dist)});
        edges.emplace_back("H", id);
    }
    return std::make_shared<const NavGraph>("star", std::move(nodes), std::move(edges));
}

SyntheticWorld small_world(std::uint64_t seed, int nodes, int episodes) {
    SyntheticWorldParams p;
    p.seed = seed;
    p.node_count = nodes;
    p.episode_count = episodes;
    return gen_synthetic(p);
}

}  // namespace vln::fx
