#pragma once

// Brute-force references that share no code with the library beyond the graph container.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vln/navgraph.hpp"
#include "vln/simulator.hpp"

namespace vln::oracle {

using Matrix = std::vector<std::vector<double>>;

double edge(const NavGraph& g, std::size_t a, std::size_t b);

/// All-pairs shortest paths; +inf when unreachable.
Matrix floyd_warshall(const NavGraph& g);

/// Shortest simple path with at most `max_hops` edges, by exhaustive DFS.
std::optional<double> enumerate_geodesic(const NavGraph& g, std::size_t a, std::size_t b, int max_hops);

/// Lexicographically smallest node sequence among all simple paths of minimal length.
std::vector<NodeId> lexicographic_shortest_path(const NavGraph& g, const NodeId& a, const NodeId& b);

double path_length(const NavGraph& g, const std::vector<NodeId>& path);

double spl(bool success, double reference, double travelled);

/// CLS evaluated straight from its closed form over an all-pairs matrix.
double cls(const NavGraph& g, const Matrix& d, const std::vector<NodeId>& pred, const std::vector<NodeId>& ref);

/// Macro F1 from an explicit confusion matrix with per-class precision and recall.
double macro_f1(const std::vector<std::pair<std::string, std::string>>& pairs);

/// Relative angle in (-180, 180] from raw coordinates.
double relative(const NavGraph& g, const NodeId& from, const NodeId& to, double heading);

std::optional<NodeId> center(const NavGraph& g, const NodeId& node, double heading, double half_angle);

/// Low-level teacher by trying all twelve grid headings at every path node.
std::vector<std::string> grid_expert(const EpisodeSpec& spec);

/// Panoramic teacher by sorting neighbors with an explicit (theta, delta, id) comparator.
std::vector<std::string> sorted_expert(const EpisodeSpec& spec);

}  // namespace vln::oracle
