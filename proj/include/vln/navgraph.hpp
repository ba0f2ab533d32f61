#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace vln {

using NodeId = std::string;

/// Viewpoint location in meters; z is vertical.
struct Position3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Position3D&) const = default;
};

double euclidean_distance(const Position3D& a, const Position3D& b);
double horizontal_distance(const Position3D& a, const Position3D& b);

struct FovConfig {
    double vfov_deg = 105.0;
    int image_width = 640;
    int image_height = 480;

    /// Throws GraphError unless 0 < vfov < 180 and both image sides are positive.
    void validate() const;
    bool operator==(const FovConfig&) const = default;
};

/// Maps any finite angle into (-180, 180]. Positive means clockwise (to the right).
double wrap_angle(double deg);

/// Maps any finite angle into [0, 360).
double normalize_heading(double deg);

/// Horizontal field of view implied by the vertical FOV and the image aspect ratio.
double hfov_from_vfov(const FovConfig& cfg);

/// Compass bearing in [0, 360): 0 points along +y, angles grow clockwise. z is ignored.
/// Throws GraphError("coincident horizontal position") when the xy displacement is zero.
double bearing(const Position3D& from, const Position3D& to);

/// Immutable undirected viewpoint graph with Euclidean edge weights.
///
/// Nodes are stored sorted by id, so node indices follow lexicographic id order
/// and every deterministic tie-break on indices is also a tie-break on ids.
/// Single-source distance tables are computed lazily and memoized; the memo is
/// internally synchronized so one graph can serve many concurrent episodes.
class NavGraph {
   public:
    static constexpr int kFormatVersion = 1;

    struct Node {
        NodeId id;
        Position3D position;
    };

    struct Neighbor {
        std::size_t index;
        double length;
    };

    NavGraph(std::string scan_id, std::vector<Node> nodes,
             const std::vector<std::pair<NodeId, NodeId>>& edges);
    ~NavGraph();
    NavGraph(NavGraph&&) noexcept;
    NavGraph& operator=(NavGraph&&) noexcept;
    NavGraph(const NavGraph&) = delete;
    NavGraph& operator=(const NavGraph&) = delete;

    const std::string& scan_id() const { return scan_id_; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t edge_count() const { return edge_count_; }

    const Node& node(std::size_t index) const { return nodes_.at(index); }
    const NodeId& id(std::size_t index) const { return nodes_.at(index).id; }
    const std::vector<Node>& nodes() const { return nodes_; }

    std::optional<std::size_t> find(const NodeId& id) const;
    /// Throws GraphError for unknown ids.
    std::size_t index_of(const NodeId& id) const;
    bool contains(const NodeId& id) const { return find(id).has_value(); }
    const Position3D& position(const NodeId& id) const { return nodes_[index_of(id)].position; }

    /// Sorted by neighbor index.
    std::span<const Neighbor> neighbors(std::size_t index) const { return adjacency_.at(index); }
    std::vector<NodeId> neighbor_ids(const NodeId& id) const;

    bool has_edge(const NodeId& a, const NodeId& b) const { return edge_length(a, b).has_value(); }
    std::optional<double> edge_length(const NodeId& a, const NodeId& b) const;
    std::optional<double> edge_length(std::size_t a, std::size_t b) const;

    /// Every edge once, as (smaller id, larger id), sorted.
    std::vector<std::pair<NodeId, NodeId>> edges() const;

    /// Shortest walkable distance; nullopt when b cannot be reached from a.
    std::optional<double> geodesic(const NodeId& a, const NodeId& b) const;
    std::optional<double> geodesic(std::size_t a, std::size_t b) const;

    /// Distance table from one source (infinity marks unreachable nodes). Memoized.
    std::shared_ptr<const std::vector<double>> distances_from(std::size_t source) const;

    /// Shortest path a..b. Among equally short paths the lexicographically smallest
    /// node sequence wins. nullopt when unreachable.
    std::optional<std::vector<NodeId>> shortest_path(const NodeId& a, const NodeId& b) const;

    double bearing(const NodeId& from, const NodeId& to) const;

    /// Structural equality (scan id, nodes, edges); the memo is ignored.
    bool operator==(const NavGraph& other) const;

   private:
    struct Memo;

    std::string scan_id_;
    std::vector<Node> nodes_;
    std::vector<std::vector<Neighbor>> adjacency_;
    std::size_t edge_count_ = 0;
    std::unique_ptr<Memo> memo_;
};

using NavGraphPtr = std::shared_ptr<const NavGraph>;

/// Builds a graph from one Matterport-style connectivity document: an array of
/// entries {image_id, pose[16], included, unobstructed[]}. Only included entries
/// survive; adjacency is symmetrized.
NavGraph load_connectivity(std::string scan_id, const nlohmann::json& doc);

/// Reads `<scan>_connectivity.json`; the scan id is taken from the file name.
NavGraph load_connectivity_file(const std::filesystem::path& path);

nlohmann::json to_json(const NavGraph& graph);
NavGraph navgraph_from_json(const nlohmann::json& doc);

}  // namespace vln
