#include "vln/navgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <queue>
#include <set>
#include <shared_mutex>

#include <fmt/core.h>

#include "vln/errors.hpp"

namespace vln {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;
constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(const Position3D& p) {
    return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

}  // namespace

double euclidean_distance(const Position3D& a, const Position3D& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) +
                     (a.z - b.z) * (a.z - b.z));
}

double horizontal_distance(const Position3D& a, const Position3D& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

void FovConfig::validate() const {
    if (!(vfov_deg > 0.0 && vfov_deg < 180.0)) {
        throw GraphError(fmt::format("vfov must be in (0, 180), got {}", vfov_deg));
    }
    if (image_width <= 0 || image_height <= 0) {
        throw GraphError(
            fmt::format("image size must be positive, got {}x{}", image_width, image_height));
    }
}

double wrap_angle(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) {
        r += 360.0;
    } else if (r > 180.0) {
        r -= 360.0;
    }
    return r;
}

double normalize_heading(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    // -tiny + 360 rounds to 360
    if (r >= 360.0) r -= 360.0;
    return r;
}

double hfov_from_vfov(const FovConfig& cfg) {
    cfg.validate();
    const double aspect = static_cast<double>(cfg.image_width) / cfg.image_height;
    return 2.0 * std::atan(aspect * std::tan(cfg.vfov_deg * kDegToRad / 2.0)) * kRadToDeg;
}

double bearing(const Position3D& from, const Position3D& to) {
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    if (dx == 0.0 && dy == 0.0) {
        throw GraphError("coincident horizontal position");
    }
    return normalize_heading(std::atan2(dx, dy) * kRadToDeg);
}

struct NavGraph::Memo {
    std::shared_mutex mutex;
    std::vector<std::shared_ptr<const std::vector<double>>> tables;
};

NavGraph::NavGraph(std::string scan_id, std::vector<Node> nodes,
                   const std::vector<std::pair<NodeId, NodeId>>& edges)
    : scan_id_(std::move(scan_id)), nodes_(std::move(nodes)), memo_(std::make_unique<Memo>()) {
    std::sort(nodes_.begin(), nodes_.end(),
              [](const Node& a, const Node& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!finite(nodes_[i].position)) {
            throw GraphError(fmt::format("node {} has a non-finite position", nodes_[i].id));
        }
        if (i > 0 && nodes_[i].id == nodes_[i - 1].id) {
            throw GraphError(fmt::format("duplicate node id {}", nodes_[i].id));
        }
    }

    adjacency_.resize(nodes_.size());
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [a, b] : edges) {
        const auto ia = find(a);
        const auto ib = find(b);
        if (!ia || !ib) {
            throw GraphError(fmt::format("edge ({}, {}) references an unknown node", a, b));
        }
        if (*ia == *ib) {
            throw GraphError(fmt::format("self-loop on node {}", a));
        }
        if (!seen.emplace(std::min(*ia, *ib), std::max(*ia, *ib)).second) continue;
        const double length = euclidean_distance(nodes_[*ia].position, nodes_[*ib].position);
        if (!(length > 0.0)) {
            throw GraphError(fmt::format("zero-length edge ({}, {})", a, b));
        }
        adjacency_[*ia].push_back({*ib, length});
        adjacency_[*ib].push_back({*ia, length});
        ++edge_count_;
    }
    for (auto& list : adjacency_) {
        std::sort(list.begin(), list.end(),
                  [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    }
    memo_->tables.resize(nodes_.size());
}

NavGraph::~NavGraph() = default;
NavGraph::NavGraph(NavGraph&&) noexcept = default;
NavGraph& NavGraph::operator=(NavGraph&&) noexcept = default;

std::optional<std::size_t> NavGraph::find(const NodeId& id) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                     [](const Node& n, const NodeId& key) { return n.id < key; });
    if (it == nodes_.end() || it->id != id) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
}

std::size_t NavGraph::index_of(const NodeId& id) const {
    if (auto i = find(id)) return *i;
    throw GraphError(fmt::format("unknown node {} in scan {}", id, scan_id_));
}

std::vector<NodeId> NavGraph::neighbor_ids(const NodeId& id) const {
    std::vector<NodeId> out;
    for (const auto& n : neighbors(index_of(id))) out.push_back(nodes_[n.index].id);
    return out;
}

std::optional<double> NavGraph::edge_length(std::size_t a, std::size_t b) const {
    const auto& list = adjacency_.at(a);
    const auto it = std::lower_bound(list.begin(), list.end(), b,
                                     [](const Neighbor& n, std::size_t key) { return n.index < key; });
    if (it != list.end() && it->index == b) return it->length;
    return std::nullopt;
}

std::optional<double> NavGraph::edge_length(const NodeId& a, const NodeId& b) const {
    return edge_length(index_of(a), index_of(b));
}

std::vector<std::pair<NodeId, NodeId>> NavGraph::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(edge_count_);
    for (std::size_t i = 0; i < adjacency_.size(); ++i) {
        for (const auto& n : adjacency_[i]) {
            if (i < n.index) out.emplace_back(nodes_[i].id, nodes_[n.index].id);
        }
    }
    return out;
}

std::shared_ptr<const std::vector<double>> NavGraph::distances_from(std::size_t source) const {
    if (source >= nodes_.size()) {
        throw GraphError(fmt::format("node index {} out of range", source));
    }
    {
        std::shared_lock lock(memo_->mutex);
        if (auto table = memo_->tables[source]) return table;
    }

    auto dist = std::make_shared<std::vector<double>>(nodes_.size(), kInf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
    (*dist)[source] = 0.0;
    frontier.emplace(0.0, source);
    while (!frontier.empty()) {
        const auto [d, u] = frontier.top();
        frontier.pop();
        if (d > (*dist)[u]) continue;
        for (const auto& n : adjacency_[u]) {
            const double candidate = d + n.length;
            if (candidate < (*dist)[n.index]) {
                (*dist)[n.index] = candidate;
                frontier.emplace(candidate, n.index);
            }
        }
    }

    std::unique_lock lock(memo_->mutex);
    auto& slot = memo_->tables[source];
    if (!slot) slot = std::move(dist);
    return slot;
}

std::optional<double> NavGraph::geodesic(std::size_t a, std::size_t b) const {
    if (b >= nodes_.size()) throw GraphError(fmt::format("node index {} out of range", b));
    // canonical source keeps geodesic(a, b) == geodesic(b, a) bit for bit
    const double d = (*distances_from(std::min(a, b)))[std::max(a, b)];
    if (std::isinf(d)) return std::nullopt;
    return d;
}

std::optional<double> NavGraph::geodesic(const NodeId& a, const NodeId& b) const {
    return geodesic(index_of(a), index_of(b));
}

std::optional<std::vector<NodeId>> NavGraph::shortest_path(const NodeId& a, const NodeId& b) const {
    const std::size_t start = index_of(a);
    const std::size_t goal = index_of(b);
    const auto to_goal = distances_from(goal);
    if (std::isinf((*to_goal)[start])) return std::nullopt;

    std::vector<NodeId> path{nodes_[start].id};
    std::size_t current = start;
    while (current != goal) {
        const double here = (*to_goal)[current];
        const double tol = 1e-9 * std::max(1.0, here);
        std::optional<std::size_t> next;
        // neighbors are sorted by index, so the first tight edge is the lexicographic choice
        for (const auto& n : adjacency_[current]) {
            const double there = (*to_goal)[n.index];
            if (there < here && std::abs(n.length + there - here) <= tol) {
                next = n.index;
                break;
            }
        }
        if (!next) {
            throw GraphError(fmt::format("shortest path reconstruction stalled at {}", nodes_[current].id));
        }
        current = *next;
        path.push_back(nodes_[current].id);
    }
    return path;
}

double NavGraph::bearing(const NodeId& from, const NodeId& to) const {
    return vln::bearing(position(from), position(to));
}

bool NavGraph::operator==(const NavGraph& other) const {
    if (scan_id_ != other.scan_id_ || nodes_.size() != other.nodes_.size()) return false;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id != other.nodes_[i].id || !(nodes_[i].position == other.nodes_[i].position)) {
            return false;
        }
    }
    return edges() == other.edges();
}

NavGraph load_connectivity(std::string scan_id, const nlohmann::json& doc) {
    if (!doc.is_array()) {
        throw GraphError(fmt::format("connectivity for {} is not an array", scan_id));
    }
    const std::size_t count = doc.size();
    std::vector<NodeId> ids(count);
    std::vector<bool> included(count);
    std::vector<NavGraph::Node> nodes;
    try {
        for (std::size_t i = 0; i < count; ++i) {
            const auto& entry = doc[i];
            ids[i] = entry.at("image_id").get<std::string>();
            included[i] = entry.at("included").get<bool>();
            const auto& pose = entry.at("pose");
            if (!pose.is_array() || pose.size() != 16) {
                throw GraphError(fmt::format("{}: entry {} pose must have 16 values", scan_id, ids[i]));
            }
            if (included[i]) {
                nodes.push_back({ids[i], {pose[3].get<double>(), pose[7].get<double>(),
                                          pose[11].get<double>()}});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw GraphError(fmt::format("malformed connectivity document for {}: {}", scan_id, e.what()));
    }

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& adjacency = doc[i].at("unobstructed");
        if (!adjacency.is_array() || adjacency.size() != count) {
            throw GraphError(fmt::format("{}: entry {} adjacency length {} != entry count {}", scan_id,
                                         ids[i], adjacency.is_array() ? adjacency.size() : 0, count));
        }
        if (!included[i]) continue;
        for (std::size_t j = 0; j < count; ++j) {
            if (j == i || !included[j]) continue;
            if (adjacency[j].get<bool>()) {
                edges.emplace_back(std::min(ids[i], ids[j]), std::max(ids[i], ids[j]));
            }
        }
    }
    return NavGraph(std::move(scan_id), std::move(nodes), edges);
}

NavGraph load_connectivity_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw GraphError(fmt::format("cannot open {}", path.string()));
    std::string scan = path.stem().string();
    constexpr std::string_view suffix = "_connectivity";
    if (scan.size() > suffix.size() && scan.ends_with(suffix)) {
        scan.resize(scan.size() - suffix.size());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw GraphError(fmt::format("malformed connectivity document {}: {}", path.string(), e.what()));
    }
    return load_connectivity(std::move(scan), doc);
}

nlohmann::json to_json(const NavGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes()) {
        nodes.push_back({{"id", n.id}, {"x", n.position.x}, {"y", n.position.y}, {"z", n.position.z}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : graph.edges()) edges.push_back({a, b});
    return {{"format_version", NavGraph::kFormatVersion},
            {"scan_id", graph.scan_id()},
            {"nodes", std::move(nodes)},
            {"edges", std::move(edges)}};
}

NavGraph navgraph_from_json(const nlohmann::json& doc) {
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != NavGraph::kFormatVersion) {
            throw GraphError(fmt::format("unsupported graph format_version {}", version));
        }
        std::vector<NavGraph::Node> nodes;
        for (const auto& n : doc.at("nodes")) {
            nodes.push_back({n.at("id").get<std::string>(),
                             {n.at("x").get<double>(), n.at("y").get<double>(), n.at("z").get<double>()}});
        }
        std::vector<std::pair<NodeId, NodeId>> edges;
        for (const auto& e : doc.at("edges")) {
            edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
        }
        return NavGraph(doc.at("scan_id").get<std::string>(), std::move(nodes), edges);
    } catch (const nlohmann::json::exception& e) {
        throw GraphError(fmt::format("malformed graph document: {}", e.what()));
    }
}

}  // namespace vln
