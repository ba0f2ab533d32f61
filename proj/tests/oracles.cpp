#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>
#include <tuple>

namespace vln::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dist3(const Position3D& a, const Position3D& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

double compass(const Position3D& from, const Position3D& to) {
    double deg = std::atan2(to.x - from.x, to.y - from.y) * 180.0 / std::numbers::pi;
    if (deg < 0) deg += 360.0;
    return deg;
}

double wrap(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    if (r > 180.0) r -= 360.0;
    return r;
}

Matrix adjacency(const NavGraph& g) {
    const auto n = g.size();
    Matrix w(n, std::vector<double>(n, kInf));
    for (const auto& [a, b] : g.edges()) {
        const auto i = g.index_of(a);
        const auto j = g.index_of(b);
        w[i][j] = w[j][i] = dist3(g.node(i).position, g.node(j).position);
    }
    return w;
}

}  // namespace

double edge(const NavGraph& g, std::size_t a, std::size_t b) {
    return adjacency(g)[a][b];
}

Matrix floyd_warshall(const NavGraph& g) {
    auto d = adjacency(g);
    const auto n = g.size();
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
    return d;
}

std::optional<double> enumerate_geodesic(const NavGraph& g, std::size_t a, std::size_t b, int max_hops) {
    const auto w = adjacency(g);
    std::vector<bool> seen(g.size(), false);
    double best = kInf;
    std::function<void(std::size_t, double, int)> dfs = [&](std::size_t v, double len, int hops) {
        if (v == b) {
            best = std::min(best, len);
            return;
        }
        if (hops == max_hops) return;
        for (std::size_t u = 0; u < g.size(); ++u) {
            if (seen[u] || w[v][u] == kInf) continue;
            seen[u] = true;
            dfs(u, len + w[v][u], hops + 1);
            seen[u] = false;
        }
    };
    seen[a] = true;
    dfs(a, 0.0, 0);
    if (best == kInf) return std::nullopt;
    return best;
}

std::vector<NodeId> lexicographic_shortest_path(const NavGraph& g, const NodeId& a, const NodeId& b) {
    const auto w = adjacency(g);
    const auto d = floyd_warshall(g);
    const auto s = g.index_of(a);
    const auto t = g.index_of(b);
    const double target = d[s][t];
    const double tol = 1e-9 * std::max(1.0, target);
    std::vector<std::vector<NodeId>> found;
    std::vector<NodeId> current{a};
    std::vector<bool> seen(g.size(), false);
    std::function<void(std::size_t, double)> dfs = [&](std::size_t v, double len) {
        if (len > target + tol) return;
        if (v == t) {
            found.push_back(current);
            return;
        }
        for (std::size_t u = 0; u < g.size(); ++u) {
            if (seen[u] || w[v][u] == kInf) continue;
            seen[u] = true;
            current.push_back(g.id(u));
            dfs(u, len + w[v][u]);
            current.pop_back();
            seen[u] = false;
        }
    };
    seen[s] = true;
    dfs(s, 0.0);
    if (found.empty()) throw std::runtime_error("unreachable");
    return *std::min_element(found.begin(), found.end());
}

double path_length(const NavGraph& g, const std::vector<NodeId>& path) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) total += dist3(g.position(path[i]), g.position(path[i + 1]));
    return total;
}

double spl(bool success, double reference, double travelled) {
    if (!success) return 0.0;
    if (reference == 0.0 && travelled == 0.0) return 1.0;
    return reference / std::max(travelled, reference);
}

double cls(const NavGraph& g, const Matrix& d, const std::vector<NodeId>& pred, const std::vector<NodeId>& ref) {
    double pc = 0.0;
    for (const auto& r : ref) {
        double nearest = kInf;
        for (const auto& p : pred) nearest = std::min(nearest, d[g.index_of(r)][g.index_of(p)]);
        pc += std::exp(-nearest / 3.0);
    }
    pc /= static_cast<double>(ref.size());
    const double epl = pc * path_length(g, ref);
    const double pl = path_length(g, pred);
    const double ls = (epl == 0.0 && pl == 0.0) ? 1.0 : epl / (epl + std::fabs(epl - pl));
    return pc * ls;
}

double macro_f1(const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::set<std::string> labels;
    for (const auto& [gold, guess] : pairs) {
        labels.insert(gold);
        labels.insert(guess);
    }
    const std::vector<std::string> order(labels.begin(), labels.end());
    const auto at = [&](const std::string& l) {
        return static_cast<std::size_t>(std::find(order.begin(), order.end(), l) - order.begin());
    };
    std::vector<std::vector<int>> confusion(order.size(), std::vector<int>(order.size(), 0));
    for (const auto& [gold, guess] : pairs) ++confusion[at(gold)][at(guess)];

    double sum = 0.0;
    for (std::size_t c = 0; c < order.size(); ++c) {
        int predicted = 0, actual = 0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            predicted += confusion[k][c];
            actual += confusion[c][k];
        }
        const int tp = confusion[c][c];
        const double precision = predicted ? static_cast<double>(tp) / predicted : 0.0;
        const double recall = actual ? static_cast<double>(tp) / actual : 0.0;
        sum += (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return order.empty() ? 0.0 : sum / static_cast<double>(order.size());
}

double relative(const NavGraph& g, const NodeId& from, const NodeId& to, double heading) {
    const double rel = wrap(compass(g.position(from), g.position(to)) - heading);
    return std::fabs(rel) >= 180.0 - 1e-9 ? 180.0 : rel;
}

std::optional<NodeId> center(const NavGraph& g, const NodeId& node, double heading, double half_angle) {
    std::optional<NodeId> best;
    double best_rel = 0.0;
    for (const auto& n : g.neighbor_ids(node)) {
        const auto& p = g.position(node);
        const auto& q = g.position(n);
        if (p.x == q.x && p.y == q.y) continue;
        const double rel = relative(g, node, n, heading);
        if (std::fabs(rel) > half_angle) continue;
        const bool better = !best || std::fabs(rel) < std::fabs(best_rel) - 1e-9 ||
                            (std::fabs(std::fabs(rel) - std::fabs(best_rel)) <= 1e-9 &&
                             (rel < best_rel || (rel == best_rel && n < *best)));
        if (better) {
            best = n;
            best_rel = rel;
        }
    }
    return best;
}

std::vector<std::string> grid_expert(const EpisodeSpec& spec) {
    const NavGraph& g = *spec.graph;
    const double half = spec.variant.move_half_angle();
    double heading = spec.start_heading_deg;
    std::vector<std::string> out;
    for (std::size_t i = 0; i + 1 < spec.gt_path.size(); ++i) {
        const auto& v = spec.gt_path[i];
        const auto& w = spec.gt_path[i + 1];
        // k quarter-turns to the right, k = 0..11; cost min(k, 12 - k); right wins at equal cost
        int best_k = -1;
        int best_cost = 99;
        for (int k = 0; k < 12; ++k) {
            const double h = std::fmod(heading + 30.0 * k, 360.0);
            if (center(g, v, h, half) != w) continue;
            const int cost = std::min(k, 12 - k);
            if (cost < best_cost) {
                best_cost = cost;
                best_k = k;
            }
        }
        if (best_k < 0) throw std::runtime_error("target never centered");
        const bool right = best_k <= 6;
        for (int t = 0; t < best_cost; ++t) out.push_back(right ? "right" : "left");
        heading = std::fmod(heading + 30.0 * best_k + 360.0, 360.0);
        out.push_back("move");
        const double rel = relative(g, v, w, heading);
        if (spec.variant.auto_adjust && std::fabs(rel) > 0.01) heading = compass(g.position(v), g.position(w));
    }
    out.push_back("stop");
    return out;
}

std::vector<std::string> sorted_expert(const EpisodeSpec& spec) {
    const NavGraph& g = *spec.graph;
    double heading = spec.start_heading_deg;
    std::vector<std::string> out;
    for (std::size_t i = 0; i + 1 < spec.gt_path.size(); ++i) {
        const auto& v = spec.gt_path[i];
        std::vector<std::tuple<double, double, NodeId>> cands;
        for (const auto& n : g.neighbor_ids(v)) {
            const auto& p = g.position(v);
            const auto& q = g.position(n);
            const double theta = (p.x == q.x && p.y == q.y) ? 0.0 : relative(g, v, n, heading);
            cands.emplace_back(theta, dist3(p, q), n);
        }
        std::sort(cands.begin(), cands.end());
        for (std::size_t k = 0; k < cands.size(); ++k) {
            if (std::get<2>(cands[k]) == spec.gt_path[i + 1]) {
                out.push_back(std::to_string(k));
                heading = std::fmod(heading + std::get<0>(cands[k]) + 360.0, 360.0);
            }
        }
    }
    out.push_back("stop");
    return out;
}

}  // namespace vln::oracle
