#include "vln/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include <fmt/core.h>

#include "vln/errors.hpp"

namespace vln {

namespace {

double walkable(const NavGraph& graph, const NodeId& a, const NodeId& b) {
    const auto d = graph.geodesic(a, b);
    if (!d) throw GraphError(fmt::format("{} and {} are not connected in scan {}", a, b, graph.scan_id()));
    return *d;
}

double goal_distance(const NavGraph& graph, const NodeId& node, const NodeId& goal,
                     const MetricsConfig& config) {
    if (config.goal_distance == DistanceMode::euclidean) {
        return euclidean_distance(graph.position(node), graph.position(goal));
    }
    return walkable(graph, node, goal);
}

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

double path_length(const NavGraph& graph, std::span<const NodeId> path) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const auto length = graph.edge_length(path[i], path[i + 1]);
        if (!length) {
            throw GraphError(fmt::format("({}, {}) is not an edge of scan {}", path[i], path[i + 1],
                                         graph.scan_id()));
        }
        total += *length;
    }
    return total;
}

OnlineComponents score_online(const EpisodeRecord& record, const EpisodeSpec& spec,
                              const MetricsConfig& config) {
    const NavGraph& graph = *spec.graph;
    if (record.path.empty()) throw GraphError(fmt::format("episode {} has an empty path", record.episode_id));

    OnlineComponents c;
    c.episode_id = record.episode_id;
    c.steps = record.steps;
    c.pl_m = path_length(graph, record.path);
    c.ne_m = goal_distance(graph, record.path.back(), spec.goal, config);
    c.oracle_success = std::any_of(record.path.begin(), record.path.end(), [&](const NodeId& n) {
        return goal_distance(graph, n, spec.goal, config) <= config.success_radius_m;
    });
    const bool ended_with_stop = !record.actions.empty() && record.actions.back().kind == Action::Kind::stop;
    c.success = c.ne_m <= config.success_radius_m && ended_with_stop;
    c.reference_length_m = walkable(graph, spec.start, spec.goal);
    if (c.success) {
        const double denom = std::max(c.pl_m, c.reference_length_m);
        c.spl = denom > 0.0 ? c.reference_length_m / denom : 1.0;
    }
    c.cls = cls(record.path, spec.gt_path, graph);
    return c;
}

double cls(std::span<const NodeId> pred, std::span<const NodeId> ref, const NavGraph& graph) {
    if (pred.empty() || ref.empty()) throw std::invalid_argument("cls needs non-empty paths");

    double coverage = 0.0;
    for (const auto& r : ref) {
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& p : pred) nearest = std::min(nearest, walkable(graph, r, p));
        coverage += std::exp(-nearest / kClsDistanceScaleM);
    }
    coverage /= static_cast<double>(ref.size());

    const double expected = coverage * path_length(graph, ref);
    const double predicted = path_length(graph, pred);
    const double denom = expected + std::abs(expected - predicted);
    const double length_score = denom > 0.0 ? expected / denom : 1.0;
    return coverage * length_score;
}

OnlineScore aggregate_online(std::span<const OnlineComponents> episodes) {
    if (episodes.empty()) throw std::invalid_argument("aggregate_online needs at least one episode");
    OnlineScore s;
    s.episodes = episodes.size();
    for (const auto& e : episodes) {
        s.pl_m += e.pl_m;
        s.ne_m += e.ne_m;
        s.osr += e.oracle_success ? 1.0 : 0.0;
        s.sr += e.success ? 1.0 : 0.0;
        s.spl += e.spl;
        s.cls += e.cls;
    }
    const double n = static_cast<double>(episodes.size());
    s.pl_m /= n;
    s.ne_m /= n;
    s.osr /= n;
    s.sr /= n;
    s.spl /= n;
    s.cls /= n;
    return s;
}

ActionPairs align_actions(std::span<const Action> expert, std::span<const Action> predicted) {
    if (expert.size() != predicted.size()) {
        throw std::invalid_argument(fmt::format("expert has {} actions, prediction has {}", expert.size(),
                                                predicted.size()));
    }
    ActionPairs pairs;
    for (std::size_t i = 0; i < expert.size(); ++i) pairs.emplace_back(expert[i].token(), predicted[i].token());
    return pairs;
}

OfflineScore score_offline(std::span<const ActionPairs> episodes) {
    if (episodes.empty()) throw std::invalid_argument("score_offline needs at least one episode");

    struct Counts {
        std::size_t tp = 0, fp = 0, fn = 0;
    };
    std::map<std::string, Counts> classes;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::size_t exact = 0;
    for (const auto& pairs : episodes) {
        bool all_match = true;
        for (const auto& [gold, guess] : pairs) {
            ++total;
            if (gold == guess) {
                ++correct;
                ++classes[gold].tp;
            } else {
                all_match = false;
                ++classes[gold].fn;
                ++classes[guess].fp;
            }
        }
        if (all_match) ++exact;
    }

    OfflineScore s;
    s.episodes = episodes.size();
    s.steps = total;
    s.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    s.csr = static_cast<double>(exact) / static_cast<double>(episodes.size());
    double f1_sum = 0.0;
    for (const auto& [label, c] : classes) {
        const double f1 = c.tp ? 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn) : 0.0;
        s.class_f1[label] = f1;
        f1_sum += f1;
    }
    s.macro_f1 = classes.empty() ? 0.0 : f1_sum / static_cast<double>(classes.size());
    return s;
}

std::vector<LengthBucket> sr_by_path_length(std::span<const OnlineComponents> episodes,
                                            std::span<const double> edges) {
    if (edges.empty()) throw std::invalid_argument("bucket edges must not be empty");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("bucket edges must be strictly increasing");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<LengthBucket> buckets;
    const auto bucket = [](double lo, double hi) {
        LengthBucket b;
        b.lower = lo;
        b.upper = hi;
        return b;
    };
    buckets.push_back(bucket(-inf, edges.front()));
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) buckets.push_back(bucket(edges[i], edges[i + 1]));
    buckets.push_back(bucket(edges.back(), inf));

    for (const auto& e : episodes) {
        for (auto& b : buckets) {
            if (e.reference_length_m >= b.lower && e.reference_length_m < b.upper) {
                ++b.count;
                if (e.success) ++b.successes;
                break;
            }
        }
    }
    for (auto& b : buckets) {
        if (b.count) b.sr = static_cast<double>(b.successes) / static_cast<double>(b.count);
    }
    return buckets;
}

std::vector<LengthBucket> sr_by_path_length(std::span<const EpisodeRecord> records,
                                            std::span<const EpisodeSpec> specs,
                                            std::span<const double> edges, const MetricsConfig& config) {
    if (records.size() != specs.size()) throw std::invalid_argument("records and specs differ in length");
    std::vector<OnlineComponents> components;
    for (std::size_t i = 0; i < records.size(); ++i) components.push_back(score_online(records[i], specs[i], config));
    return sr_by_path_length(components, edges);
}

nlohmann::json to_json(const OnlineScore& s) {
    return {{"episodes", s.episodes}, {"pl", s.pl_m}, {"ne", s.ne_m}, {"osr", s.osr},
            {"sr", s.sr},             {"spl", s.spl}, {"cls", s.cls}};
}

nlohmann::json to_json(const OfflineScore& s) {
    return {{"episodes", s.episodes}, {"steps", s.steps},   {"accuracy", s.accuracy},
            {"macro_f1", s.macro_f1}, {"csr", s.csr},       {"class_f1", s.class_f1}};
}

nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json doc = {{"split", r.split},
                          {"space", r.space},
                          {"mode", r.mode},
                          {"policy", r.policy},
                          {"variant", to_json(r.variant)},
                          {"success_radius_m", r.success_radius_m},
                          {"failures", r.failures},
                          {"online", r.online ? to_json(*r.online) : nlohmann::json(nullptr)},
                          {"offline", r.offline ? to_json(*r.offline) : nlohmann::json(nullptr)}};
    nlohmann::json buckets = nlohmann::json::array();
    for (const auto& b : r.buckets) {
        buckets.push_back({{"lower", std::isinf(b.lower) ? nlohmann::json(nullptr) : nlohmann::json(b.lower)},
                           {"upper", std::isinf(b.upper) ? nlohmann::json(nullptr) : nlohmann::json(b.upper)},
                           {"count", b.count},
                           {"successes", b.successes},
                           {"sr", optional_number(b.sr)}});
    }
    doc["buckets"] = std::move(buckets);
    nlohmann::json episodes = nlohmann::json::array();
    for (const auto& e : r.episodes) {
        episodes.push_back({{"episode_id", e.episode_id},
                            {"ne", e.ne_m},
                            {"pl", e.pl_m},
                            {"oracle_success", e.oracle_success},
                            {"success", e.success},
                            {"spl", e.spl},
                            {"cls", e.cls},
                            {"reference_length", e.reference_length_m},
                            {"steps", e.steps}});
    }
    doc["episodes"] = std::move(episodes);
    return doc;
}

std::string to_table(const MetricsReport& r) {
    std::string out = fmt::format("split={} space={} mode={} policy={} vfov={} auto_adjust={}\n", r.split,
                                  r.space, r.mode, r.policy, r.variant.fov.vfov_deg,
                                  r.variant.auto_adjust ? "on" : "off");
    if (r.online) {
        const auto& s = *r.online;
        out += fmt::format("{:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "Episodes", "PL", "NE", "OSR", "SR",
                           "SPL", "CLS");
        out += fmt::format("{:>8} {:>8.2f} {:>8.2f} {:>8.2f} {:>8.2f} {:>8.2f} {:>8.2f}\n", s.episodes, s.pl_m,
                           s.ne_m, s.osr, s.sr, s.spl, s.cls);
    }
    if (r.offline) {
        const auto& s = *r.offline;
        out += fmt::format("{:>8} {:>8} {:>8} {:>8}\n", "Episodes", "Accuracy", "MacroF1", "CSR");
        out += fmt::format("{:>8} {:>8.2f} {:>8.2f} {:>8.2f}\n", s.episodes, s.accuracy, s.macro_f1, s.csr);
    }
    if (!r.buckets.empty()) {
        out += fmt::format("{:>17} {:>8} {:>8}\n", "Ref. length (m)", "Count", "SR");
        for (const auto& b : r.buckets) {
            const std::string lo = std::isinf(b.lower) ? "-inf" : fmt::format("{:.1f}", b.lower);
            const std::string hi = std::isinf(b.upper) ? "inf" : fmt::format("{:.1f}", b.upper);
            out += fmt::format("{:>17} {:>8} {:>8}\n", fmt::format("[{}, {})", lo, hi), b.count,
                               b.sr ? fmt::format("{:.2f}", *b.sr) : std::string("-"));
        }
    }
    if (r.failures) out += fmt::format("policy failures: {}\n", r.failures);
    return out;
}

}  // namespace vln
