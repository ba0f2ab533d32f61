#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vln/runner.hpp"

namespace vln {

inline constexpr double kDefaultSuccessRadiusM = 3.0;
/// Distance scale of the coverage term in CLS.
inline constexpr double kClsDistanceScaleM = 3.0;

enum class DistanceMode { geodesic, euclidean };

struct MetricsConfig {
    double success_radius_m = kDefaultSuccessRadiusM;
    /// Applies to navigation error and the oracle/success radius checks.
    /// SPL's reference length and CLS always use walkable distance.
    DistanceMode goal_distance = DistanceMode::geodesic;
};

/// Per-episode online scores.
struct OnlineComponents {
    std::string episode_id;
    double ne_m = 0.0;
    double pl_m = 0.0;
    bool oracle_success = false;
    bool success = false;
    double spl = 0.0;
    double cls = 0.0;
    double reference_length_m = 0.0;  ///< geodesic(start, goal)
    int steps = 0;
};

struct OnlineScore {
    std::size_t episodes = 0;
    double pl_m = 0.0;
    double ne_m = 0.0;
    double osr = 0.0;
    double sr = 0.0;
    double spl = 0.0;
    double cls = 0.0;
};

struct OfflineScore {
    std::size_t episodes = 0;
    std::size_t steps = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double csr = 0.0;
    std::map<std::string, double> class_f1;
};

/// Sum of edge lengths along a walk. Throws GraphError if two consecutive nodes are not adjacent.
double path_length(const NavGraph& graph, std::span<const NodeId> path);

OnlineComponents score_online(const EpisodeRecord& record, const EpisodeSpec& spec,
                              const MetricsConfig& config = {});

/// Coverage weighted by length score of `pred` against `ref`, in (0, 1].
double cls(std::span<const NodeId> pred, std::span<const NodeId> ref, const NavGraph& graph);

/// Unweighted means over episodes. Throws std::invalid_argument on an empty list.
OnlineScore aggregate_online(std::span<const OnlineComponents> episodes);

/// (expert token, predicted token) per step, one list per episode. A prediction that
/// failed to produce an action is labeled kInvalidPrediction.
using ActionPairs = std::vector<std::pair<std::string, std::string>>;
inline constexpr std::string_view kInvalidPrediction = "invalid";

/// Zips two token lists; throws std::invalid_argument when their lengths differ.
ActionPairs align_actions(std::span<const Action> expert, std::span<const Action> predicted);

/// Pooled accuracy, macro F1 over every class seen in either column, and the share of
/// episodes predicted exactly. Throws std::invalid_argument on an empty input.
OfflineScore score_offline(std::span<const ActionPairs> episodes);

struct LengthBucket {
    double lower = 0.0;  ///< inclusive
    double upper = 0.0;  ///< exclusive; +inf for the last bucket
    std::size_t count = 0;
    std::size_t successes = 0;
    std::optional<double> sr;  ///< absent for empty buckets
};

/// Buckets episodes by reference length: (-inf, e0), [e0, e1), ..., [e_last, +inf).
/// Throws std::invalid_argument unless `edges` is non-empty and strictly increasing.
std::vector<LengthBucket> sr_by_path_length(std::span<const OnlineComponents> episodes,
                                            std::span<const double> edges);
std::vector<LengthBucket> sr_by_path_length(std::span<const EpisodeRecord> records,
                                            std::span<const EpisodeSpec> specs,
                                            std::span<const double> edges,
                                            const MetricsConfig& config = {});

struct MetricsReport {
    std::string split;
    std::string space;
    std::string mode;
    std::string policy;
    Variant variant{};
    double success_radius_m = kDefaultSuccessRadiusM;
    std::size_t failures = 0;  ///< episodes whose policy failed; scored as unsuccessful
    std::optional<OnlineScore> online;
    std::optional<OfflineScore> offline;
    std::vector<LengthBucket> buckets;
    std::vector<OnlineComponents> episodes;
};

nlohmann::json to_json(const OnlineScore& score);
nlohmann::json to_json(const OfflineScore& score);
nlohmann::json to_json(const MetricsReport& report);
/// Aligned plain-text table: PL, NE, OSR, SR, SPL, CLS (online) or Accuracy, Macro F1, CSR (offline).
std::string to_table(const MetricsReport& report);

}  // namespace vln
