#pragma once

#include <span>
#include <string>
#include <vector>

#include "vln/metrics.hpp"
#include "vln/runner.hpp"

namespace vln {

enum class EvalMode { online, offline };

std::string_view to_string(EvalMode mode);
EvalMode eval_mode_from_string(std::string_view text);

struct EvalOptions {
    std::string split;
    std::string policy_name;
    ActionSpace space = ActionSpace::pano;
    EvalMode mode = EvalMode::online;
    Variant variant{};
    MetricsConfig metrics{};
    std::vector<double> bucket_edges;  ///< empty: no length buckets
    RunOptions run{};
};

struct EvalResult {
    MetricsReport report;
    std::vector<EpisodeRecord> records;  ///< online only
    std::vector<ActionPairs> pairs;      ///< offline only
};

/// Teacher forcing: the policy is queried at every expert state and the expert's action is
/// executed, so mistakes never change the trajectory. The expert runs without a step
/// budget. A failed query is recorded as kInvalidPrediction and counted in `failed`.
ActionPairs teacher_forced(Policy& policy, const EpisodeSpec& spec, const PromptOptions& prompt = {},
                           bool* failed = nullptr);

/// Runs every episode (re-configured to options.space / options.variant) in order.
/// Policy failures are per-episode: the partial trajectory is scored and counted in
/// report.failures. Simulator and data errors propagate.
EvalResult evaluate(std::span<const EpisodeSpec> episodes, Policy& policy, const EvalOptions& options);

}  // namespace vln
