#include "vln/evaluation.hpp"

#include <climits>
#include <stdexcept>

#include "vln/expert.hpp"

namespace vln {

std::string_view to_string(EvalMode mode) { return mode == EvalMode::online ? "online" : "offline"; }

EvalMode eval_mode_from_string(std::string_view text) {
    if (text == "online") return EvalMode::online;
    if (text == "offline") return EvalMode::offline;
    throw std::invalid_argument("unknown mode '" + std::string(text) + "'");
}

ActionPairs teacher_forced(Policy& policy, const EpisodeSpec& spec, const PromptOptions& prompt, bool* failed) {
    EpisodeSpec forced = spec;
    forced.variant.max_steps = INT_MAX / 2;
    forced.validate();
    policy.begin_episode(forced);

    ActionPairs pairs;
    AgentState state = initial_state(forced);
    Observation observation = observe(state, forced);
    while (!state.done) {
        const Action gold = next_expert_action(state, forced);
        std::string guess;
        try {
            const DecisionContext context(forced, state, observation, prompt);
            guess = policy.decide(context).token();
        } catch (const std::exception&) {
            guess = kInvalidPrediction;
            if (failed) *failed = true;
        }
        pairs.emplace_back(gold.token(), std::move(guess));
        auto result = step(std::move(state), forced, gold);
        state = std::move(result.state);
        if (result.observation) observation = std::move(*result.observation);
    }
    return pairs;
}

EvalResult evaluate(std::span<const EpisodeSpec> episodes, Policy& policy, const EvalOptions& options) {
    if (episodes.empty()) throw std::invalid_argument("no episodes to evaluate");

    EvalResult out;
    MetricsReport& report = out.report;
    report.split = options.split;
    report.space = std::string(to_string(options.space));
    report.mode = std::string(to_string(options.mode));
    report.policy = options.policy_name;
    report.variant = options.variant;
    report.success_radius_m = options.metrics.success_radius_m;

    RunOptions run = options.run;
    run.capture_policy_errors = true;
    for (const auto& original : episodes) {
        EpisodeSpec spec = original;
        spec.space = options.space;
        spec.variant = options.variant;
        if (options.mode == EvalMode::online) {
            auto record = run_episode(policy, spec, run);
            if (record.error) ++report.failures;
            report.episodes.push_back(score_online(record, spec, options.metrics));
            out.records.push_back(std::move(record));
        } else {
            bool failed = false;
            out.pairs.push_back(teacher_forced(policy, spec, run.prompt, &failed));
            if (failed) ++report.failures;
        }
    }

    if (options.mode == EvalMode::online) {
        report.online = aggregate_online(report.episodes);
        if (!options.bucket_edges.empty()) report.buckets = sr_by_path_length(report.episodes, options.bucket_edges);
    } else {
        report.offline = score_offline(out.pairs);
    }
    return out;
}

}  // namespace vln
