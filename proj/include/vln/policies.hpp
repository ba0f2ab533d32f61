#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "vln/data.hpp"
#include "vln/runner.hpp"

namespace vln {

class StopPolicy : public Policy {
   public:
    Action decide(const DecisionContext&) override { return Action::stop(); }
};

/// Uniform over the legal choices: the allowed set (low) or the candidates plus stop (pano).
/// Reseeded per episode from (seed, episode_id, instruction_index), so results do not depend
/// on the order or thread in which episodes run.
class RandomPolicy : public Policy {
   public:
    explicit RandomPolicy(std::uint64_t seed) : seed_(seed) {}
    void begin_episode(const EpisodeSpec& spec) override;
    Action decide(const DecisionContext& context) override;

   private:
    std::uint64_t seed_;
    std::uint64_t state_ = 0;
};

/// "expert", "random" or "stop". Throws std::invalid_argument otherwise; remote
/// policies live in the network library.
std::unique_ptr<Policy> make_local_policy(const std::string& name, std::uint64_t seed);

}  // namespace vln
