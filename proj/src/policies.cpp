#include "vln/policies.hpp"

#include <stdexcept>
#include <variant>

#include "vln/expert.hpp"

namespace vln {

void RandomPolicy::begin_episode(const EpisodeSpec& spec) {
    std::uint64_t h = fnv1a(spec.episode_id, seed_ ^ 0xcbf29ce484222325ULL);
    h = fnv1a(std::to_string(spec.instruction_index), h);
    state_ = h;
}

Action RandomPolicy::decide(const DecisionContext& context) {
    // splitmix64
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;

    if (const auto* low = std::get_if<LowObservation>(&context.observation())) {
        return low->allowed[z % low->allowed.size()];
    }
    const auto& pano = std::get<PanoObservation>(context.observation());
    const auto choice = z % (pano.candidates.size() + 1);
    if (choice == pano.candidates.size()) return Action::stop();
    return Action::candidate(static_cast<int>(choice));
}

std::unique_ptr<Policy> make_local_policy(const std::string& name, std::uint64_t seed) {
    if (name == "expert") return std::make_unique<ExpertPolicy>();
    if (name == "random") return std::make_unique<RandomPolicy>(seed);
    if (name == "stop") return std::make_unique<StopPolicy>();
    throw std::invalid_argument("unknown policy '" + name + "' (expected expert, random, stop or remote:<url>)");
}

}  // namespace vln
