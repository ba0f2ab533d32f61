#include "vln/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/core.h>

#include "vln/errors.hpp"

namespace vln {

namespace {

class PromptBuilder {
   public:
    void text(std::string_view s) {
        if (segments_.empty() || segments_.back().type != PromptSegment::Type::text) {
            segments_.push_back({PromptSegment::Type::text, {}, {}});
        }
        segments_.back().text.append(s);
    }

    void image(const ViewDescriptor& view) { segments_.push_back({PromptSegment::Type::image, {}, view}); }

    std::vector<PromptSegment> take() { return std::move(segments_); }

   private:
    std::vector<PromptSegment> segments_;
};

std::string format_distance(double meters) { return fmt::format("{:.2f}m", meters); }

std::string format_heading(double degrees) { return std::to_string(std::lround(degrees)); }

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out;
}

const std::string kLowSystemPrompt =
    "You are a navigation agent inside a building. Follow the route instruction to reach the goal "
    "location and stop there.\n"
    "\n"
    "Each turn you receive these fields:\n"
    "- INSTRUCTION: the natural language route instruction to follow.\n"
    "- STEP: the current step number, starting at 1.\n"
    "- DISTANCE_TRAVELED: the total distance walked so far, in meters.\n"
    "- HISTORY: the previous egocentric views, each paired with the action taken from it. "
    "An 'adjust' entry is an automatic turn towards the next location that you did not choose.\n"
    "- CURRENT VIEW: the egocentric image in front of you.\n"
    "- ALLOWED ACTIONS: the actions that are physically possible right now.\n"
    "\n"
    "Actions:\n"
    "- move: walk forward to the location closest to the center of your view.\n"
    "- left: turn 30 degrees to the left.\n"
    "- right: turn 30 degrees to the right.\n"
    "- stop: declare that you have reached the goal. This ends the episode.\n"
    "\n"
    "Answer with exactly one of: move, left, right, stop. Only answer with an action listed under "
    "ALLOWED ACTIONS.\n";

const std::string kPanoSystemPrompt =
    "You are a navigation agent inside a building. Follow the route instruction to reach the goal "
    "location and stop there.\n"
    "\n"
    "Each turn you receive these fields:\n"
    "- INSTRUCTION: the natural language route instruction to follow.\n"
    "- STEP: the current step number, starting at 1.\n"
    "- DISTANCE_TRAVELED: the total distance walked so far, in meters.\n"
    "- HISTORY: the panoramas seen at previous steps, oldest first.\n"
    "- PANORAMA: a 360 degree image centered on your current heading.\n"
    "- CANDIDATES: the navigable directions, sorted from left to right. Each line gives the "
    "candidate index, its heading relative to the panorama center in degrees (negative is left), "
    "the distance to walk in meters, and an image looking towards it.\n"
    "- VALID ACTIONS: the answers accepted at this step.\n"
    "\n"
    "Actions:\n"
    "- a candidate index: an integer from 0 to K-1, where K is the number of candidates; walks to "
    "that candidate.\n"
    "- stop: declare that you have reached the goal. This ends the episode.\n"
    "\n"
    "Answer with exactly one candidate index or stop.\n";

}  // namespace

std::string Prompt::flat_text() const {
    std::string out;
    for (const auto& s : segments) {
        out += s.type == PromptSegment::Type::text ? s.text : std::string("<image>");
    }
    return out;
}

std::size_t Prompt::image_count() const {
    return static_cast<std::size_t>(std::count_if(segments.begin(), segments.end(), [](const auto& s) {
        return s.type == PromptSegment::Type::image;
    }));
}

const std::string& render_system_prompt(ActionSpace space) {
    return space == ActionSpace::low ? kLowSystemPrompt : kPanoSystemPrompt;
}

Prompt render_state_prompt(const AgentState& state, const Observation& observation,
                           const EpisodeSpec& spec, const PromptOptions& options) {
    const bool low = spec.space == ActionSpace::low;
    if (low != std::holds_alternative<LowObservation>(observation)) {
        throw SimulationError(fmt::format("observation does not match the {} action space",
                                          to_string(spec.space)));
    }

    PromptBuilder b;
    b.text(fmt::format("INSTRUCTION: {}\n", spec.instruction));
    b.text(fmt::format("STEP: {}\n", state.step));
    b.text(fmt::format("DISTANCE_TRAVELED: {}\n", format_distance(state.distance_m)));

    std::size_t first = 0;
    if (options.max_history && state.history.size() > *options.max_history) {
        first = state.history.size() - *options.max_history;
    }
    if (state.history.empty()) {
        b.text("HISTORY: none\n");
    } else {
        b.text("HISTORY:\n");
        if (first > 0) b.text(fmt::format("({} earlier entries omitted)\n", first));
        for (std::size_t i = first; i < state.history.size(); ++i) {
            const auto& entry = state.history[i];
            if (low) {
                b.text(fmt::format("[{}] {} ", i + 1, entry.action.token()));
            } else {
                b.text(fmt::format("[{}] ", i + 1));
            }
            b.image(entry.view);
            b.text("\n");
        }
    }

    Prompt prompt;
    prompt.system_text = render_system_prompt(spec.space);
    if (low) {
        const auto& obs = std::get<LowObservation>(observation);
        b.text("CURRENT VIEW: ");
        b.image(obs.view);
        b.text("\n");
        for (const auto& a : obs.allowed) prompt.vocabulary.push_back(a.token());
        b.text(fmt::format("ALLOWED ACTIONS: {}\n", join(prompt.vocabulary)));
    } else {
        const auto& obs = std::get<PanoObservation>(observation);
        b.text("PANORAMA: ");
        b.image(obs.pano);
        b.text("\n");
        if (obs.candidates.empty()) {
            b.text("CANDIDATES: none\n");
        } else {
            b.text("CANDIDATES:\n");
            for (const auto& c : obs.candidates) {
                b.text(fmt::format("{}: heading {}, distance {} ", c.index, format_heading(c.theta_deg),
                                   format_distance(c.delta_m)));
                b.image(c.view);
                b.text("\n");
                prompt.vocabulary.push_back(std::to_string(c.index));
            }
        }
        prompt.vocabulary.emplace_back("stop");
        b.text(fmt::format("VALID ACTIONS: {}\n", join(prompt.vocabulary)));
    }
    prompt.segments = b.take();
    return prompt;
}

Action parse_action(std::string_view raw, ActionSpace space, int candidate_count) {
    std::string_view rest = raw;
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
    std::size_t len = 0;
    while (len < rest.size() && !is_space(rest[len])) ++len;
    std::string token(rest.substr(0, len));
    std::transform(token.begin(), token.end(), token.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    if (token == "stop") return Action::stop();
    if (space == ActionSpace::low) {
        if (token == "move") return Action::move();
        if (token == "left") return Action::left();
        if (token == "right") return Action::right();
        throw ParseError(ParseError::Kind::unknown_token, std::string(raw),
                         fmt::format("unknown action token '{}'", token));
    }

    std::string_view digits = token;
    if (!digits.empty() && (digits.front() == '+' || digits.front() == '-')) digits.remove_prefix(1);
    const bool numeric = !digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0;
    });
    if (!numeric) {
        throw ParseError(ParseError::Kind::unknown_token, std::string(raw),
                         fmt::format("unknown action token '{}'", token));
    }
    long long value = -1;
    const auto [ptr, ec] = std::from_chars(token.data() + (token.front() == '+' ? 1 : 0),
                                           token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || value < 0 || value >= candidate_count) {
        throw ParseError(ParseError::Kind::invalid_candidate, std::string(raw),
                         fmt::format("invalid candidate '{}' (K={})", token, candidate_count));
    }
    return Action::candidate(static_cast<int>(value));
}

nlohmann::json to_json(const Prompt& prompt) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : prompt.segments) {
        if (s.type == PromptSegment::Type::text) {
            segments.push_back({{"type", "text"}, {"value", s.text}});
        } else {
            segments.push_back({{"type", "image"}, {"value", to_json(s.view)}});
        }
    }
    return {{"system", prompt.system_text},
            {"segments", std::move(segments)},
            {"vocabulary", prompt.vocabulary},
            {"schema_version", kPromptSchemaVersion}};
}

}  // namespace vln
