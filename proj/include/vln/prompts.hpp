#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vln/simulator.hpp"

namespace vln {

/// Embedded in every prompt and exported dataset line.
inline constexpr std::string_view kPromptSchemaVersion = "vlnde-prompt/1";

struct PromptSegment {
    enum class Type { text, image };

    Type type = Type::text;
    std::string text;     ///< set for text segments
    ViewDescriptor view;  ///< set for image slots
};

struct Prompt {
    std::string system_text;
    std::vector<PromptSegment> segments;
    std::vector<std::string> vocabulary;

    /// Segments flattened to text with "<image>" marking every image slot.
    std::string flat_text() const;
    std::size_t image_count() const;
};

struct PromptOptions {
    /// Keep only the most recent entries of the history. Unlimited when empty.
    std::optional<std::size_t> max_history;
};

/// Fixed per-space task description; lists every field and the exact output vocabulary.
const std::string& render_system_prompt(ActionSpace space);

/// Serializes the agent state in the canonical field order:
/// INSTRUCTION, STEP, DISTANCE_TRAVELED, HISTORY, then CURRENT VIEW + ALLOWED ACTIONS (low)
/// or PANORAMA + CANDIDATES + VALID ACTIONS (pano). Throws SimulationError when the
/// observation does not belong to spec.space.
Prompt render_state_prompt(const AgentState& state, const Observation& observation,
                           const EpisodeSpec& spec, const PromptOptions& options = {});

/// Maps raw model output to an action: whitespace is trimmed and only the first token,
/// lowercased, is considered. For pano, `candidate_count` is K.
/// Throws ParseError carrying the raw text.
Action parse_action(std::string_view raw, ActionSpace space, int candidate_count = 0);

/// {system, segments:[{type, value}], vocabulary, schema_version}
nlohmann::json to_json(const Prompt& prompt);

}  // namespace vln
