#include <gtest/gtest.h>

#include "support.hpp"
#include "vln/errors.hpp"
#include "vln/expert.hpp"
#include "vln/prompts.hpp"
#include "vln/runner.hpp"

using namespace vln;

namespace {

Prompt render(const AgentState& st, const EpisodeSpec& s, PromptOptions o = {}) {
    return render_state_prompt(st, observe(st, s), s, o);
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(SystemPrompt, FixedPerSpace) {
    EXPECT_EQ(render_system_prompt(ActionSpace::low), render_system_prompt(ActionSpace::low));
    EXPECT_NE(render_system_prompt(ActionSpace::low), render_system_prompt(ActionSpace::pano));
}

TEST(SystemPrompt, VocabularyMatchesParser) {
    const auto& low = render_system_prompt(ActionSpace::low);
    EXPECT_TRUE(contains(low, "Answer with exactly one of: move, left, right, stop."));
    for (const char* t : {"move", "left", "right", "stop"}) EXPECT_EQ(parse_action(t, ActionSpace::low).token(), t);
    EXPECT_FALSE(contains(low, "adjust:"));
    const auto& pano = render_system_prompt(ActionSpace::pano);
    EXPECT_TRUE(contains(pano, "from 0 to K-1"));
    EXPECT_TRUE(contains(pano, "stop"));
    for (const auto field : {"INSTRUCTION", "STEP", "DISTANCE_TRAVELED", "HISTORY"}) {
        EXPECT_TRUE(contains(low, field));
        EXPECT_TRUE(contains(pano, field));
    }
    EXPECT_TRUE(contains(low, "CURRENT VIEW"));
    EXPECT_TRUE(contains(pano, "CANDIDATES"));
}

TEST(StatePrompt, FirstStepHasNoHistory) {
    const auto s = fx::spec(fx::star({0.0}), {"H", "s0"}, 0.0, ActionSpace::low);
    const auto p = render(initial_state(s), s);
    EXPECT_EQ(p.flat_text(),
              "INSTRUCTION: walk\n"
              "STEP: 1\n"
              "DISTANCE_TRAVELED: 0.00m\n"
              "HISTORY: none\n"
              "CURRENT VIEW: <image>\n"
              "ALLOWED ACTIONS: move, left, right, stop\n");
    EXPECT_EQ(p.image_count(), 1u);
    EXPECT_EQ(p.vocabulary, (std::vector<std::string>{"move", "left", "right", "stop"}));
}

TEST(StatePrompt, CandidateLines) {
    const auto g = fx::graph({{"H", {0, 0, 0}}, {"a", fx::polar(-30, 2.0)}, {"b", fx::polar(40, 3.5)}},
                             {{"H", "a"}, {"H", "b"}});
    const auto s = fx::spec(g, {"H"}, 0.0, ActionSpace::pano);
    const auto text = render(initial_state(s), s).flat_text();
    EXPECT_TRUE(contains(text, "CANDIDATES:\n0: heading -30, distance 2.00m <image>\n"
                               "1: heading 40, distance 3.50m <image>\n"));
    EXPECT_TRUE(contains(text, "VALID ACTIONS: 0, 1, stop\n"));
    EXPECT_TRUE(contains(text, "PANORAMA: <image>\n"));
}

TEST(StatePrompt, IsolatedNodeHasNoCandidates) {
    const auto g = fx::graph({{"H", {0, 0, 0}}}, {});
    const auto s = fx::spec(g, {"H"}, 0.0, ActionSpace::pano);
    const auto p = render(initial_state(s), s);
    EXPECT_TRUE(contains(p.flat_text(), "CANDIDATES: none\nVALID ACTIONS: stop\n"));
    EXPECT_EQ(p.vocabulary, std::vector<std::string>{"stop"});
}

TEST(StatePrompt, HistoryIncludesAdjustEntries) {
    const auto g = fx::star({20.0});
    const auto s = fx::spec(g, {"H", "s0"}, 0.0, ActionSpace::low);
    const auto st = step(initial_state(s), s, Action::move()).state;
    const auto text = render(st, s).flat_text();
    EXPECT_TRUE(contains(text, "STEP: 2\nDISTANCE_TRAVELED: 2.00m\nHISTORY:\n[1] adjust <image>\n[2] move <image>\n"));
}

TEST(StatePrompt, PanoHistoryIsImagesOnly) {
    const auto g = fx::star({20.0});
    const auto s = fx::spec(g, {"H", "s0"}, 0.0, ActionSpace::pano);
    const auto st = step(initial_state(s), s, Action::candidate(0)).state;
    EXPECT_TRUE(contains(render(st, s).flat_text(), "HISTORY:\n[1] <image>\n"));
}

TEST(StatePrompt, HistoryTruncation) {
    const auto s = fx::spec(fx::star({90.0}), {"H"}, 0.0, ActionSpace::low);
    AgentState st = initial_state(s);
    for (int i = 0; i < 5; ++i) st = step(st, s, Action::left()).state;
    PromptOptions o;
    o.max_history = 2;
    const auto p = render(st, s, o);
    EXPECT_TRUE(contains(p.flat_text(), "HISTORY:\n(3 earlier entries omitted)\n[4] left <image>\n[5] left <image>\n"));
    EXPECT_EQ(p.image_count(), 3u);
}

TEST(StatePrompt, DeterministicAndSelfContained) {
    const auto world = fx::small_world(12, 60, 10);
    for (const auto space : {ActionSpace::low, ActionSpace::pano}) {
        for (auto spec : world.episodes) {
            spec.space = space;
            AgentState st = initial_state(spec);
            for (const auto& a : expert_actions(spec)) {
                const auto obs = observe(st, spec);
                const auto first = render_state_prompt(st, obs, spec);
                const auto second = render_state_prompt(st, obs, spec);
                EXPECT_EQ(to_json(first).dump(), to_json(second).dump());
                EXPECT_EQ(to_json(first)["schema_version"], std::string(kPromptSchemaVersion));

                // every image slot is the current observation or a history entry
                std::set<std::string> known;
                for (const auto& h : st.history) known.insert(to_json(h.view).dump());
                if (space == ActionSpace::low) {
                    known.insert(to_json(std::get<LowObservation>(obs).view).dump());
                } else {
                    const auto& pano = std::get<PanoObservation>(obs);
                    known.insert(to_json(pano.pano).dump());
                    for (const auto& c : pano.candidates) known.insert(to_json(c.view).dump());
                }
                for (const auto& seg : first.segments) {
                    if (seg.type == PromptSegment::Type::image) EXPECT_TRUE(known.count(to_json(seg.view).dump()));
                }

                // the expert's answer is always in the advertised vocabulary and parses back
                const int k = space == ActionSpace::pano
                                  ? static_cast<int>(std::get<PanoObservation>(obs).candidates.size())
                                  : 0;
                EXPECT_NE(std::find(first.vocabulary.begin(), first.vocabulary.end(), a.token()),
                          first.vocabulary.end());
                for (const auto& token : first.vocabulary) EXPECT_EQ(parse_action(token, space, k).token(), token);
                st = step(st, spec, a).state;
            }
        }
    }
}

TEST(StatePrompt, RejectsMismatchedObservation) {
    const auto s = fx::spec(fx::star({0.0}), {"H"}, 0.0, ActionSpace::low);
    const auto st = initial_state(s);
    const Observation pano = observe_pano(st, s);
    EXPECT_THROW(render_state_prompt(st, pano, s), SimulationError);
}

TEST(ParseAction, Normalization) {
    EXPECT_EQ(parse_action(" Stop\n", ActionSpace::low), Action::stop());
    EXPECT_EQ(parse_action("MOVE forward please", ActionSpace::low), Action::move());
    EXPECT_EQ(parse_action("\tleft", ActionSpace::low), Action::left());
    EXPECT_EQ(parse_action("2", ActionSpace::pano, 5), Action::candidate(2));
    EXPECT_EQ(parse_action(" 1 ", ActionSpace::pano, 3), Action::candidate(1));
    EXPECT_EQ(parse_action("STOP", ActionSpace::pano, 0), Action::stop());
}

TEST(ParseAction, Errors) {
    try {
        parse_action("7", ActionSpace::pano, 5);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::invalid_candidate);
        EXPECT_EQ(e.raw(), "7");
    }
    try {
        parse_action("  jump\n", ActionSpace::low);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::unknown_token);
        EXPECT_EQ(e.raw(), "  jump\n");
    }
    EXPECT_THROW(parse_action("-1", ActionSpace::pano, 3), ParseError);
    EXPECT_THROW(parse_action("", ActionSpace::low), ParseError);
    EXPECT_THROW(parse_action("2", ActionSpace::low), ParseError);
    EXPECT_THROW(parse_action("move", ActionSpace::pano, 3), ParseError);
    EXPECT_THROW(parse_action("adjust", ActionSpace::low), ParseError);
    EXPECT_THROW(parse_action("1.5", ActionSpace::pano, 3), ParseError);
    EXPECT_THROW(parse_action("99999999999999999999", ActionSpace::pano, 3), ParseError);
}
