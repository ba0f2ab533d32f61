#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <unistd.h>

#include "oracles.hpp"
#include "support.hpp"
#include "vln/data.hpp"
#include "vln/errors.hpp"
#include "vln/expert.hpp"
#include "vln/runner.hpp"

using namespace vln;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures{VLN_FIXTURE_DIR};

nlohmann::json read(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

/// Scratch directory holding a copy of the fixtures, removed on teardown.
class ScratchData : public ::testing::Test {
   protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root_ = fs::temp_directory_path() / fmt::format("vlnde-{}-{}", info->name(), ::getpid());
        fs::remove_all(root_);
        fs::create_directories(root_);
        fs::copy(kFixtures / "connectivity", root_ / "connectivity");
    }
    void TearDown() override { fs::remove_all(root_); }

    fs::path write_split(const std::string& name, const nlohmann::json& doc) {
        const auto p = root_ / name;
        std::ofstream(p) << doc.dump();
        return p;
    }

    fs::path root_;
};

std::set<NodeId> bfs(const NavGraph& g, const NodeId& from) {
    std::set<NodeId> seen{from};
    std::queue<NodeId> q;
    q.push(from);
    while (!q.empty()) {
        const auto n = q.front();
        q.pop();
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (g.has_edge(n, g.id(j)) && seen.insert(g.id(j)).second) q.push(g.id(j));
        }
    }
    return seen;
}

}  // namespace

TEST(R2R, ThreeEpisodesPerTrajectory) {
    const auto ds = load_r2r(kFixtures / "R2R_mini.json", kFixtures / "connectivity");
    EXPECT_EQ(ds.trajectories, 3u);
    ASSERT_EQ(ds.episodes.size(), 9u);
    EXPECT_EQ(ds.graphs.size(), 2u);
    EXPECT_EQ(ds.episodes[0].episode_id, "11");
    EXPECT_EQ(ds.episodes[2].instruction_index, 2);
    EXPECT_EQ(ds.episodes[2].instruction, "Head to the far room.");
    // both scanA trajectories share one graph instance
    EXPECT_EQ(ds.episodes[0].graph.get(), ds.episodes[3].graph.get());
    for (const auto& e : ds.episodes) EXPECT_NO_THROW(e.validate());
}

TEST(R2R, HeadingsAreRadians) {
    const auto ds = load_r2r(kFixtures / "R2R_mini.json", kFixtures / "connectivity");
    EXPECT_NEAR(ds.episodes[3].start_heading_deg, 180.0, 1e-9);
    EXPECT_NEAR(ds.episodes[6].start_heading_deg, 90.0, 1e-9);
    R2RLoadOptions deg;
    deg.heading_units = HeadingUnits::degrees;
    EXPECT_NEAR(load_r2r(kFixtures / "R2R_mini.json", kFixtures / "connectivity", deg).episodes[3].start_heading_deg,
                std::numbers::pi, 1e-12);
}

TEST(R2R, SingleInstruction) {
    R2RLoadOptions o;
    o.instruction_index = 2;
    const auto ds = load_r2r(kFixtures / "R2R_mini.json", kFixtures / "connectivity", o);
    ASSERT_EQ(ds.episodes.size(), 3u);
    for (const auto& e : ds.episodes) EXPECT_EQ(e.instruction_index, 2);
    EXPECT_EQ(ds.episodes[1].instruction, "Go to the left room.");
    o.instruction_index = 3;
    EXPECT_THROW(load_r2r(kFixtures / "R2R_mini.json", kFixtures / "connectivity", o), DataError);
}

TEST(R2R, ExcludedViewpointsDropOut) {
    const auto ds = load_r2r(kFixtures / "R2R_mini.json", kFixtures / "connectivity");
    const auto& a = *ds.graphs.at("scanA");
    EXPECT_FALSE(a.contains("a5"));
    EXPECT_EQ(a.size(), 5u);
}

TEST_F(ScratchData, TwoInstructionsRejected) {
    auto doc = read(kFixtures / "R2R_mini.json");
    doc[1]["instructions"].erase(2);
    const auto p = write_split("R2R_bad.json", doc);
    try {
        load_r2r(p, root_ / "connectivity");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("path_id 12"), std::string::npos) << e.what();
    }
}

TEST_F(ScratchData, UnknownScanRejected) {
    auto doc = read(kFixtures / "R2R_mini.json");
    doc[2]["scan"] = "scanZ";
    const auto p = write_split("R2R_bad.json", doc);
    try {
        load_r2r(p, root_ / "connectivity");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("path_id 21"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("scanZ"), std::string::npos) << e.what();
    }
}

TEST_F(ScratchData, BrokenEdgeRejected) {
    auto doc = read(kFixtures / "R2R_mini.json");
    doc[0]["path"] = {"a0", "a2"};
    const auto p = write_split("R2R_bad.json", doc);
    try {
        load_r2r(p, root_ / "connectivity");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("path_id 11"), std::string::npos) << e.what();
    }
}

TEST_F(ScratchData, MalformedJsonRejected) {
    std::ofstream(root_ / "R2R_bad.json") << "[{";
    EXPECT_THROW(load_r2r(root_ / "R2R_bad.json", root_ / "connectivity"), DataError);
    EXPECT_THROW(load_r2r(root_ / "missing.json", root_ / "connectivity"), DataError);
}

TEST_F(ScratchData, LoadSplitPrefersR2R) {
    fs::copy(kFixtures / "R2R_mini.json", root_ / "R2R_val_seen.json");
    SplitSource src;
    src.data_root = root_;
    src.split = "val_seen";
    EXPECT_EQ(load_split(src).episodes.size(), 9u);
    src.instruction_index = 1;
    EXPECT_EQ(load_split(src).episodes.size(), 3u);
    src.split = "nope";
    EXPECT_THROW(load_split(src), DataError);
}

TEST_F(ScratchData, LoadSplitReadsSyntheticFile) {
    SyntheticWorldParams p;
    p.node_count = 30;
    p.episode_count = 7;
    p.seed = 5;
    const auto world = gen_synthetic(p);
    write_split("synthetic_demo.json", to_json(world));
    SplitSource src;
    src.data_root = root_;
    src.split = "demo";
    src.instruction_index = 2;
    const auto ds = load_split(src);
    ASSERT_EQ(ds.episodes.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) {
        EXPECT_EQ(ds.episodes[i].episode_id, world.episodes[i].episode_id);
        EXPECT_EQ(ds.episodes[i].gt_path, world.episodes[i].gt_path);
        EXPECT_EQ(ds.episodes[i].instruction_index, 2);
    }
}

TEST(LoadSplit, InMemorySyntheticIsKeyedBySplitAndSeed) {
    SplitSource a;
    a.split = "val_unseen";
    a.synthetic.episode_count = 10;
    SplitSource b = a;
    b.split = "train";
    SplitSource c = a;
    c.seed = 7;
    const auto da = load_split(a);
    EXPECT_EQ(to_json(*da.graphs.begin()->second).dump(), to_json(*load_split(a).graphs.begin()->second).dump());
    EXPECT_NE(da.graphs.begin()->first, load_split(b).graphs.begin()->first);
    EXPECT_NE(da.graphs.begin()->first, load_split(c).graphs.begin()->first);
    EXPECT_EQ(da.episodes.size(), 10u);
}

TEST(Fnv1a, KnownVectors) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

TEST(Synthetic, ByteIdenticalForSameSeed) {
    SyntheticWorldParams p;
    p.episode_count = 40;
    EXPECT_EQ(to_json(gen_synthetic(p)).dump(), to_json(gen_synthetic(p)).dump());
    auto q = p;
    q.seed = 43;
    EXPECT_NE(to_json(gen_synthetic(p)).dump(), to_json(gen_synthetic(q)).dump());
}

TEST(Synthetic, StructuralInvariants) {
    for (std::uint64_t seed : {1u, 2u, 3u, 42u}) {
        SyntheticWorldParams p;
        p.seed = seed;
        p.episode_count = 60;
        const auto w = gen_synthetic(p);
        const auto& g = *w.graph;
        const auto d = oracle::floyd_warshall(g);
        EXPECT_EQ(bfs(g, g.id(0)).size(), g.size()) << "seed " << seed;
        ASSERT_EQ(w.episodes.size(), 60u);
        for (const auto& e : w.episodes) {
            const double l = d[g.index_of(e.start)][g.index_of(e.goal)];
            EXPECT_GE(l, p.min_episode_length_m);
            EXPECT_LE(l, p.max_episode_length_m);
            EXPECT_NEAR(oracle::path_length(g, e.gt_path), l, 1e-9);
            EXPECT_EQ(e.gt_path, oracle::lexicographic_shortest_path(g, e.start, e.goal));
            EXPECT_GE(e.start_heading_deg, 0.0);
            EXPECT_LT(e.start_heading_deg, 360.0);
            EXPECT_FALSE(e.instruction.empty());
        }
        // edges at every node keep the configured angular separation
        for (std::size_t i = 0; i < g.size(); ++i) {
            const auto ns = g.neighbors(i);
            for (std::size_t x = 0; x < ns.size(); ++x) {
                for (std::size_t y = x + 1; y < ns.size(); ++y) {
                    const double gap = std::abs(
                        wrap_angle(g.bearing(g.id(i), g.id(ns[x].index)) - g.bearing(g.id(i), g.id(ns[y].index))));
                    EXPECT_GE(gap, p.min_edge_separation_deg - 1e-9);
                }
            }
        }
    }
}

TEST(Synthetic, JsonRoundTrip) {
    SyntheticWorldParams p;
    p.node_count = 40;
    p.episode_count = 15;
    const auto w = gen_synthetic(p);
    const auto doc = to_json(w);
    const auto back = synthetic_world_from_json(doc);
    EXPECT_EQ(to_json(back).dump(), doc.dump());
    auto bad = doc;
    bad["format_version"] = 99;
    EXPECT_THROW(synthetic_world_from_json(bad), DataError);
    bad = doc;
    bad["episodes"][0]["gt_path"] = {"n00"};
    EXPECT_THROW(synthetic_world_from_json(bad), DataError);
}

TEST(Synthetic, InvalidParams) {
    SyntheticWorldParams p;
    p.node_count = 1;
    EXPECT_THROW(gen_synthetic(p), DataError);
    p = {};
    p.min_edge_separation_deg = 180.0;
    EXPECT_THROW(gen_synthetic(p), DataError);
    p = {};
    p.min_episode_length_m = 30.0;
    p.max_episode_length_m = 10.0;
    EXPECT_THROW(gen_synthetic(p), DataError);
    p = {};
    p.min_episode_length_m = 500.0;
    p.max_episode_length_m = 600.0;
    EXPECT_THROW(gen_synthetic(p), DataError);
}

TEST(DescribeRoute, Phrases) {
    const auto g = fx::graph({{"A", {0, 0, 0}}, {"B", {0, 4, 0}}, {"C", {-3, 4, 0}}}, {{"A", "B"}, {"B", "C"}});
    const std::vector<NodeId> path{"A", "B", "C"};
    EXPECT_EQ(describe_route(*g, path, 0.0), "Go straight and walk 4.0 meters. Turn left and walk 3.0 meters. Then stop.");
    EXPECT_EQ(describe_route(*g, path, 180.0).substr(0, 11), "Turn around");
    const std::vector<NodeId> stay{"A"};
    EXPECT_EQ(describe_route(*g, stay, 0.0), "Stop where you are.");
}

namespace {

std::vector<nlohmann::json> export_lines(std::span<const EpisodeSpec> eps, ActionSpace space, Variant v = {}) {
    std::ostringstream out;
    export_bc(eps, space, v, out);
    std::vector<nlohmann::json> lines;
    std::istringstream in(out.str());
    for (std::string line; std::getline(in, line);) lines.push_back(nlohmann::json::parse(line));
    return lines;
}

}  // namespace

TEST(ExportBc, TwoNodeEpisode) {
    const auto g = fx::graph({{"A", {0, 0, 0}}, {"B", {0, 2, 0}}}, {{"A", "B"}});
    const std::vector<EpisodeSpec> eps{fx::spec(g, {"A", "B"}, 0.0, ActionSpace::pano)};
    const auto low = export_lines(eps, ActionSpace::low);
    ASSERT_EQ(low.size(), 2u);
    EXPECT_EQ(low[0]["target_token"], "move");
    EXPECT_EQ(low[1]["target_token"], "stop");
    EXPECT_EQ(low[0]["step"], 1);
    EXPECT_EQ(low[1]["step"], 2);
    EXPECT_EQ(low[0]["episode_id"], "ep");
    EXPECT_EQ(low[0]["schema_version"], kPromptSchemaVersion);
    const auto pano = export_lines(eps, ActionSpace::pano);
    ASSERT_EQ(pano.size(), 2u);
    EXPECT_EQ(pano[0]["target_token"], "0");
    EXPECT_EQ(pano[1]["target_token"], "stop");
}

TEST(ExportBc, DeterministicAndReplayable) {
    const auto w = fx::small_world(9, 60, 30);
    for (const auto space : {ActionSpace::low, ActionSpace::pano}) {
        std::ostringstream a;
        std::ostringstream b;
        export_bc(w.episodes, space, {}, a);
        export_bc(w.episodes, space, {}, b);
        EXPECT_EQ(a.str(), b.str());

        const auto lines = export_lines(w.episodes, space);
        std::map<std::string, std::vector<Action>> targets;
        for (const auto& l : lines) targets[l["episode_id"].get<std::string>()].push_back(
                action_from_token(l["target_token"].get<std::string>()));
        for (auto spec : w.episodes) {
            spec.space = space;
            spec.variant.max_steps = 1000;
            const auto rec = replay(spec, targets.at(spec.episode_id));
            EXPECT_TRUE(rec.stopped);
            EXPECT_EQ(rec.path.back(), spec.goal);
        }
    }
}

TEST(ExportBc, AdjustStepsAreNotTargets) {
    const auto w = fx::small_world(4, 60, 30);
    Variant v;
    v.auto_adjust = true;
    for (const auto& l : export_lines(w.episodes, ActionSpace::low, v)) EXPECT_NE(l["target_token"], "adjust");
}
