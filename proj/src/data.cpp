#include "vln/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <tuple>

#include <fmt/core.h>

#include "vln/errors.hpp"
#include "vln/expert.hpp"

namespace vln {

namespace {

constexpr int kRetriesPerEpisode = 1000;

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError(fmt::format("cannot open {}", path.string()));
    try {
        nlohmann::json doc;
        in >> doc;
        return doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
    }
}

/// mt19937_64 output is fixed by the standard; the distributions are not, so draw by hand.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

   private:
    std::mt19937_64 engine_;
};

std::vector<std::size_t> largest_component(std::size_t n, const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<int> label(n, -1);
    std::vector<std::size_t> best;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        std::vector<std::size_t> members{s};
        label[s] = static_cast<int>(s);
        for (std::size_t head = 0; head < members.size(); ++head) {
            for (const auto v : adj[members[head]]) {
                if (label[v] < 0) {
                    label[v] = static_cast<int>(s);
                    members.push_back(v);
                }
            }
        }
        // components are discovered from their smallest member, so strict > keeps the earliest on ties
        if (members.size() > best.size()) best = std::move(members);
    }
    std::sort(best.begin(), best.end());
    return best;
}

std::string turn_phrase(double rel) {
    if (std::abs(rel) <= 20.0) return "Go straight";
    if (std::abs(rel) > 135.0) return "Turn around";
    if (rel < 0.0) return rel < -60.0 ? "Turn left" : "Bear left";
    return rel > 60.0 ? "Turn right" : "Bear right";
}

}  // namespace

std::vector<R2REpisode> parse_r2r_split(const nlohmann::json& doc, HeadingUnits units) {
    if (!doc.is_array()) throw DataError("R2R split must be a JSON array");
    std::vector<R2REpisode> out;
    for (const auto& item : doc) {
        R2REpisode e;
        try {
            e.path_id = item.at("path_id").get<int>();
            e.scan = item.at("scan").get<std::string>();
            e.path = item.at("path").get<std::vector<std::string>>();
            const double heading = item.at("heading").get<double>();
            e.heading_deg = units == HeadingUnits::radians ? heading * 180.0 / std::numbers::pi : heading;
            e.distance_m = item.value("distance", 0.0);
            e.instructions = item.at("instructions").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& ex) {
            throw DataError(fmt::format("malformed R2R entry {}: {}", item.value("path_id", -1), ex.what()));
        }
        if (e.instructions.size() != 3) {
            throw DataError(fmt::format("path_id {}: expected 3 instructions, found {}", e.path_id,
                                        e.instructions.size()));
        }
        if (e.path.empty()) throw DataError(fmt::format("path_id {}: empty path", e.path_id));
        out.push_back(std::move(e));
    }
    return out;
}

Dataset load_r2r(const std::filesystem::path& split_file, const std::filesystem::path& connectivity_root,
                 const R2RLoadOptions& options) {
    if (options.instruction_index && (*options.instruction_index < 0 || *options.instruction_index > 2)) {
        throw DataError(fmt::format("instruction index {} out of range [0, 2]", *options.instruction_index));
    }
    const auto entries = parse_r2r_split(read_json(split_file), options.heading_units);

    Dataset ds;
    ds.name = split_file.stem().string();
    ds.trajectories = entries.size();
    for (const auto& e : entries) {
        auto& graph = ds.graphs[e.scan];
        if (!graph) {
            const auto file = connectivity_root / (e.scan + "_connectivity.json");
            if (!std::filesystem::exists(file)) {
                throw DataError(fmt::format("path_id {}: unknown scan {} (no {})", e.path_id, e.scan, file.string()));
            }
            graph = std::make_shared<const NavGraph>(load_connectivity_file(file));
        }
        for (std::size_t i = 0; i + 1 < e.path.size(); ++i) {
            if (!graph->contains(e.path[i]) || !graph->contains(e.path[i + 1]) ||
                !graph->has_edge(e.path[i], e.path[i + 1])) {
                throw DataError(fmt::format("path_id {}: ({}, {}) is not an edge of scan {}", e.path_id,
                                            e.path[i], e.path[i + 1], e.scan));
            }
        }
        if (!graph->contains(e.path.front())) {
            throw DataError(fmt::format("path_id {}: node {} not in scan {}", e.path_id, e.path.front(), e.scan));
        }
        for (int k = 0; k < 3; ++k) {
            if (options.instruction_index && *options.instruction_index != k) continue;
            EpisodeSpec spec;
            spec.episode_id = std::to_string(e.path_id);
            spec.instruction_index = k;
            spec.graph = graph;
            spec.start = e.path.front();
            spec.start_heading_deg = e.heading_deg;
            spec.goal = e.path.back();
            spec.instruction = e.instructions[static_cast<std::size_t>(k)];
            spec.gt_path = e.path;
            spec.space = options.space;
            spec.variant = options.variant;
            ds.episodes.push_back(std::move(spec));
        }
    }
    return ds;
}

void SyntheticWorldParams::validate() const {
    if (node_count < 2) throw DataError("synthetic world needs at least 2 nodes");
    if (!(area_side_m > 0.0)) throw DataError("area side must be positive");
    if (!(connect_radius_m > 0.0)) throw DataError("connect radius must be positive");
    if (!(min_edge_separation_deg >= 0.0 && min_edge_separation_deg < 180.0)) {
        throw DataError("edge separation must lie in [0, 180) degrees");
    }
    if (!(min_episode_length_m >= 0.0) || !(max_episode_length_m >= min_episode_length_m)) {
        throw DataError("episode length range must satisfy 0 <= min <= max");
    }
    if (episode_count < 0) throw DataError("episode count must not be negative");
}

std::string describe_route(const NavGraph& graph, std::span<const NodeId> path, double start_heading_deg) {
    std::string text;
    double heading = start_heading_deg;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const double b = graph.bearing(path[i], path[i + 1]);
        const auto length = graph.edge_length(path[i], path[i + 1]);
        text += fmt::format("{} and walk {:.1f} meters. ", turn_phrase(wrap_angle(b - heading)), length.value_or(0.0));
        heading = b;
    }
    text += path.size() > 1 ? "Then stop." : "Stop where you are.";
    return text;
}

SyntheticWorld gen_synthetic(const SyntheticWorldParams& params) {
    params.validate();
    Rng rng(params.seed);
    const auto n = static_cast<std::size_t>(params.node_count);
    const int width = static_cast<int>(std::to_string(n - 1).size());

    std::vector<NavGraph::Node> points;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform() * params.area_side_m;
        const double y = rng.uniform() * params.area_side_m;
        points.push_back({fmt::format("n{:0{}}", i, width), {x, y, 0.0}});
    }
    struct Link {
        double length;
        std::size_t i, j;
    };
    std::vector<Link> links;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = euclidean_distance(points[i].position, points[j].position);
            if (d <= params.connect_radius_m && horizontal_distance(points[i].position, points[j].position) > 0.0) {
                links.push_back({d, i, j});
            }
        }
    }
    std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) {
        return std::tie(a.length, a.i, a.j) < std::tie(b.length, b.i, b.j);
    });

    // shortest links first; a link is dropped when it leaves either endpoint too close in
    // bearing to a link already kept there
    std::vector<std::vector<std::size_t>> adj(n);
    std::vector<std::vector<double>> bearings(n);
    const auto separated = [&](std::size_t node, double b) {
        return std::all_of(bearings[node].begin(), bearings[node].end(), [&](double other) {
            return std::abs(wrap_angle(b - other)) >= params.min_edge_separation_deg;
        });
    };
    for (const auto& link : links) {
        const double forward = bearing(points[link.i].position, points[link.j].position);
        const double backward = normalize_heading(forward + 180.0);
        if (!separated(link.i, forward) || !separated(link.j, backward)) continue;
        bearings[link.i].push_back(forward);
        bearings[link.j].push_back(backward);
        adj[link.i].push_back(link.j);
        adj[link.j].push_back(link.i);
    }
    const auto keep = largest_component(n, adj);
    std::vector<bool> kept(n, false);
    std::vector<NavGraph::Node> nodes;
    for (const auto i : keep) {
        kept[i] = true;
        nodes.push_back(points[i]);
    }
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (const auto i : keep) {
        for (const auto j : adj[i]) {
            if (i < j && kept[j]) edges.emplace_back(points[i].id, points[j].id);
        }
    }

    SyntheticWorld world;
    world.params = params;
    world.graph = std::make_shared<const NavGraph>(fmt::format("synthetic-{}", params.seed), std::move(nodes), edges);
    const NavGraph& graph = *world.graph;

    for (int e = 0; e < params.episode_count; ++e) {
        bool placed = false;
        for (int attempt = 0; attempt < kRetriesPerEpisode && !placed; ++attempt) {
            const std::size_t a = rng.index(graph.size());
            const std::size_t b = rng.index(graph.size());
            const double heading = rng.uniform() * 360.0;
            if (a == b && params.min_episode_length_m > 0.0) continue;
            const auto d = graph.geodesic(a, b);
            if (!d || *d < params.min_episode_length_m || *d > params.max_episode_length_m) continue;

            EpisodeSpec spec;
            spec.episode_id = fmt::format("syn{}-{:04d}", params.seed, e);
            spec.graph = world.graph;
            spec.start = graph.id(a);
            spec.goal = graph.id(b);
            spec.start_heading_deg = heading;
            spec.gt_path = *graph.shortest_path(spec.start, spec.goal);
            spec.instruction = describe_route(graph, spec.gt_path, heading);
            world.episodes.push_back(std::move(spec));
            placed = true;
        }
        if (!placed) {
            throw DataError(fmt::format("could not place episode {} with length in [{}, {}] m after {} attempts", e,
                                        params.min_episode_length_m, params.max_episode_length_m,
                                        kRetriesPerEpisode));
        }
    }
    return world;
}

nlohmann::json to_json(const SyntheticWorldParams& p) {
    return {{"node_count", p.node_count},
            {"area_side_m", p.area_side_m},
            {"connect_radius_m", p.connect_radius_m},
            {"min_edge_separation_deg", p.min_edge_separation_deg},
            {"min_episode_length_m", p.min_episode_length_m},
            {"max_episode_length_m", p.max_episode_length_m},
            {"episode_count", p.episode_count},
            {"seed", p.seed}};
}

nlohmann::json to_json(const SyntheticWorld& world) {
    nlohmann::json episodes = nlohmann::json::array();
    for (const auto& e : world.episodes) {
        episodes.push_back({{"episode_id", e.episode_id},
                            {"start", e.start},
                            {"start_heading_deg", e.start_heading_deg},
                            {"goal", e.goal},
                            {"instruction", e.instruction},
                            {"gt_path", e.gt_path}});
    }
    return {{"format_version", SyntheticWorld::kFormatVersion},
            {"params", to_json(world.params)},
            {"graph", to_json(*world.graph)},
            {"episodes", std::move(episodes)}};
}

SyntheticWorld synthetic_world_from_json(const nlohmann::json& doc) {
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != SyntheticWorld::kFormatVersion) {
            throw DataError(fmt::format("unsupported synthetic world format_version {}", version));
        }
        SyntheticWorld world;
        const auto& p = doc.at("params");
        world.params.node_count = p.at("node_count").get<int>();
        world.params.area_side_m = p.at("area_side_m").get<double>();
        world.params.connect_radius_m = p.at("connect_radius_m").get<double>();
        world.params.min_edge_separation_deg = p.at("min_edge_separation_deg").get<double>();
        world.params.min_episode_length_m = p.at("min_episode_length_m").get<double>();
        world.params.max_episode_length_m = p.at("max_episode_length_m").get<double>();
        world.params.episode_count = p.at("episode_count").get<int>();
        world.params.seed = p.at("seed").get<std::uint64_t>();
        world.graph = std::make_shared<const NavGraph>(navgraph_from_json(doc.at("graph")));
        for (const auto& e : doc.at("episodes")) {
            EpisodeSpec spec;
            spec.episode_id = e.at("episode_id").get<std::string>();
            spec.graph = world.graph;
            spec.start = e.at("start").get<std::string>();
            spec.start_heading_deg = e.at("start_heading_deg").get<double>();
            spec.goal = e.at("goal").get<std::string>();
            spec.instruction = e.at("instruction").get<std::string>();
            spec.gt_path = e.at("gt_path").get<std::vector<std::string>>();
            spec.validate();
            world.episodes.push_back(std::move(spec));
        }
        return world;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(fmt::format("malformed synthetic world: {}", e.what()));
    } catch (const SimulationError& e) {
        throw DataError(fmt::format("inconsistent synthetic world: {}", e.what()));
    }
}

void configure(std::span<EpisodeSpec> episodes, ActionSpace space, const Variant& variant) {
    for (auto& e : episodes) {
        e.space = space;
        e.variant = variant;
    }
}

void export_bc(std::span<const EpisodeSpec> episodes, ActionSpace space, const Variant& variant,
               std::ostream& out, const PromptOptions& prompt_options) {
    for (const auto& original : episodes) {
        EpisodeSpec spec = original;
        spec.space = space;
        spec.variant = variant;
        std::vector<Action> actions;
        try {
            actions = expert_actions(spec);
        } catch (const Error& e) {
            throw ExpertError(fmt::format("export aborted at episode {}: {}", spec.episode_id, e.what()));
        }
        // replay without a step budget so long paths export completely
        spec.variant.max_steps = std::numeric_limits<int>::max() / 2;
        AgentState state = initial_state(spec);
        for (const auto& action : actions) {
            const Observation obs = observe(state, spec);
            const Prompt prompt = render_state_prompt(state, obs, spec, prompt_options);
            const nlohmann::json line = {{"episode_id", spec.episode_id},
                                         {"instruction_index", spec.instruction_index},
                                         {"step", state.step},
                                         {"prompt", to_json(prompt)},
                                         {"target_token", action.token()},
                                         {"schema_version", kPromptSchemaVersion}};
            out << line.dump() << '\n';
            state = step(std::move(state), spec, action).state;
        }
    }
}

std::uint64_t fnv1a(std::string_view text, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Dataset load_split(const SplitSource& source) {
    if (source.instruction_index && (*source.instruction_index < 0 || *source.instruction_index > 2)) {
        throw DataError(fmt::format("instruction index {} out of range [0, 2]", *source.instruction_index));
    }
    Dataset ds;
    if (source.data_root) {
        const auto r2r = *source.data_root / fmt::format("R2R_{}.json", source.split);
        if (std::filesystem::exists(r2r)) {
            R2RLoadOptions options;
            options.instruction_index = source.instruction_index;
            return load_r2r(r2r, *source.data_root / "connectivity", options);
        }
        const auto synthetic = *source.data_root / fmt::format("synthetic_{}.json", source.split);
        if (!std::filesystem::exists(synthetic)) {
            throw DataError(fmt::format("split {}: neither {} nor {} exists", source.split, r2r.string(),
                                        synthetic.string()));
        }
        auto world = synthetic_world_from_json(read_json(synthetic));
        ds.graphs[world.graph->scan_id()] = world.graph;
        ds.episodes = std::move(world.episodes);
    } else {
        auto params = source.synthetic;
        params.seed = fnv1a(source.split) ^ source.seed;
        auto world = gen_synthetic(params);
        ds.graphs[world.graph->scan_id()] = world.graph;
        ds.episodes = std::move(world.episodes);
    }
    // synthetic episodes carry one instruction; a requested index only relabels it
    ds.name = source.split;
    ds.trajectories = ds.episodes.size();
    if (source.instruction_index) {
        for (auto& e : ds.episodes) e.instruction_index = *source.instruction_index;
    }
    return ds;
}

}  // namespace vln
