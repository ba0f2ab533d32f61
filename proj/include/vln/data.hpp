#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vln/prompts.hpp"
#include "vln/simulator.hpp"

namespace vln {

/// One trajectory of an R2R split file.
struct R2REpisode {
    int path_id = 0;
    std::string scan;
    std::vector<NodeId> path;
    double heading_deg = 0.0;
    double distance_m = 0.0;
    std::vector<std::string> instructions;
};

enum class HeadingUnits { radians, degrees };

struct R2RLoadOptions {
    /// Keep a single instruction per trajectory (offline evaluation uses index 2).
    std::optional<int> instruction_index;
    HeadingUnits heading_units = HeadingUnits::radians;
    ActionSpace space = ActionSpace::pano;
    Variant variant{};
};

/// Episodes plus the graphs they run on.
struct Dataset {
    std::string name;
    std::map<std::string, NavGraphPtr> graphs;
    std::vector<EpisodeSpec> episodes;
    std::size_t trajectories = 0;
};

/// Validates the split schema; every trajectory must carry exactly three instructions.
std::vector<R2REpisode> parse_r2r_split(const nlohmann::json& doc,
                                        HeadingUnits units = HeadingUnits::radians);

/// One EpisodeSpec per (trajectory, instruction). Graphs are read from
/// `<connectivity_root>/<scan>_connectivity.json`, once per scan.
Dataset load_r2r(const std::filesystem::path& split_file, const std::filesystem::path& connectivity_root,
                 const R2RLoadOptions& options = {});

struct SyntheticWorldParams {
    int node_count = 60;
    double area_side_m = 30.0;
    double connect_radius_m = 6.0;
    /// Minimum angle between two edges at the same node. Above 30 degrees every neighbor
    /// can be centered from some heading on the turn grid.
    double min_edge_separation_deg = 35.0;
    double min_episode_length_m = 5.0;
    double max_episode_length_m = 20.0;
    int episode_count = 200;
    std::uint64_t seed = 42;

    void validate() const;
};

struct SyntheticWorld {
    static constexpr int kFormatVersion = 1;

    SyntheticWorldParams params;
    NavGraphPtr graph;
    std::vector<EpisodeSpec> episodes;
};

/// Random geometric graph thinned to the edge separation (largest component kept) with start/goal pairs whose walkable
/// distance lies in the requested range. gt_path is the lexicographically smallest shortest
/// path. Pure function of `params`.
SyntheticWorld gen_synthetic(const SyntheticWorldParams& params);

/// Mechanical directions for a node path, e.g. "Turn left and walk 3.2 meters. ... Then stop.".
std::string describe_route(const NavGraph& graph, std::span<const NodeId> path, double start_heading_deg);

nlohmann::json to_json(const SyntheticWorldParams& params);
nlohmann::json to_json(const SyntheticWorld& world);
SyntheticWorld synthetic_world_from_json(const nlohmann::json& doc);

/// Applies an action space and variant to every episode.
void configure(std::span<EpisodeSpec> episodes, ActionSpace space, const Variant& variant);

/// One JSON line per learnable expert step:
/// {episode_id, instruction_index, step, prompt, target_token, schema_version}.
/// Throws ExpertError naming the episode when no expert exists.
void export_bc(std::span<const EpisodeSpec> episodes, ActionSpace space, const Variant& variant,
               std::ostream& out, const PromptOptions& prompt_options = {});

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Where the episodes of a named split come from, checked in order:
///   <data_root>/R2R_<split>.json with graphs under <data_root>/connectivity/,
///   <data_root>/synthetic_<split>.json (a serialized SyntheticWorld),
///   and, only when no data_root is given, an in-memory synthetic world seeded with
///   fnv1a(split) ^ seed.
struct SplitSource {
    std::optional<std::filesystem::path> data_root;
    std::string split;
    std::optional<int> instruction_index;
    std::uint64_t seed = 42;
    SyntheticWorldParams synthetic{};  ///< seed is overridden as described above
};

/// Throws DataError when a data_root is given but holds neither file.
Dataset load_split(const SplitSource& source);

}  // namespace vln
