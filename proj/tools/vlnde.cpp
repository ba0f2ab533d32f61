// vlnde: evaluation, BC export, step statistics, synthetic worlds and the episode server.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "vln/data.hpp"
#include "vln/errors.hpp"
#include "vln/evaluation.hpp"
#include "vln/expert.hpp"
#include "vln/http.hpp"
#include "vln/policies.hpp"

namespace fs = std::filesystem;

namespace {

struct DataFlags {
    std::string split = "val_unseen";
    std::string data_root;
    std::uint64_t seed = 42;
    std::optional<int> instruction_index;

    void add(CLI::App& cmd) {
        cmd.add_option("--split", split, "split name")->capture_default_str();
        cmd.add_option("--data-root", data_root,
                       "directory with R2R_<split>.json + connectivity/ or synthetic_<split>.json; "
                       "a synthetic world is generated when omitted");
        cmd.add_option("--seed", seed, "seed for synthetic data and the random policy")->capture_default_str();
        cmd.add_option("--instruction-index", instruction_index, "keep one instruction per trajectory (0-2)")
            ->check(CLI::Range(0, 2));
    }

    vln::Dataset load() const {
        vln::SplitSource source;
        if (!data_root.empty()) source.data_root = data_root;
        source.split = split;
        source.seed = seed;
        source.instruction_index = instruction_index;
        return vln::load_split(source);
    }
};

struct VariantFlags {
    double vfov = 105.0;
    bool no_adjust = false;
    int max_steps = 0;

    void add(CLI::App& cmd, bool with_max_steps) {
        cmd.add_option("--vfov", vfov, "vertical field of view in degrees")->capture_default_str();
        cmd.add_flag("--no-adjust", no_adjust, "disable the automatic turn towards the target before a move");
        if (with_max_steps) cmd.add_option("--max-steps", max_steps, "step budget (default 80 low, 20 pano)");
    }

    vln::Variant variant() const {
        vln::Variant v;
        v.fov.vfov_deg = vfov;
        v.fov.validate();
        v.auto_adjust = !no_adjust;
        v.max_steps = max_steps;
        return v;
    }
};

std::unique_ptr<vln::Policy> make_policy(const std::string& name, std::uint64_t seed) {
    if (name.rfind("remote:", 0) == 0) return std::make_unique<vln::RemotePolicy>(name);
    return vln::make_local_policy(name, seed);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw vln::DataError(fmt::format("cannot write {}", path.string()));
    out << content;
}

int run_eval(const DataFlags& data, const VariantFlags& variant, const std::string& space, const std::string& mode,
             const std::string& policy_name, double radius, const std::vector<double>& buckets,
             const std::string& out_dir) {
    auto policy = make_policy(policy_name, data.seed);
    const auto ds = data.load();

    vln::EvalOptions options;
    options.split = data.split;
    options.policy_name = policy_name;
    options.space = vln::action_space_from_string(space);
    options.mode = vln::eval_mode_from_string(mode);
    options.variant = variant.variant();
    options.metrics.success_radius_m = radius;
    options.bucket_edges = buckets;
    const auto result = vln::evaluate(ds.episodes, *policy, options);

    const std::string table = vln::to_table(result.report);
    std::cout << table;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "report.json", vln::to_json(result.report).dump(2) + "\n");
        write_file(fs::path(out_dir) / "report.txt", table);
        if (!result.records.empty()) {
            std::string lines;
            for (const auto& r : result.records) lines += vln::to_json(r).dump() + "\n";
            write_file(fs::path(out_dir) / "records.jsonl", lines);
        }
    }
    return 0;
}

int run_stats(const DataFlags& data, const VariantFlags& variant) {
    const auto ds = data.load();
    fmt::print("split={} trajectories={} episodes={}\n", ds.name, ds.trajectories, ds.episodes.size());
    for (const auto space : {vln::ActionSpace::low, vln::ActionSpace::pano}) {
        const auto stats = vln::step_stats(ds.episodes, space, variant.variant());
        fmt::print("{:<5} avg_steps={:.2f}\n", vln::to_string(space), stats.avg_steps);
        for (const auto& [steps, count] : stats.histogram) fmt::print("  {:>3} {}\n", steps, count);
    }
    return 0;
}

vln::HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

int run_serve(vln::ServerConfig config) {
    vln::apply_env_overrides(config);
    vln::ServiceOptions options;
    options.idle_timeout = std::chrono::seconds(config.idle_timeout_s);
    options.debug = config.debug;
    vln::EpisodeService service(
        [config](const std::string& split) {
            vln::SplitSource source;
            source.data_root = config.data_root;
            source.split = split;
            source.seed = config.seed;
            return vln::load_split(source);
        },
        options);
    vln::HttpServer server(service);
    const int port = server.bind(config.bind, config.port);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    fmt::print("listening on {}:{}{}\n", config.bind, port, config.debug ? " (debug)" : "");
    std::fflush(stdout);
    server.serve();
    g_server = nullptr;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"VLN-DE simulator and evaluation harness"};
    app.require_subcommand(1);

    DataFlags data;
    VariantFlags variant;
    std::string space = "pano";
    std::string mode = "online";
    std::string policy = "expert";
    double radius = vln::kDefaultSuccessRadiusM;
    std::vector<double> buckets;
    std::string out;

    auto* eval = app.add_subcommand("eval", "run a policy over a split and report metrics");
    data.add(*eval);
    variant.add(*eval, true);
    eval->add_option("--space", space)->check(CLI::IsMember({"low", "pano"}))->capture_default_str();
    eval->add_option("--mode", mode)->check(CLI::IsMember({"online", "offline"}))->capture_default_str();
    eval->add_option("--policy", policy, "expert, random, stop or remote:<url>")->capture_default_str();
    eval->add_option("--success-radius", radius, "meters")->capture_default_str();
    eval->add_option("--buckets", buckets, "comma-separated reference length edges in meters")->delimiter(',');
    eval->add_option("--out", out, "directory for report.json, report.txt and records.jsonl");

    DataFlags export_data;
    VariantFlags export_variant;
    std::string export_space = "pano";
    std::string export_out;
    std::optional<std::size_t> max_history;
    auto* exp = app.add_subcommand("export", "write the behavior cloning dataset as JSONL");
    export_data.add(*exp);
    export_variant.add(*exp, false);
    exp->add_option("--space", export_space)->check(CLI::IsMember({"low", "pano"}))->capture_default_str();
    exp->add_option("--out", export_out, "output file (stdout when omitted)");
    exp->add_option("--max-history", max_history, "history entries kept in each prompt");

    DataFlags stats_data;
    VariantFlags stats_variant;
    auto* stats = app.add_subcommand("stats", "expert step counts per action space");
    stats_data.add(*stats);
    stats_variant.add(*stats, false);

    vln::SyntheticWorldParams params;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "generate a synthetic world");
    gen->add_option("--seed", params.seed)->capture_default_str();
    gen->add_option("--nodes", params.node_count)->capture_default_str();
    gen->add_option("--side", params.area_side_m, "square side in meters")->capture_default_str();
    gen->add_option("--radius", params.connect_radius_m, "connection radius in meters")->capture_default_str();
    gen->add_option("--min-separation", params.min_edge_separation_deg, "minimum angle between edges at a node, degrees")
        ->capture_default_str();
    gen->add_option("--min-length", params.min_episode_length_m)->capture_default_str();
    gen->add_option("--max-length", params.max_episode_length_m)->capture_default_str();
    gen->add_option("--episodes", params.episode_count)->capture_default_str();
    gen->add_option("--out", gen_out, "output file (stdout when omitted)");

    vln::ServerConfig server_config;
    std::string config_file;
    std::string serve_root;
    std::optional<std::string> serve_bind;
    std::optional<int> serve_port;
    std::optional<int> idle_timeout;
    bool serve_debug = false;
    std::optional<std::uint64_t> serve_seed;
    auto* serve = app.add_subcommand("serve", "run the HTTP episode API");
    serve->add_option("--config", config_file, "JSON config: data_root, bind, port, idle_timeout_s, debug, seed");
    serve->add_option("--data-root", serve_root);
    serve->add_option("--bind", serve_bind);
    serve->add_option("--port", serve_port);
    serve->add_option("--idle-timeout", idle_timeout, "seconds");
    serve->add_flag("--debug", serve_debug, "enable GET /episodes/{token}/expert_action");
    serve->add_option("--seed", serve_seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*eval) return run_eval(data, variant, space, mode, policy, radius, buckets, out);
        if (*exp) {
            const auto ds = export_data.load();
            vln::PromptOptions prompt;
            prompt.max_history = max_history;
            if (export_out.empty()) {
                vln::export_bc(ds.episodes, vln::action_space_from_string(export_space), export_variant.variant(),
                               std::cout, prompt);
            } else {
                std::ofstream file(export_out, std::ios::binary);
                if (!file) throw vln::DataError(fmt::format("cannot write {}", export_out));
                vln::export_bc(ds.episodes, vln::action_space_from_string(export_space), export_variant.variant(),
                               file, prompt);
            }
            return 0;
        }
        if (*stats) return run_stats(stats_data, stats_variant);
        if (*gen) {
            const std::string doc = vln::to_json(vln::gen_synthetic(params)).dump(1) + "\n";
            if (gen_out.empty()) {
                std::cout << doc;
            } else {
                write_file(gen_out, doc);
            }
            return 0;
        }
        if (*serve) {
            if (!config_file.empty()) server_config = vln::load_server_config(config_file);
            if (!serve_root.empty()) server_config.data_root = serve_root;
            if (serve_bind) server_config.bind = *serve_bind;
            if (serve_port) server_config.port = *serve_port;
            if (idle_timeout) server_config.idle_timeout_s = *idle_timeout;
            if (serve_debug) server_config.debug = true;
            if (serve_seed) server_config.seed = *serve_seed;
            return run_serve(server_config);
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
