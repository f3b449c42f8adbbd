#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <new>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "semloft/config.hpp"
#include "semloft/error.hpp"
#include "semloft/pgm.hpp"
#include "semloft/pipeline.hpp"
#include "semloft/render.hpp"
#include "semloft/synth.hpp"
#include "semloft/world_json.hpp"

namespace {

using namespace semloft;

int report(std::string_view kind, const std::string& message, int code)
{
    nlohmann::json j;
    j["error"] = {{"kind", kind}, {"message", message}};
    std::cerr << j.dump() << '\n';
    return code;
}

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Capacity:
    case ErrorKind::Stall: return 3;
    default: return 2;
    }
}

std::string sibling(const std::string& out, const std::string& suffix)
{
    std::filesystem::path p(out);
    return (p.parent_path() / (p.stem().string() + suffix)).string();
}

struct ExtractArgs {
    std::string map, out, trace, kb, init_world, metrics, render;
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<long> iters;
    std::optional<int> chains;
    std::string init;
    bool invert = false;
};

int cmd_extract(const ExtractArgs& a)
{
    Config cfg = load_config(a.config);
    if (a.seed)
        cfg.chain.seed = *a.seed;
    if (a.iters)
        cfg.chain.max_iterations = *a.iters;
    if (a.chains)
        cfg.chain.chains = *a.chains;
    if (!a.init.empty())
        cfg.set("chain.init", a.init);
    if (a.invert)
        cfg.invert = true;
    if (!a.kb.empty())
        cfg.kb_file = a.kb;
    if (!a.trace.empty() && cfg.chain.record_every == 0)
        cfg.chain.record_every = 100;
    cfg.validate();

    const OccupancyGrid grid = load_pgm(a.map);
    RunOptions options;
    if (!a.init_world.empty())
        options.initial = load_world(a.init_world);
    const ExtractResult r = extract(grid, cfg, options);

    save_world(a.out, r.world, r.frame());
    write_text_file(a.metrics.empty() ? sibling(a.out, ".metrics.json") : a.metrics,
                    metrics_json(r.world, r.score, r.cell_prediction_rate));
    if (!a.trace.empty()) {
        std::string lines;
        for (const TraceSample& s : r.trace.samples) {
            nlohmann::json j;
            j["iteration"] = s.iteration;
            j["log_posterior"] = s.log_posterior;
            j["world"] = nlohmann::json::parse(world_to_json_line(s.world));
            lines += j.dump() + "\n";
        }
        write_text_file(a.trace, lines);
    }
    if (!a.render.empty())
        write_overlay_png(a.render, r.map.classified, r.world, cfg.wall_thickness);

    nlohmann::json summary;
    summary["units"] = r.world.size();
    summary["doors"] = r.world.doors.size();
    summary["K"] = r.cell_prediction_rate;
    summary["log_posterior"] = r.score.log_posterior;
    summary["acceptance_rate"] = r.trace.acceptance_rate();
    summary["best_iteration"] = r.trace.best_iteration;
    std::cout << summary.dump() << '\n';
    return 0;
}

struct SynthArgs {
    std::string world, out, world_out;
    std::optional<std::string> config;
    std::optional<double> flip_rate, clutter;
    std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a)
{
    Config cfg = load_config(a.config);
    if (a.flip_rate)
        cfg.synth_flip_rate = *a.flip_rate;
    if (a.clutter)
        cfg.synth_clutter = *a.clutter;
    if (a.seed)
        cfg.synth_seed = *a.seed;
    cfg.validate();

    WorldFrame frame;
    const SemanticWorld world = load_world(a.world, &frame);
    const WorldRasterParams raster{cfg.wall_thickness, frame.width, frame.height};
    const NoiseModel noise = cfg.synth_flip_rate == 0.0 && cfg.synth_clutter == 0.0
                                 ? NoiseModel::identity()
                                 : NoiseModel::uniform_flip(cfg.synth_flip_rate, cfg.synth_clutter, cfg.synth_seed);
    OccupancyGrid grid = synth_map(world, raster, noise);
    if (frame.resolution) {
        grid.resolution = *frame.resolution;
        grid.has_resolution = true;
    }
    save_pgm(a.out, grid);
    if (!a.world_out.empty())
        save_world(a.world_out, world, frame);
    return 0;
}

int cmd_score(const std::string& map, const std::string& world_path, const std::string& out,
              const std::optional<std::string>& config, bool invert)
{
    Config cfg = load_config(config);
    if (invert)
        cfg.invert = true;
    cfg.validate();
    const PreparedMap prepared = prepare_map(load_pgm(map), cfg);
    WorldFrame frame;
    const SemanticWorld world = load_world(world_path, &frame);
    if (frame.width != prepared.classified.width || frame.height != prepared.classified.height)
        throw Error(ErrorKind::Geometry, "world frame " + std::to_string(frame.width) + "x" +
                                             std::to_string(frame.height) + " does not match the map");
    const ScoreReport r = score_report(prepared, world, cfg);
    const std::string text = metrics_json(r.world, r.score, r.cell_prediction_rate);
    if (out.empty())
        std::cout << text;
    else
        write_text_file(out, text);
    return 0;
}

int cmd_detect(const std::string& map, const std::string& out, const std::optional<std::string>& config,
               bool invert)
{
    Config cfg = load_config(config);
    if (invert)
        cfg.invert = true;
    cfg.validate();
    const PreparedMap prepared = prepare_map(load_pgm(map), cfg);
    const std::string text = detections_to_json(detect_all(prepared.classified, detector_params(cfg, prepared)));
    if (out.empty())
        std::cout << text;
    else
        write_text_file(out, text);
    return 0;
}

int cmd_render(const std::string& map, const std::string& world_path, const std::string& out,
               const std::optional<std::string>& config, bool invert)
{
    Config cfg = load_config(config);
    if (invert)
        cfg.invert = true;
    cfg.validate();
    const PreparedMap prepared = prepare_map(load_pgm(map), cfg);
    SemanticWorld world;
    if (!world_path.empty())
        world = load_world(world_path);
    const std::string ext = std::filesystem::path(out).extension().string();
    if (ext == ".png") {
        write_overlay_png(out, prepared.classified, world, cfg.wall_thickness);
    } else if (ext == ".pgm") {
        // Gray levels per overlay class, darkest for occupied.
        static constexpr double kLevels[] = {1.0, 0.5, 0.0, 0.25, 0.85, 0.7};
        const auto idx = overlay_indices(prepared.classified, world, cfg.wall_thickness);
        OccupancyGrid img(prepared.classified.width, prepared.classified.height);
        for (std::size_t i = 0; i < idx.size(); ++i)
            img.cells[i] = kLevels[idx[i]];
        save_pgm(out, img);
    } else {
        throw Error(ErrorKind::Config, "render output must end in .png or .pgm: " + out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Semantic world extraction from occupancy grid maps"};
    app.require_subcommand(1);

    std::optional<std::string> config;
    bool invert = false;

    ExtractArgs ex;
    auto* extract = app.add_subcommand("extract", "Extract a semantic world from a map");
    extract->add_option("--map", ex.map, "Input PGM")->required();
    extract->add_option("--out", ex.out, "Output world JSON")->required();
    extract->add_option("--config", ex.config, "Config file");
    extract->add_option("--seed", ex.seed, "Chain seed");
    extract->add_option("--iters", ex.iters, "Chain iterations");
    extract->add_option("--init", ex.init, "Initialization")->check(CLI::IsMember({"random", "detected"}));
    extract->add_option("--trace", ex.trace, "Line-delimited JSON trace output");
    extract->add_option("--chains", ex.chains, "Independent chains");
    extract->add_option("--kb", ex.kb, "Knowledge-base file");
    extract->add_option("--init-world", ex.init_world, "Starting world JSON");
    extract->add_option("--metrics", ex.metrics, "Metrics JSON output (default <out>.metrics.json)");
    extract->add_option("--render", ex.render, "PNG overlay output");
    extract->add_flag("--invert", ex.invert, "Treat bright cells as occupied");

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "Render a world into a synthetic map");
    synth->add_option("--world", sy.world, "Ground-truth world JSON")->required();
    synth->add_option("--out", sy.out, "Output PGM")->required();
    synth->add_option("--world-out", sy.world_out, "Copy of the ground-truth world");
    synth->add_option("--config", sy.config, "Config file");
    synth->add_option("--flip-rate", sy.flip_rate, "Per-cell class flip probability");
    synth->add_option("--clutter", sy.clutter, "Clutter fraction of free cells");
    synth->add_option("--seed", sy.seed, "Noise seed");

    std::string map, world, out;
    auto* score = app.add_subcommand("score", "Score a world against a map");
    score->add_option("--map", map, "Input PGM")->required();
    score->add_option("--world", world, "World JSON")->required();
    score->add_option("--out", out, "Report JSON (stdout if omitted)");
    score->add_option("--config", config, "Config file");
    score->add_flag("--invert", invert, "Treat bright cells as occupied");

    auto* detect = app.add_subcommand("detect", "Detect walls, doors and unit candidates");
    detect->add_option("--map", map, "Input PGM")->required();
    detect->add_option("--out", out, "Candidates JSON (stdout if omitted)");
    detect->add_option("--config", config, "Config file");
    detect->add_flag("--invert", invert, "Treat bright cells as occupied");

    auto* render = app.add_subcommand("render", "Draw a world over the classified map");
    render->add_option("--map", map, "Input PGM")->required();
    render->add_option("--world", world, "World JSON");
    render->add_option("--out", out, "Output .png or .pgm")->required();
    render->add_option("--config", config, "Config file");
    render->add_flag("--invert", invert, "Treat bright cells as occupied");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("config", e.what(), 2);
    }

    try {
        if (*extract)
            return cmd_extract(ex);
        if (*synth)
            return cmd_synth(sy);
        if (*score)
            return cmd_score(map, world, out, config, invert);
        if (*detect)
            return cmd_detect(map, out, config, invert);
        return cmd_render(map, world, out, config, invert);
    } catch (const Error& e) {
        return report(to_string(e.kind()), e.what(), exit_code(e.kind()));
    } catch (const std::bad_alloc&) {
        return report("capacity", "out of memory", 3);
    } catch (const std::exception& e) {
        return report("internal", e.what(), 1);
    }
}
