#include "semloft/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <json.hpp>

#include "semloft/error.hpp"

namespace semloft {

PreparedMap prepare_map(const OccupancyGrid& source, const Config& config)
{
    source.validate();
    OccupancyGrid grid = source;
    if (config.invert)
        for (double& v : grid.cells)
            v = 1.0 - v;
    PreparedMap out;
    out.resolution = source.resolution;
    out.has_resolution = source.has_resolution;
    out.classified = classify(grid, config.classify);
    if (config.align && count_states(out.classified)[int(CellState::Occupied)] > 0) {
        const OrientationEstimate est = dominant_orientation(out.classified, config.align_step_deg);
        if (est.angle_deg != 0.0) {
            out.rotation_deg = est.angle_deg;
            out.classified = classify(rotate_grid(grid, est.angle_deg), config.classify);
        }
    }
    return out;
}

WorldRules world_rules(const Config& config, const PreparedMap& map)
{
    WorldRules r = config.rules;
    if (map.has_resolution && !config.door_bounds_explicit) {
        r.door_min_width = std::max(1, int(std::lround(0.7 / map.resolution)));
        r.door_max_width = std::max(r.door_min_width, int(std::lround(1.2 / map.resolution)));
    }
    return r;
}

DetectorParams detector_params(const Config& config, const PreparedMap& map)
{
    DetectorParams d = config.detect;
    const WorldRules r = world_rules(config, map);
    d.door_min_width = r.door_min_width;
    d.door_max_width = r.door_max_width;
    d.wall_thickness = config.wall_thickness;
    d.min_unit_side = r.min_unit_side;
    return d;
}

ScoringParams scoring_params(const Config& config, const PreparedMap& map, const Detections& detections)
{
    ScoringParams s;
    s.psi = config.psi;
    s.lookup = config.lookup;
    s.gaussian_sigma = config.sigma;
    s.theta_threshold = config.theta_threshold;
    s.squared_distance = config.squared_distance;
    s.classify = config.classify;
    s.raster = {config.wall_thickness, map.classified.width, map.classified.height};
    s.relations = config.relations;
    s.relations.wall_thickness = config.wall_thickness;
    s.unit_classes.ratio_big = config.ratio_big;
    s.unit_classes.area_big = config.area_big_m2 / (map.resolution * map.resolution);
    if (config.area_big_mode == AreaBigMode::Adaptive && !detections.units.empty()) {
        std::vector<double> areas;
        for (const UnitCandidate& c : detections.units)
            areas.push_back(double(c.rect.area()));
        std::sort(areas.begin(), areas.end());
        const std::size_t n = areas.size();
        const double median = n % 2 ? areas[n / 2] : 0.5 * (areas[n / 2 - 1] + areas[n / 2]);
        s.unit_classes.area_big = config.area_big_factor * median;
    }
    s.kb = config.knowledge_base();
    return s;
}

WorldFrame ExtractResult::frame() const
{
    WorldFrame f;
    f.width = map.classified.width;
    f.height = map.classified.height;
    if (map.has_resolution)
        f.resolution = map.resolution;
    f.rotation_deg = map.rotation_deg;
    return f;
}

ExtractResult extract(const OccupancyGrid& source, const Config& config, const RunOptions& options)
{
    config.validate();
    return extract(prepare_map(source, config), config, options);
}

ExtractResult extract(PreparedMap map, const Config& config, const RunOptions& options)
{
    config.validate();
    ExtractResult r;
    r.map = std::move(map);
    r.detections = detect_all(r.map.classified, detector_params(config, r.map));
    r.scoring = scoring_params(config, r.map, r.detections);
    ChainContext ctx;
    ctx.map = &r.map.classified;
    ctx.scoring = r.scoring;
    ctx.rules = world_rules(config, r.map);
    ctx.config = config.chain;
    ctx.detections = r.detections;
    r.trace = run(ctx, options);
    r.world = r.trace.best_world;
    annotate(r.world, r.scoring);
    r.score = posterior_log(r.map.classified, r.world, r.scoring);
    r.cell_prediction_rate = cell_prediction_rate(r.map.classified, r.world, r.scoring);
    return r;
}

ScoreReport score_report(const PreparedMap& map, const SemanticWorld& world, const Config& config)
{
    config.validate();
    const Detections detections = config.area_big_mode == AreaBigMode::Adaptive
                                      ? detect_all(map.classified, detector_params(config, map))
                                      : Detections{};
    const ScoringParams params = scoring_params(config, map, detections);
    ScoreReport r;
    r.world = world;
    r.world.relations.reset();
    r.world.theta.reset();
    validate_world(r.world, params.raster, world_rules(config, map));
    annotate(r.world, params, true);
    r.score = posterior_log(map.classified, r.world, params);
    r.cell_prediction_rate = cell_prediction_rate(map.classified, r.world, params);
    return r;
}

std::string metrics_json(const SemanticWorld& world, const PosteriorScore& score, double k)
{
    using nlohmann::json;
    json j;
    j["K"] = k;
    j["log_likelihood"] = score.log_likelihood;
    j["log_prior"] = score.log_prior;
    j["log_posterior"] = score.log_posterior;
    j["overlap_cells"] = score.counts.overlap_cells;
    j["unit_count"] = world.size();
    json types = {{"room", 0}, {"corridor", 0}, {"hall", 0}};
    for (UnitType t : world.types)
        types[std::string(to_string(t))] = types[std::string(to_string(t))].get<int>() + 1;
    j["type_counts"] = types;
    j["door_count"] = world.doors.size();
    json pairs = json::array();
    for (const PairTerm& p : score.pairs)
        pairs.push_back({{"p", p.p}, {"q", p.q}, {"d", p.d}, {"b", std::exp(p.log_b)}});
    j["per_pair_b"] = pairs;
    return j.dump(2) + "\n";
}

}  // namespace semloft
