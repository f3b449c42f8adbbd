#pragma once

#include <string>

#include "semloft/config.hpp"
#include "semloft/detectors.hpp"
#include "semloft/gridmap.hpp"
#include "semloft/mcmc.hpp"
#include "semloft/scoring.hpp"
#include "semloft/world_json.hpp"

namespace semloft {

/// Classified, orientation-aligned map ready for detection and scoring.
struct PreparedMap {
    ClassifiedGrid classified;
    double rotation_deg = 0.0;
    double resolution = 0.05;
    bool has_resolution = false;
};

/// Optional inversion, classification and (when enabled and the map has occupied cells)
/// rotation by the dominant orientation.
PreparedMap prepare_map(const OccupancyGrid& source, const Config& config);

/// Door bounds follow the resolution when the map carries one and the config did not set them.
WorldRules world_rules(const Config& config, const PreparedMap& map);
DetectorParams detector_params(const Config& config, const PreparedMap& map);
/// The hall threshold in cells: fixed area over resolution squared, or a multiple of the
/// median candidate area in adaptive mode.
ScoringParams scoring_params(const Config& config, const PreparedMap& map, const Detections& detections);

struct ExtractResult {
    PreparedMap map;
    Detections detections;
    ScoringParams scoring;
    ChainTrace trace;
    SemanticWorld world;  ///< best world, annotated with types, relations and theta
    PosteriorScore score;
    double cell_prediction_rate = 0.0;

    WorldFrame frame() const;
};

ExtractResult extract(const OccupancyGrid& source, const Config& config, const RunOptions& options = {});
/// Same, starting from an already classified map.
ExtractResult extract(PreparedMap map, const Config& config, const RunOptions& options = {});

struct ScoreReport {
    SemanticWorld world;  ///< annotated
    PosteriorScore score;
    double cell_prediction_rate = 0.0;
};

/// Scores a world against a map prepared with the same config; types come from the world
/// when present.
ScoreReport score_report(const PreparedMap& map, const SemanticWorld& world, const Config& config);

std::string metrics_json(const SemanticWorld& world, const PosteriorScore& score, double cell_prediction_rate);

}  // namespace semloft
