#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "semloft/detectors.hpp"
#include "semloft/gridmap.hpp"
#include "semloft/mcmc.hpp"
#include "semloft/mln.hpp"
#include "semloft/scoring.hpp"
#include "semloft/world.hpp"

namespace semloft {

enum class AreaBigMode : std::uint8_t { Fixed, Adaptive };

/// Every tunable of the pipeline. Text form: `key = value` lines, `#` comments.
struct Config {
    ClassifyThresholds classify;
    bool invert = false;
    bool align = true;
    double align_step_deg = 0.5;

    int wall_thickness = 2;
    RelationParams relations;
    WorldRules rules;

    AreaBigMode area_big_mode = AreaBigMode::Fixed;
    double area_big_m2 = 40.0;
    double area_big_factor = 2.5;
    double ratio_big = 3.0;

    double psi = 0.5;
    double sigma = 5.0;
    double theta_threshold = 0.5;
    bool squared_distance = false;
    LookupTable lookup;

    mln::KbWeights kb_weights;
    std::string kb_file;

    DetectorParams detect;
    /// Set when door.min_width / door.max_width were given; otherwise the bounds follow the
    /// map resolution when the map carries one.
    bool door_bounds_explicit = false;

    ChainConfig chain;

    double synth_flip_rate = 0.0;
    double synth_clutter = 0.0;
    std::uint64_t synth_seed = 1;

    /// Sets one key; throws Config for unknown keys or invalid values.
    void set(std::string_view key, std::string_view value);
    void validate() const;

    /// Knowledge base: kb_file when set, the same-length base otherwise.
    mln::KnowledgeBase knowledge_base() const;
};

Config parse_config(std::string_view text);
/// Reads `path`; with no path, falls back to $SEMLOFT_CONFIG, then to defaults.
Config load_config(const std::optional<std::string>& path);

}  // namespace semloft
