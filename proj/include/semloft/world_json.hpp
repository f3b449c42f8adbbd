#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "semloft/detectors.hpp"
#include "semloft/world.hpp"

namespace semloft {

/// Map frame stored next to a world: raster size, optional resolution and the rotation that
/// was applied to the source map before extraction.
struct WorldFrame {
    int width = 0;
    int height = 0;
    std::optional<double> resolution;
    double rotation_deg = 0.0;
};

inline constexpr std::string_view kWorldSchema = "semworld/1";

/// Pretty-printed JSON with a trailing newline. Relations and theta are written when present.
std::string world_to_json(const SemanticWorld& world, const WorldFrame& frame);

/// Throws Format on schema violations and Geometry on invalid vertices or doors.
SemanticWorld world_from_json(std::string_view text, WorldFrame* frame = nullptr);

SemanticWorld load_world(const std::string& path, WorldFrame* frame = nullptr);
void save_world(const std::string& path, const SemanticWorld& world, const WorldFrame& frame);

/// Single-line form used for trace records.
std::string world_to_json_line(const SemanticWorld& world);

std::string detections_to_json(const Detections& detections);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace semloft
