#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semloft/gridmap.hpp"
#include "semloft/world.hpp"

namespace semloft {

/// Palette indices of an overlay image.
enum class OverlayColor : std::uint8_t { Free, Unknown, Occupied, Wall, Door, Interior };

/// Classified map with the world drawn on top: wall bands, door passages and unit interiors.
/// Row-major with the same row order as the grid (and its PGM form).
std::vector<std::uint8_t> overlay_indices(const ClassifiedGrid& map_c, const SemanticWorld& world, int wall_thickness);

/// Writes an indexed-color PNG of the overlay.
void write_overlay_png(const std::string& path, const ClassifiedGrid& map_c, const SemanticWorld& world,
                       int wall_thickness);

}  // namespace semloft
