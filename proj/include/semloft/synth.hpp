#pragma once

#include "semloft/gridmap.hpp"
#include "semloft/world.hpp"

namespace semloft {

/// Renders a world into an occupancy grid: rasterize, map states to canonical intensities,
/// sprinkle clutter blobs over free cells, then apply the per-class confusion flips.
/// Deterministic for a fixed noise seed. Throws Geometry if a unit leaves the map.
OccupancyGrid synth_map(const SemanticWorld& world, const WorldRasterParams& raster, const NoiseModel& noise);

}  // namespace semloft
