#pragma once

#include <optional>
#include <vector>

#include "semloft/gridmap.hpp"
#include "semloft/world.hpp"

namespace semloft {

struct DetectorParams {
    int min_span = 8;
    double min_support = 0.6;
    int merge_gap = 6;
    double gap_support_min = 0.6;
    double extent_overlap_min = 0.7;
    int top_k = 200;
    int door_min_width = 2;
    int door_max_width = 8;
    int wall_thickness = 2;
    int min_unit_side = 6;

    void validate() const;
};

/// A band of parallel occupied runs. A Horizontal segment covers rows
/// [line, line + thickness) and columns [start, end); Vertical swaps the roles.
struct WallSegment {
    Axis axis = Axis::Horizontal;
    int line = 0;
    int thickness = 1;
    int start = 0;
    int end = 0;
    double support = 0.0;

    int last_line() const { return line + thickness - 1; }
    Rect rect() const;
    bool operator==(const WallSegment&) const = default;
};

struct DoorCandidate {
    DoorSite site;  ///< band rows and gap span on its wall
    int wall = -1;  ///< index into the wall list it was found on
    double gap_support = 0.0;

    int width_cells() const { return site.end - site.start; }
    /// Gap endpoints on the wall's first line, in lattice coordinates.
    std::array<std::array<int, 2>, 2> endpoints() const;
};

struct UnitCandidate {
    Rect rect;
    double score = 0.0;
    std::array<int, 4> walls{};  ///< bottom, top, left, right band indices
};

/// Row and column run-length scan; collinear runs closer than merge_gap are joined and
/// adjacent parallel runs grouped into bands. Sorted by support, descending.
std::vector<WallSegment> detect_walls(const ClassifiedGrid& map_c, const DetectorParams& params);

/// Open stretches along each band (fewer than half of the band's cells occupied) whose width
/// is within the door bounds and whose cells are mostly free. Sorted by gap support, descending.
std::vector<DoorCandidate> detect_doors(const ClassifiedGrid& map_c, const std::vector<WallSegment>& walls,
                                        const DetectorParams& params);

/// Rectangles bounded by two horizontal and two vertical bands, snapped to the bands' inner
/// faces. Each band must cover extent_overlap_min of the rectangle side. Best top_k by score.
/// Candidates leaving `bounds` (when given) are dropped.
std::vector<UnitCandidate> propose_units(const std::vector<WallSegment>& walls, const DetectorParams& params,
                                         std::optional<Rect> bounds = std::nullopt);

struct Detections {
    std::vector<WallSegment> walls;
    std::vector<DoorCandidate> doors;
    std::vector<UnitCandidate> units;
};

Detections detect_all(const ClassifiedGrid& map_c, const DetectorParams& params);

}  // namespace semloft
