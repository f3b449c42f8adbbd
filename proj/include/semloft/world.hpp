#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semloft/geometry.hpp"
#include "semloft/gridmap.hpp"

namespace semloft {

enum class UnitType : std::uint8_t { Room, Corridor, Hall };

std::string_view to_string(UnitType type);
UnitType parse_unit_type(std::string_view text);

enum class Relation : std::uint8_t { Irrelevant, Adjacent };

/// Axis-aligned rectangular space unit. The rectangle covers cells [x0,x1) x [y0,y1);
/// its outermost `wall_thickness` cells form the walls, the rest is free interior.
struct Unit {
    Rect rect;

    int width_cells() const { return rect.width(); }
    int height_cells() const { return rect.height(); }
    std::int64_t area_cells() const { return rect.area(); }
    double aspect_ratio() const;

    /// Lattice corners in canonical order: (x0,y0) first, then counter-clockwise.
    std::array<std::array<int, 2>, 4> vertices() const;
    /// Inverse of vertices(); throws Geometry if the points are not an axis-aligned rectangle.
    static Unit from_vertices(const std::array<std::array<int, 2>, 4>& v);

    friend auto operator<=>(const Unit&, const Unit&) = default;
};

struct RelationMatrix {
    int n = 0;
    std::vector<Relation> entries;

    RelationMatrix() = default;
    explicit RelationMatrix(int count) : n(count), entries(std::size_t(count) * count, Relation::Irrelevant) {}

    Relation at(int p, int q) const { return entries[std::size_t(p) * n + q]; }
    void set(int p, int q, Relation r)
    {
        entries[std::size_t(p) * n + q] = r;
        entries[std::size_t(q) * n + p] = r;
    }
    bool adjacent(int p, int q) const { return at(p, q) == Relation::Adjacent; }

    bool operator==(const RelationMatrix&) const = default;
};

/// Binary same-length activation flags; symmetric with a false diagonal.
struct ThetaMatrix {
    int n = 0;
    std::vector<std::uint8_t> entries;

    ThetaMatrix() = default;
    explicit ThetaMatrix(int count) : n(count), entries(std::size_t(count) * count, 0) {}

    bool at(int p, int q) const { return entries[std::size_t(p) * n + q] != 0; }
    void set(int p, int q, bool v) { entries[std::size_t(p) * n + q] = v ? 1 : 0; }
    int count_true() const;

    bool operator==(const ThetaMatrix&) const = default;
};

/// A door on the shared wall of two units. `axis` is the axis of the wall: on a Horizontal
/// wall unit_a lies below unit_b, on a Vertical wall unit_a lies left of unit_b. The door
/// covers the along-wall cell span [start, end).
struct Door {
    int unit_a = 0;
    int unit_b = 0;
    Axis axis = Axis::Horizontal;
    int start = 0;
    int end = 0;

    int width_cells() const { return end - start; }

    friend auto operator<=>(const Door&, const Door&) = default;
};

struct SemanticWorld {
    std::vector<Unit> units;
    std::vector<UnitType> types;
    std::vector<Door> doors;
    std::optional<RelationMatrix> relations;
    std::optional<ThetaMatrix> theta;

    int size() const { return int(units.size()); }
    /// Geometry, types and doors (caches excluded).
    bool same_structure(const SemanticWorld& other) const;
};

struct WorldRasterParams {
    int wall_thickness = 2;
    int width = 0;
    int height = 0;

    Rect bounds() const { return {0, 0, width, height}; }
    void validate() const;
};

/// Geometric constraints on units and doors.
struct WorldRules {
    int min_unit_side = 6;
    int door_min_width = 2;
    int door_max_width = 8;
    /// Largest gap (cells) between the facing walls of two units that may carry a door.
    int door_max_gap = 2;

    void validate() const;
};

struct RelationParams {
    int dilation_radius = 3;
    int overlap_min_cells = 4;
    int wall_thickness = 2;
};

struct UnitClassThresholds {
    double area_big = 16000.0;  ///< cells; area >= area_big is a hall
    double ratio_big = 3.0;
};

// ---------------------------------------------------------------------------------------------
// Rasterization

/// Paints the world's cell predictions and unit-overlap counts over `region`. Both output
/// spans are row-major over the region. Shared by full and incremental rasterization.
void rasterize_region(const SemanticWorld& world, int wall_thickness, const Rect& region,
                      std::span<CellState> states, std::span<std::uint16_t> overlap);

/// Predicted cell states: door > wall > free interior > unknown.
ClassifiedGrid rasterize(const SemanticWorld& world, const WorldRasterParams& params);

/// sigma(c): number of units whose rectangle contains the cell.
std::vector<std::uint16_t> overlap_count_field(const SemanticWorld& world, int width, int height);

/// Cells whose prediction can differ between two placements of the same unit.
std::vector<Rect> changed_region(const Rect& before, const Rect& after, int wall_thickness);

/// The free passage a door carves through both walls, or nullopt if the geometry is broken.
std::optional<Rect> door_carve(const SemanticWorld& world, const Door& door, int wall_thickness);

// ---------------------------------------------------------------------------------------------
// Doors

/// A wall band detected in the map that could host a door: along-wall span [start, end) on a
/// wall occupying rows (or columns) [band_lo, band_hi].
struct DoorSite {
    Axis axis = Axis::Horizontal;
    int band_lo = 0;
    int band_hi = 0;
    int start = 0;
    int end = 0;
};

/// Fits a door site between units i and j; orders the pair as required by Door.
std::optional<Door> fit_door(const SemanticWorld& world, int i, int j, const DoorSite& site,
                             int wall_thickness, const WorldRules& rules);

bool door_valid(const SemanticWorld& world, const Door& door, int wall_thickness, const WorldRules& rules);

/// Door segment endpoints on unit_a's facing wall line, in lattice coordinates.
std::array<std::array<int, 2>, 2> door_endpoints(const SemanticWorld& world, const Door& door);

// ---------------------------------------------------------------------------------------------
// Derived structure

/// Cells shared by the dilated wall rings of two units.
std::int64_t dilated_wall_overlap(const Rect& a, const Rect& b, int wall_thickness, int radius);

RelationMatrix detect_relations(const SemanticWorld& world, const RelationParams& params);

UnitType classify_unit(const Unit& unit, const UnitClassThresholds& thresholds);

enum class EdgeKind : std::uint8_t { DoorConnected, Adjacent };

struct TopologyEdge {
    int a = 0;
    int b = 0;
    EdgeKind kind = EdgeKind::Adjacent;

    friend auto operator<=>(const TopologyEdge&, const TopologyEdge&) = default;
};

struct TopologyGraph {
    int nodes = 0;
    std::vector<TopologyEdge> edges;  ///< a < b, sorted
};

/// Requires world.relations.
TopologyGraph topology_graph(const SemanticWorld& world);

/// Sorts units and doors into canonical order, remapping door indices. Returns the
/// old-to-new unit index map. Caches are dropped.
std::vector<int> canonicalize(SemanticWorld& world);

/// Throws Geometry if a unit leaves the bounds, is too small, or a door is invalid.
void validate_world(const SemanticWorld& world, const WorldRasterParams& raster, const WorldRules& rules);

}  // namespace semloft
