#include <doctest.h>

#include <algorithm>

#include "semloft/detectors.hpp"
#include "semloft/error.hpp"

using namespace semloft;

namespace {

ClassifiedGrid raster_of(std::vector<Rect> rects, int width = 60, int height = 40)
{
    SemanticWorld w;
    for (const Rect& r : rects)
        w.units.push_back({r});
    return rasterize(w, {2, width, height});
}

bool has_segment(const std::vector<WallSegment>& walls, Axis axis, int line, int start, int end)
{
    return std::any_of(walls.begin(), walls.end(), [&](const WallSegment& s) {
        return s.axis == axis && s.line == line && s.thickness == 2 && s.start == start && s.end == end;
    });
}

void paint(ClassifiedGrid& g, const Rect& r, CellState s)
{
    for (int y = r.y0; y < r.y1; ++y)
        for (int x = r.x0; x < r.x1; ++x)
            g.at(x, y) = s;
}

}  // namespace

TEST_CASE("walls: a clean unit yields its four sides")
{
    const Rect r{10, 10, 30, 20};
    const auto walls = detect_walls(raster_of({r}), {});
    REQUIRE(walls.size() == 4);
    CHECK(has_segment(walls, Axis::Horizontal, 10, 10, 30));
    CHECK(has_segment(walls, Axis::Horizontal, 18, 10, 30));
    CHECK(has_segment(walls, Axis::Vertical, 10, 10, 20));
    CHECK(has_segment(walls, Axis::Vertical, 28, 10, 20));
    for (const WallSegment& s : walls)
        CHECK(s.support == 1.0);
}

TEST_CASE("walls: nothing to find on a free map")
{
    CHECK(detect_walls(ClassifiedGrid(40, 30, CellState::Free), {}).empty());
}

TEST_CASE("walls and doors: a door gap keeps the wall and becomes a candidate")
{
    ClassifiedGrid g = raster_of({{10, 10, 40, 30}});
    paint(g, {20, 10, 23, 12}, CellState::Free);
    const DetectorParams params;
    const auto walls = detect_walls(g, params);
    CHECK(has_segment(walls, Axis::Horizontal, 10, 10, 40));
    const auto doors = detect_doors(g, walls, params);
    REQUIRE(doors.size() == 1);
    CHECK(doors[0].site.axis == Axis::Horizontal);
    CHECK(doors[0].site.start == 20);
    CHECK(doors[0].site.end == 23);
    CHECK(doors[0].width_cells() == 3);
    CHECK(doors[0].gap_support == 1.0);
    CHECK(doors[0].endpoints()[0] == std::array<int, 2>{20, 10});
}

TEST_CASE("doors: narrow or unknown gaps are not candidates")
{
    const DetectorParams params;
    ClassifiedGrid narrow = raster_of({{10, 10, 40, 30}});
    paint(narrow, {20, 10, 21, 12}, CellState::Free);
    CHECK(detect_doors(narrow, detect_walls(narrow, params), params).empty());

    ClassifiedGrid unknown = raster_of({{10, 10, 40, 30}});
    paint(unknown, {20, 10, 24, 12}, CellState::Unknown);
    CHECK(detect_doors(unknown, detect_walls(unknown, params), params).empty());
}

TEST_CASE("units: one room is the top candidate")
{
    const Rect r{10, 8, 40, 32};
    const DetectorParams params;
    const auto units = propose_units(detect_walls(raster_of({r}), params), params);
    REQUIRE_FALSE(units.empty());
    CHECK(units[0].rect == r);
}

TEST_CASE("units: two rooms sharing a wall give each room and their union")
{
    const Rect a{5, 5, 30, 35}, b{30, 5, 55, 35};
    const DetectorParams params;
    const auto units = propose_units(detect_walls(raster_of({a, b}), params), params, Rect{0, 0, 60, 40});
    CHECK(units.size() >= 3);
    const auto has = [&](const Rect& r) {
        return std::any_of(units.begin(), units.end(), [&](const UnitCandidate& u) { return u.rect == r; });
    };
    CHECK(has(a));
    CHECK(has(b));
    CHECK(has(bounding(a, b)));
}

TEST_CASE("units: horizontal walls alone propose nothing")
{
    ClassifiedGrid g(60, 40, CellState::Free);
    paint(g, {5, 5, 55, 7}, CellState::Occupied);
    paint(g, {5, 30, 55, 32}, CellState::Occupied);
    const DetectorParams params;
    const auto walls = detect_walls(g, params);
    CHECK(walls.size() == 2);
    CHECK(propose_units(walls, params).empty());
}

TEST_CASE("detector parameters are validated")
{
    DetectorParams p;
    CHECK_NOTHROW(p.validate());
    p.min_support = 1.5;
    CHECK_THROWS_AS(p.validate(), Error);
    p = {};
    p.door_min_width = 9;
    CHECK_THROWS_AS(p.validate(), Error);
}
