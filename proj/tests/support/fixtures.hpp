#pragma once

#include <array>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "semloft/gridmap.hpp"
#include "semloft/world.hpp"

namespace fixtures {

using semloft::Axis;
using semloft::Door;
using semloft::Rect;
using semloft::SemanticWorld;
using semloft::UnitType;

struct DoorDraft {
    int a;
    int b;
    int start;
    int end;
};

struct Layout {
    std::string name;
    int width = 400;
    int height = 300;
    std::vector<Rect> rects;
    std::vector<UnitType> types;
    std::vector<DoorDraft> doors;
};

/// Door between two touching units; the shared wall decides the axis and the order.
inline Door make_door(const std::vector<Rect>& rects, const DoorDraft& d)
{
    const Rect& p = rects[d.a];
    const Rect& q = rects[d.b];
    if (p.x1 == q.x0)
        return {d.a, d.b, Axis::Vertical, d.start, d.end};
    if (q.x1 == p.x0)
        return {d.b, d.a, Axis::Vertical, d.start, d.end};
    if (p.y1 == q.y0)
        return {d.a, d.b, Axis::Horizontal, d.start, d.end};
    if (q.y1 == p.y0)
        return {d.b, d.a, Axis::Horizontal, d.start, d.end};
    throw std::logic_error("door between units that do not touch");
}

inline SemanticWorld make_world(const Layout& layout)
{
    SemanticWorld w;
    for (const Rect& r : layout.rects)
        w.units.push_back({r});
    w.types = layout.types;
    for (const DoorDraft& d : layout.doors)
        w.doors.push_back(make_door(layout.rects, d));
    return w;
}

/// Reflection across the vertical center line.
inline Layout mirrored(Layout layout)
{
    for (DoorDraft& d : layout.doors)
        if (make_door(layout.rects, d).axis == Axis::Horizontal)
            d = {d.a, d.b, layout.width - d.end, layout.width - d.start};
    for (Rect& r : layout.rects)
        r = {layout.width - r.x1, r.y0, layout.width - r.x0, r.y1};
    layout.name += "-mirrored";
    return layout;
}

constexpr UnitType R = UnitType::Room;
constexpr UnitType C = UnitType::Corridor;
constexpr UnitType H = UnitType::Hall;

/// Five 400x300 layouts at 5 cm per cell: hall with satellite rooms, rooms in a row along a
/// corridor, double-row office, exhibition halls, mixed.
inline std::vector<Layout> simulated_layouts()
{
    std::vector<Layout> out;
    out.push_back({"hall-satellites", 400, 300,
                   {{40, 40, 240, 200}, {240, 40, 340, 120}, {240, 120, 340, 200}, {40, 200, 140, 270},
                    {140, 200, 240, 270}},
                   {H, R, R, R, R},
                   {{0, 1, 70, 88}, {0, 2, 150, 168}, {0, 3, 80, 98}, {0, 4, 180, 198}}});
    out.push_back({"rooms-row-corridor", 400, 300,
                   {{20, 150, 380, 190}, {20, 40, 110, 150}, {110, 40, 200, 150}, {200, 40, 290, 150},
                    {290, 40, 380, 150}},
                   {C, R, R, R, R},
                   {{1, 0, 55, 73}, {2, 0, 140, 158}, {3, 0, 235, 253}, {4, 0, 320, 338}}});
    out.push_back({"office-double-row", 400, 300,
                   {{20, 130, 380, 165}, {20, 30, 140, 130}, {140, 30, 260, 130}, {260, 30, 380, 130},
                    {20, 165, 110, 265}, {110, 165, 200, 265}, {200, 165, 290, 265}, {290, 165, 380, 265}},
                   {C, R, R, R, R, R, R, R},
                   {{1, 0, 70, 88},
                    {2, 0, 190, 208},
                    {3, 0, 300, 318},
                    {4, 0, 50, 68},
                    {5, 0, 150, 168},
                    {6, 0, 230, 248},
                    {7, 0, 330, 348}}});
    out.push_back({"exhibition-halls", 400, 300,
                   {{20, 30, 200, 240}, {200, 30, 380, 240}, {20, 240, 380, 280}},
                   {H, H, C},
                   {{0, 1, 120, 140}, {0, 2, 90, 110}, {1, 2, 290, 310}}});
    out.push_back({"mixed", 400, 300,
                   {{20, 20, 200, 180}, {200, 20, 240, 280}, {240, 20, 380, 110}, {240, 110, 380, 200},
                    {240, 200, 380, 280}, {20, 180, 120, 280}, {120, 180, 200, 280}},
                   {H, C, R, R, R, R, R},
                   {{0, 1, 90, 108},
                    {1, 2, 50, 68},
                    {1, 3, 140, 158},
                    {1, 4, 230, 248},
                    {0, 5, 60, 78},
                    {0, 6, 150, 168}}});
    return out;
}

/// Ten environments: every layout as drawn and mirrored.
inline std::vector<Layout> simulated_suite()
{
    std::vector<Layout> out;
    for (const Layout& l : simulated_layouts()) {
        out.push_back(l);
        out.push_back(mirrored(l));
    }
    return out;
}

/// Two touching rooms of equal height. The lower part of the right room is hidden in a band
/// whose rows are balanced so the likelihood does not depend on where the room ends inside
/// it; every other cell is a noise-free raster of the true world.
struct KnowledgeFixture {
    SemanticWorld truth;
    semloft::ClassifiedGrid map;
    Rect band;  ///< rows of the ambiguous region
};

inline KnowledgeFixture knowledge_fixture(int wall_thickness = 2)
{
    KnowledgeFixture f;
    const int width = 240, height = 220;
    f.truth.units = {{{40, 40, 120, 160}}, {{120, 40, 200, 160}}};
    f.truth.types = {R, R};
    const semloft::WorldRasterParams raster{wall_thickness, width, height};
    f.map = semloft::rasterize(f.truth, raster);
    const Rect b = f.truth.units[1].rect;
    f.band = {b.x0, 120, b.x1, 172};
    const int t = wall_thickness;
    const int interior = b.width() - 2 * t;
    // Moving the bottom wall by one row turns an interior-row wall into free space and an
    // unknown row into wall. With the side columns occupied and the interior a mix of free and
    // unknown cells, the two changes cancel when each row holds four more unknown than free.
    const int free_n = (interior - 4) / 2;
    const int unknown_n = free_n + 4;
    std::mt19937_64 rng(11);
    for (int y = f.band.y0; y < f.band.y1; ++y) {
        std::vector<semloft::CellState> row;
        row.insert(row.end(), free_n, semloft::CellState::Free);
        row.insert(row.end(), unknown_n, semloft::CellState::Unknown);
        std::shuffle(row.begin(), row.end(), rng);
        for (int x = b.x0; x < b.x1; ++x) {
            const bool side = x < b.x0 + t || x >= b.x1 - t;
            f.map.at(x, y) = side ? semloft::CellState::Occupied : row[x - b.x0 - t];
        }
    }
    return f;
}

}  // namespace fixtures
