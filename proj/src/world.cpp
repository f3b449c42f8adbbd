#include "semloft/world.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "semloft/error.hpp"

namespace semloft {

std::string_view to_string(UnitType type)
{
    switch (type) {
    case UnitType::Room: return "room";
    case UnitType::Corridor: return "corridor";
    case UnitType::Hall: return "hall";
    }
    return "room";
}

UnitType parse_unit_type(std::string_view text)
{
    if (text == "room")
        return UnitType::Room;
    if (text == "corridor")
        return UnitType::Corridor;
    if (text == "hall")
        return UnitType::Hall;
    throw Error(ErrorKind::Format, "unknown unit type '" + std::string(text) + "'");
}

double Unit::aspect_ratio() const
{
    const int w = width_cells();
    const int h = height_cells();
    if (w <= 0 || h <= 0)
        return 0.0;
    return double(std::max(w, h)) / double(std::min(w, h));
}

std::array<std::array<int, 2>, 4> Unit::vertices() const
{
    return {{{rect.x0, rect.y0}, {rect.x1, rect.y0}, {rect.x1, rect.y1}, {rect.x0, rect.y1}}};
}

Unit Unit::from_vertices(const std::array<std::array<int, 2>, 4>& v)
{
    int x0 = v[0][0], x1 = v[0][0], y0 = v[0][1], y1 = v[0][1];
    for (const auto& p : v) {
        x0 = std::min(x0, p[0]);
        x1 = std::max(x1, p[0]);
        y0 = std::min(y0, p[1]);
        y1 = std::max(y1, p[1]);
    }
    Unit u{{x0, y0, x1, y1}};
    if (x1 <= x0 || y1 <= y0)
        throw Error(ErrorKind::Geometry, "unit vertices are degenerate");
    auto expected = u.vertices();
    auto given = v;
    std::sort(expected.begin(), expected.end());
    std::sort(given.begin(), given.end());
    if (expected != given)
        throw Error(ErrorKind::Geometry, "unit vertices do not form an axis-aligned rectangle");
    return u;
}

int ThetaMatrix::count_true() const
{
    return int(std::count(entries.begin(), entries.end(), std::uint8_t(1)));
}

bool SemanticWorld::same_structure(const SemanticWorld& other) const
{
    return units == other.units && types == other.types && doors == other.doors;
}

void WorldRasterParams::validate() const
{
    if (wall_thickness < 1)
        throw Error(ErrorKind::Config, "wall thickness must be at least 1 cell");
    if (width <= 0 || height <= 0)
        throw Error(ErrorKind::Geometry, "raster dimensions must be positive");
}

void WorldRules::validate() const
{
    if (min_unit_side < 1)
        throw Error(ErrorKind::Config, "minimum unit side must be positive");
    if (door_min_width < 1 || door_max_width < door_min_width)
        throw Error(ErrorKind::Config, "door width bounds must satisfy 1 <= min <= max");
    if (door_max_gap < 0)
        throw Error(ErrorKind::Config, "door gap must be non-negative");
}

namespace {

Rect shrunk(const Rect& r, int t)
{
    Rect s = r.expanded(-t);
    if (s.empty())
        return {};
    return s;
}

// Fills `value` over rect ∩ region of a region-local buffer.
template <typename T, typename F>
void for_cells(const Rect& rect, const Rect& region, std::span<T> out, F&& f)
{
    const Rect r = intersect(rect, region);
    if (r.empty())
        return;
    const int stride = region.width();
    for (int y = r.y0; y < r.y1; ++y) {
        T* row = out.data() + std::size_t(y - region.y0) * stride;
        for (int x = r.x0; x < r.x1; ++x)
            f(row[x - region.x0]);
    }
}

// Up to four rectangles covering a \ b.
void append_difference(const Rect& a, const Rect& b, std::vector<Rect>& out)
{
    if (a.empty())
        return;
    const Rect i = intersect(a, b);
    if (i.empty()) {
        out.push_back(a);
        return;
    }
    if (a.y0 < i.y0)
        out.push_back({a.x0, a.y0, a.x1, i.y0});
    if (i.y1 < a.y1)
        out.push_back({a.x0, i.y1, a.x1, a.y1});
    if (a.x0 < i.x0)
        out.push_back({a.x0, i.y0, i.x0, i.y1});
    if (i.x1 < a.x1)
        out.push_back({i.x1, i.y0, a.x1, i.y1});
}

}  // namespace

std::optional<Rect> door_carve(const SemanticWorld& world, const Door& door, int t)
{
    if (door.unit_a < 0 || door.unit_b < 0 || door.unit_a >= world.size() || door.unit_b >= world.size())
        return std::nullopt;
    const Rect& a = world.units[door.unit_a].rect;
    const Rect& b = world.units[door.unit_b].rect;
    Rect carve;
    if (door.axis == Axis::Horizontal)
        carve = {door.start, a.y1 - t, door.end, b.y0 + t};
    else
        carve = {a.x1 - t, door.start, b.x0 + t, door.end};
    if (carve.empty())
        return std::nullopt;
    return carve;
}

void rasterize_region(const SemanticWorld& world, int t, const Rect& region, std::span<CellState> states,
                      std::span<std::uint16_t> overlap)
{
    std::fill(states.begin(), states.end(), CellState::Unknown);
    std::fill(overlap.begin(), overlap.end(), std::uint16_t(0));
    for (const Unit& u : world.units) {
        for_cells(u.rect, region, overlap, [](std::uint16_t& v) { ++v; });
        for_cells(shrunk(u.rect, t), region, states, [](CellState& s) { s = CellState::Free; });
    }
    for (const Unit& u : world.units) {
        const Rect& r = u.rect;
        const int tb = std::min(t, r.height());
        const int tl = std::min(t, r.width());
        const Rect bands[4] = {
            {r.x0, r.y0, r.x1, r.y0 + tb},
            {r.x0, r.y1 - tb, r.x1, r.y1},
            {r.x0, r.y0, r.x0 + tl, r.y1},
            {r.x1 - tl, r.y0, r.x1, r.y1},
        };
        for (const Rect& band : bands)
            for_cells(band, region, states, [](CellState& s) { s = CellState::Occupied; });
    }
    for (const Door& d : world.doors)
        if (auto carve = door_carve(world, d, t))
            for_cells(*carve, region, states, [](CellState& s) { s = CellState::Free; });
}

namespace {

void check_bounds(const SemanticWorld& world, const Rect& bounds)
{
    for (std::size_t i = 0; i < world.units.size(); ++i) {
        const Rect& r = world.units[i].rect;
        if (r.empty() || r.x0 < bounds.x0 || r.y0 < bounds.y0 || r.x1 > bounds.x1 || r.y1 > bounds.y1)
            throw Error(ErrorKind::Geometry, "unit " + std::to_string(i) + " exceeds the map bounds");
    }
}

}  // namespace

ClassifiedGrid rasterize(const SemanticWorld& world, const WorldRasterParams& params)
{
    params.validate();
    check_bounds(world, params.bounds());
    ClassifiedGrid grid(params.width, params.height);
    std::vector<std::uint16_t> overlap(grid.size());
    rasterize_region(world, params.wall_thickness, params.bounds(), grid.cells, overlap);
    return grid;
}

std::vector<std::uint16_t> overlap_count_field(const SemanticWorld& world, int width, int height)
{
    const Rect bounds{0, 0, width, height};
    check_bounds(world, bounds);
    std::vector<std::uint16_t> field(std::size_t(width) * height, 0);
    for (const Unit& u : world.units)
        for_cells(u.rect, bounds, std::span<std::uint16_t>(field), [](std::uint16_t& v) { ++v; });
    return field;
}

std::vector<Rect> changed_region(const Rect& before, const Rect& after, int t)
{
    std::vector<Rect> out;
    if (before == after)
        return out;
    append_difference(before, after, out);
    append_difference(after, before, out);
    const Rect bi = shrunk(before, t);
    const Rect ai = shrunk(after, t);
    append_difference(bi, ai, out);
    append_difference(ai, bi, out);
    return out;
}

bool door_valid(const SemanticWorld& world, const Door& door, int t, const WorldRules& rules)
{
    const int n = world.size();
    if (door.unit_a < 0 || door.unit_b < 0 || door.unit_a >= n || door.unit_b >= n || door.unit_a == door.unit_b)
        return false;
    const int w = door.width_cells();
    if (w < rules.door_min_width || w > rules.door_max_width)
        return false;
    const Rect& a = world.units[door.unit_a].rect;
    const Rect& b = world.units[door.unit_b].rect;
    int gap = 0, lo = 0, hi = 0;
    if (door.axis == Axis::Horizontal) {
        gap = b.y0 - a.y1;
        lo = std::max(a.x0, b.x0) + t;
        hi = std::min(a.x1, b.x1) - t;
    } else {
        gap = b.x0 - a.x1;
        lo = std::max(a.y0, b.y0) + t;
        hi = std::min(a.y1, b.y1) - t;
    }
    if (gap < -t || gap > rules.door_max_gap)
        return false;
    return door.start >= lo && door.end <= hi;
}

std::optional<Door> fit_door(const SemanticWorld& world, int i, int j, const DoorSite& site, int t,
                             const WorldRules& rules)
{
    if (i == j || i < 0 || j < 0 || i >= world.size() || j >= world.size())
        return std::nullopt;
    const Rect& ri = world.units[i].rect;
    const Rect& rj = world.units[j].rect;
    const bool horizontal = site.axis == Axis::Horizontal;
    const int pi = horizontal ? ri.y0 : ri.x0;
    const int pj = horizontal ? rj.y0 : rj.x0;
    if (pi == pj)
        return std::nullopt;
    Door door{pi < pj ? i : j, pi < pj ? j : i, site.axis, site.start, site.end};
    if (!door_valid(world, door, t, rules))
        return std::nullopt;
    const Rect& a = world.units[door.unit_a].rect;
    const Rect& b = world.units[door.unit_b].rect;
    const int lo = horizontal ? a.y1 - t : a.x1 - t;
    const int hi = horizontal ? b.y0 + t : b.x0 + t;
    if (site.band_hi < lo || site.band_lo >= hi)
        return std::nullopt;
    return door;
}

std::array<std::array<int, 2>, 2> door_endpoints(const SemanticWorld& world, const Door& door)
{
    const Rect& a = world.units[door.unit_a].rect;
    if (door.axis == Axis::Horizontal)
        return {{{door.start, a.y1}, {door.end, a.y1}}};
    return {{{a.x1, door.start}, {a.x1, door.end}}};
}

std::int64_t dilated_wall_overlap(const Rect& a, const Rect& b, int t, int r)
{
    const Rect ea = a.expanded(r);
    const Rect eb = b.expanded(r);
    const Rect sa = shrunk(a, t + r);
    const Rect sb = shrunk(b, t + r);
    // ring = E \ S with S inside E, so |ringA ∩ ringB| follows by inclusion-exclusion.
    return intersect(ea, eb).area() - intersect(eb, sa).area() - intersect(ea, sb).area() +
           intersect(sa, sb).area();
}

RelationMatrix detect_relations(const SemanticWorld& world, const RelationParams& params)
{
    const int n = world.size();
    RelationMatrix m(n);
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q)
            if (dilated_wall_overlap(world.units[p].rect, world.units[q].rect, params.wall_thickness,
                                     params.dilation_radius) >= params.overlap_min_cells)
                m.set(p, q, Relation::Adjacent);
    return m;
}

UnitType classify_unit(const Unit& unit, const UnitClassThresholds& thresholds)
{
    if (double(unit.area_cells()) >= thresholds.area_big)
        return UnitType::Hall;
    if (unit.aspect_ratio() >= thresholds.ratio_big)
        return UnitType::Corridor;
    return UnitType::Room;
}

TopologyGraph topology_graph(const SemanticWorld& world)
{
    if (!world.relations || world.relations->n != world.size())
        throw Error(ErrorKind::Geometry, "topology graph requires a current relation matrix");
    TopologyGraph g;
    g.nodes = world.size();
    std::vector<std::uint8_t> has_door(std::size_t(g.nodes) * g.nodes, 0);
    for (const Door& d : world.doors) {
        const int a = std::min(d.unit_a, d.unit_b);
        const int b = std::max(d.unit_a, d.unit_b);
        if (a == b || a < 0 || b >= g.nodes)
            continue;
        auto& flag = has_door[std::size_t(a) * g.nodes + b];
        if (!flag)
            g.edges.push_back({a, b, EdgeKind::DoorConnected});
        flag = 1;
    }
    for (int p = 0; p < g.nodes; ++p)
        for (int q = p + 1; q < g.nodes; ++q)
            if (world.relations->adjacent(p, q) && !has_door[std::size_t(p) * g.nodes + q])
                g.edges.push_back({p, q, EdgeKind::Adjacent});
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

std::vector<int> canonicalize(SemanticWorld& world)
{
    const int n = world.size();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return world.units[a].rect < world.units[b].rect; });
    std::vector<int> remap(n);
    std::vector<Unit> units(n);
    std::vector<UnitType> types;
    const bool typed = world.types.size() == world.units.size();
    if (typed)
        types.resize(n);
    for (int i = 0; i < n; ++i) {
        remap[order[i]] = i;
        units[i] = world.units[order[i]];
        if (typed)
            types[i] = world.types[order[i]];
    }
    world.units = std::move(units);
    if (typed)
        world.types = std::move(types);
    for (Door& d : world.doors) {
        if (d.unit_a >= 0 && d.unit_a < n)
            d.unit_a = remap[d.unit_a];
        if (d.unit_b >= 0 && d.unit_b < n)
            d.unit_b = remap[d.unit_b];
    }
    std::sort(world.doors.begin(), world.doors.end());
    world.relations.reset();
    world.theta.reset();
    return remap;
}

void validate_world(const SemanticWorld& world, const WorldRasterParams& raster, const WorldRules& rules)
{
    raster.validate();
    rules.validate();
    check_bounds(world, raster.bounds());
    if (!world.types.empty() && world.types.size() != world.units.size())
        throw Error(ErrorKind::Geometry, "type list length differs from unit count");
    for (std::size_t i = 0; i < world.units.size(); ++i) {
        const Unit& u = world.units[i];
        if (u.width_cells() < rules.min_unit_side || u.height_cells() < rules.min_unit_side)
            throw Error(ErrorKind::Geometry, "unit " + std::to_string(i) + " is smaller than the minimum side");
    }
    for (std::size_t i = 0; i < world.doors.size(); ++i)
        if (!door_valid(world, world.doors[i], raster.wall_thickness, rules))
            throw Error(ErrorKind::Geometry, "door " + std::to_string(i) + " does not lie on a shared wall");
}

}  // namespace semloft
