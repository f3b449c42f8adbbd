#include "semloft/world_json.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "semloft/error.hpp"

namespace semloft {

using nlohmann::json;

namespace {

json vertices_json(const Unit& u)
{
    json v = json::array();
    for (const auto& p : u.vertices())
        v.push_back({p[0], p[1]});
    return v;
}

json world_body(const SemanticWorld& world)
{
    json j;
    j["units"] = json::array();
    for (const Unit& u : world.units)
        j["units"].push_back({{"vertices", vertices_json(u)}});
    if (world.types.size() == world.units.size()) {
        j["types"] = json::array();
        for (UnitType t : world.types)
            j["types"].push_back(std::string(to_string(t)));
    }
    j["doors"] = json::array();
    for (const Door& d : world.doors) {
        const auto ends = door_endpoints(world, d);
        j["doors"].push_back({{"units", {d.unit_a, d.unit_b}},
                              {"endpoints", {{ends[0][0], ends[0][1]}, {ends[1][0], ends[1][1]}}}});
    }
    if (world.relations && world.relations->n == world.size()) {
        json rows = json::array();
        for (int p = 0; p < world.relations->n; ++p) {
            json row = json::array();
            for (int q = 0; q < world.relations->n; ++q)
                row.push_back(world.relations->adjacent(p, q) ? "adj" : "irr");
            rows.push_back(row);
        }
        j["relations"] = rows;
    }
    if (world.theta && world.theta->n == world.size()) {
        json rows = json::array();
        for (int p = 0; p < world.theta->n; ++p) {
            json row = json::array();
            for (int q = 0; q < world.theta->n; ++q)
                row.push_back(world.theta->at(p, q));
            rows.push_back(row);
        }
        j["theta"] = rows;
    }
    return j;
}

[[noreturn]] void bad(const std::string& what)
{
    throw Error(ErrorKind::Format, "world json: " + what);
}

template <typename T>
T get_as(const json& j, const char* what)
{
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        bad(std::string("field '") + what + "' has the wrong type");
    }
}

Door door_from_json(const SemanticWorld& world, const json& jd)
{
    if (!jd.is_object() || !jd.contains("units") || !jd.contains("endpoints"))
        bad("door needs 'units' and 'endpoints'");
    const auto ids = get_as<std::vector<int>>(jd["units"], "units");
    const auto ends = get_as<std::vector<std::array<int, 2>>>(jd["endpoints"], "endpoints");
    if (ids.size() != 2 || ends.size() != 2)
        bad("door needs two units and two endpoints");
    const int n = world.size();
    if (ids[0] < 0 || ids[1] < 0 || ids[0] >= n || ids[1] >= n || ids[0] == ids[1])
        throw Error(ErrorKind::Geometry, "door references a missing unit");
    Door d;
    if (ends[0][1] == ends[1][1] && ends[0][0] != ends[1][0]) {
        d.axis = Axis::Horizontal;
        d.start = std::min(ends[0][0], ends[1][0]);
        d.end = std::max(ends[0][0], ends[1][0]);
    } else if (ends[0][0] == ends[1][0] && ends[0][1] != ends[1][1]) {
        d.axis = Axis::Vertical;
        d.start = std::min(ends[0][1], ends[1][1]);
        d.end = std::max(ends[0][1], ends[1][1]);
    } else {
        throw Error(ErrorKind::Geometry, "door endpoints are not an axis-aligned segment");
    }
    const Rect& r0 = world.units[ids[0]].rect;
    const Rect& r1 = world.units[ids[1]].rect;
    const bool first_low = d.axis == Axis::Horizontal ? r0.y0 < r1.y0 : r0.x0 < r1.x0;
    d.unit_a = first_low ? ids[0] : ids[1];
    d.unit_b = first_low ? ids[1] : ids[0];
    return d;
}

SemanticWorld world_from_body(const json& j)
{
    SemanticWorld w;
    if (!j.contains("units") || !j["units"].is_array())
        bad("missing 'units' array");
    for (const json& ju : j["units"]) {
        if (!ju.is_object() || !ju.contains("vertices"))
            bad("unit needs 'vertices'");
        const auto v = get_as<std::vector<std::array<int, 2>>>(ju["vertices"], "vertices");
        if (v.size() != 4)
            bad("unit needs exactly four vertices");
        w.units.push_back(Unit::from_vertices({v[0], v[1], v[2], v[3]}));
    }
    if (j.contains("types")) {
        for (const json& jt : j["types"])
            w.types.push_back(parse_unit_type(get_as<std::string>(jt, "types")));
        if (w.types.size() != w.units.size())
            bad("'types' length differs from 'units'");
    }
    if (j.contains("doors"))
        for (const json& jd : j["doors"])
            w.doors.push_back(door_from_json(w, jd));
    const int n = w.size();
    if (j.contains("relations")) {
        RelationMatrix m(n);
        const auto rows = get_as<std::vector<std::vector<std::string>>>(j["relations"], "relations");
        if (int(rows.size()) != n)
            bad("'relations' has the wrong size");
        for (int p = 0; p < n; ++p) {
            if (int(rows[p].size()) != n)
                bad("'relations' has the wrong size");
            for (int q = 0; q < n; ++q) {
                if (rows[p][q] != "adj" && rows[p][q] != "irr")
                    bad("relation entries must be 'adj' or 'irr'");
                m.entries[std::size_t(p) * n + q] = rows[p][q] == "adj" ? Relation::Adjacent : Relation::Irrelevant;
            }
        }
        w.relations = m;
    }
    if (j.contains("theta")) {
        ThetaMatrix t(n);
        const auto rows = get_as<std::vector<std::vector<bool>>>(j["theta"], "theta");
        if (int(rows.size()) != n)
            bad("'theta' has the wrong size");
        for (int p = 0; p < n; ++p) {
            if (int(rows[p].size()) != n)
                bad("'theta' has the wrong size");
            for (int q = 0; q < n; ++q)
                t.set(p, q, rows[p][q]);
        }
        w.theta = t;
    }
    return w;
}

}  // namespace

std::string world_to_json(const SemanticWorld& world, const WorldFrame& frame)
{
    json j;
    j["schema"] = std::string(kWorldSchema);
    j["width"] = frame.width;
    j["height"] = frame.height;
    if (frame.resolution)
        j["resolution"] = *frame.resolution;
    if (frame.rotation_deg != 0.0)
        j["rotation_deg"] = frame.rotation_deg;
    j.update(world_body(world));
    return j.dump(2) + "\n";
}

std::string world_to_json_line(const SemanticWorld& world)
{
    return world_body(world).dump();
}

SemanticWorld world_from_json(std::string_view text, WorldFrame* frame)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Format, std::string("world json parse error at byte ") + std::to_string(e.byte));
    }
    if (!j.is_object())
        bad("top level must be an object");
    if (j.contains("schema") && j["schema"] != std::string(kWorldSchema))
        bad("unsupported schema");
    if (frame) {
        if (!j.contains("width") || !j.contains("height"))
            bad("missing 'width'/'height'");
        frame->width = get_as<int>(j["width"], "width");
        frame->height = get_as<int>(j["height"], "height");
        frame->resolution.reset();
        if (j.contains("resolution"))
            frame->resolution = get_as<double>(j["resolution"], "resolution");
        frame->rotation_deg = j.contains("rotation_deg") ? get_as<double>(j["rotation_deg"], "rotation_deg") : 0.0;
    }
    return world_from_body(j);
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    out << text;
    if (!out)
        throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

SemanticWorld load_world(const std::string& path, WorldFrame* frame)
{
    return world_from_json(read_text_file(path), frame);
}

void save_world(const std::string& path, const SemanticWorld& world, const WorldFrame& frame)
{
    write_text_file(path, world_to_json(world, frame));
}

std::string detections_to_json(const Detections& d)
{
    json j;
    j["walls"] = json::array();
    for (const WallSegment& w : d.walls)
        j["walls"].push_back({{"axis", w.axis == Axis::Horizontal ? "horizontal" : "vertical"},
                              {"line", w.line},
                              {"thickness", w.thickness},
                              {"span", {w.start, w.end}},
                              {"support", w.support}});
    j["doors"] = json::array();
    for (const DoorCandidate& c : d.doors) {
        const auto e = c.endpoints();
        j["doors"].push_back({{"wall", c.wall},
                              {"endpoints", {{e[0][0], e[0][1]}, {e[1][0], e[1][1]}}},
                              {"width_cells", c.width_cells()},
                              {"gap_support", c.gap_support}});
    }
    j["units"] = json::array();
    for (const UnitCandidate& u : d.units)
        j["units"].push_back({{"vertices", vertices_json({u.rect})}, {"score", u.score}});
    return j.dump(2) + "\n";
}

}  // namespace semloft
