#include "semloft/detectors.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "semloft/error.hpp"

namespace semloft {

void DetectorParams::validate() const
{
    if (min_span < 1 || merge_gap < 0 || top_k < 0 || wall_thickness < 1 || min_unit_side < 1)
        throw Error(ErrorKind::Config, "detector integer parameters out of range");
    if (!(min_support > 0.0 && min_support <= 1.0) || !(gap_support_min >= 0.0 && gap_support_min <= 1.0) ||
        !(extent_overlap_min > 0.0 && extent_overlap_min <= 1.0))
        throw Error(ErrorKind::Config, "detector fractions must lie in (0,1]");
    if (door_min_width < 1 || door_max_width < door_min_width)
        throw Error(ErrorKind::Config, "door width bounds must satisfy 1 <= min <= max");
}

Rect WallSegment::rect() const
{
    if (axis == Axis::Horizontal)
        return {start, line, end, line + thickness};
    return {line, start, line + thickness, end};
}

std::array<std::array<int, 2>, 2> DoorCandidate::endpoints() const
{
    if (site.axis == Axis::Horizontal)
        return {{{site.start, site.band_lo}, {site.end, site.band_lo}}};
    return {{{site.band_lo, site.start}, {site.band_lo, site.end}}};
}

namespace {

// Line-oriented view of the map: `line` indexes rows for Horizontal, columns for Vertical.
struct LineView {
    const ClassifiedGrid& map;
    Axis axis;

    int lines() const { return axis == Axis::Horizontal ? map.height : map.width; }
    int length() const { return axis == Axis::Horizontal ? map.width : map.height; }
    CellState at(int line, int pos) const { return axis == Axis::Horizontal ? map.at(pos, line) : map.at(line, pos); }
};

struct Run {
    int start;
    int end;
};

// Occupied stretches of one line. Runs separated by at most merge_gap cells form pieces;
// pieces passing the span and support tests are then joined across door-sized gaps, so
// isolated noise cells never extend a wall.
std::vector<Run> line_runs(const LineView& view, int line, const DetectorParams& params)
{
    struct Piece {
        int start;
        int end;
        int occupied;
    };
    const auto solid = [&](int start, int end, int occupied) {
        return end - start >= params.min_span && double(occupied) >= params.min_support * double(end - start);
    };
    std::vector<Piece> pieces;
    const int len = view.length();
    for (int pos = 0; pos < len;) {
        if (view.at(line, pos) != CellState::Occupied) {
            ++pos;
            continue;
        }
        int end = pos;
        while (end < len && view.at(line, end) == CellState::Occupied)
            ++end;
        if (!pieces.empty() && pos - pieces.back().end <= params.merge_gap) {
            pieces.back().end = end;
            pieces.back().occupied += end - pos;
        } else {
            pieces.push_back({pos, end, end - pos});
        }
        pos = end;
    }
    const int door_gap = std::max(params.merge_gap, params.door_max_width);
    std::vector<Piece> joined;
    for (const Piece& p : pieces) {
        if (!solid(p.start, p.end, p.occupied))
            continue;
        if (!joined.empty() && p.start - joined.back().end <= door_gap) {
            joined.back().end = p.end;
            joined.back().occupied += p.occupied;
        } else {
            joined.push_back(p);
        }
    }
    std::vector<Run> out;
    for (const Piece& p : joined)
        if (solid(p.start, p.end, p.occupied))
            out.push_back({p.start, p.end});
    return out;
}

struct Band {
    int lo;
    std::vector<Run> runs;  ///< one per line from lo on
};

int overlap_len(int a0, int a1, int b0, int b1)
{
    return std::max(0, std::min(a1, b1) - std::max(a0, b0));
}

// Drops edge lines whose run is shorter than half the band's longest run: stray runs beside
// a wall would otherwise thicken the band and dilute its support.
void trim(Band& b)
{
    int longest = 0;
    for (const Run& r : b.runs)
        longest = std::max(longest, r.end - r.start);
    const auto weak = [&](const Run& r) { return 2 * (r.end - r.start) < longest; };
    std::size_t first = 0, last = b.runs.size();
    while (first < last && weak(b.runs[first]))
        ++first;
    while (last > first && weak(b.runs[last - 1]))
        --last;
    b.lo += int(first);
    b.runs = std::vector<Run>(b.runs.begin() + std::ptrdiff_t(first), b.runs.begin() + std::ptrdiff_t(last));
}

void scan_axis(const ClassifiedGrid& map_c, Axis axis, const DetectorParams& params, std::vector<WallSegment>& out)
{
    const LineView view{map_c, axis};
    std::vector<Band> closed;
    std::vector<Band> open;
    for (int line = 0; line < view.lines(); ++line) {
        const auto runs = line_runs(view, line, params);
        std::vector<Band> next;
        std::vector<std::uint8_t> taken(open.size(), 0);
        for (const Run& r : runs) {
            int best = -1, best_overlap = 0;
            for (std::size_t b = 0; b < open.size(); ++b) {
                if (taken[b])
                    continue;
                const Run& last = open[b].runs.back();
                const int ov = overlap_len(r.start, r.end, last.start, last.end);
                const int shorter = std::min(r.end - r.start, last.end - last.start);
                if (2 * ov >= shorter && ov > best_overlap) {
                    best = int(b);
                    best_overlap = ov;
                }
            }
            if (best >= 0) {
                taken[best] = 1;
                Band band = std::move(open[best]);
                band.runs.push_back(r);
                next.push_back(std::move(band));
            } else {
                next.push_back({line, {r}});
            }
        }
        for (std::size_t b = 0; b < open.size(); ++b)
            if (!taken[b])
                closed.push_back(std::move(open[b]));
        open = std::move(next);
    }
    for (Band& b : open)
        closed.push_back(std::move(b));

    for (Band& b : closed)
        trim(b);
    std::erase_if(closed, [](const Band& b) { return b.runs.empty(); });
    // A stray run can capture one line of a wall and split the band; rejoin contiguous bands
    // of comparable, overlapping extent.
    std::sort(closed.begin(), closed.end(), [](const Band& a, const Band& b) { return a.lo < b.lo; });
    const auto extent = [](const Band& b) {
        Run e = b.runs.front();
        for (const Run& r : b.runs)
            e = {std::min(e.start, r.start), std::max(e.end, r.end)};
        return e;
    };
    for (std::size_t i = 0; i < closed.size(); ++i) {
        for (std::size_t j = i + 1; j < closed.size();) {
            const int next_line = closed[i].lo + int(closed[i].runs.size());
            if (closed[j].lo > next_line)
                break;
            const Run a = extent(closed[i]), b = extent(closed[j]);
            const int shorter = std::min(a.end - a.start, b.end - b.start);
            const int longer = std::max(a.end - a.start, b.end - b.start);
            if (closed[j].lo == next_line && 2 * shorter >= longer &&
                2 * overlap_len(a.start, a.end, b.start, b.end) >= shorter) {
                closed[i].runs.insert(closed[i].runs.end(), closed[j].runs.begin(), closed[j].runs.end());
                closed.erase(closed.begin() + std::ptrdiff_t(j));
                j = i + 1;
                continue;
            }
            ++j;
        }
    }

    for (Band& b : closed) {
        WallSegment seg{axis, b.lo, int(b.runs.size()), b.runs.front().start, b.runs.front().end, 0.0};
        for (const Run& r : b.runs) {
            seg.start = std::min(seg.start, r.start);
            seg.end = std::max(seg.end, r.end);
        }
        // Support over each line's own run, so a shared wall whose two faces differ in length
        // is not penalized for the shorter face.
        std::int64_t occupied = 0, cells = 0;
        for (std::size_t i = 0; i < b.runs.size(); ++i) {
            for (int pos = b.runs[i].start; pos < b.runs[i].end; ++pos)
                occupied += view.at(b.lo + int(i), pos) == CellState::Occupied;
            cells += b.runs[i].end - b.runs[i].start;
        }
        seg.support = double(occupied) / double(cells);
        if (seg.support >= params.min_support)
            out.push_back(seg);
    }
}

auto wall_key(const WallSegment& w)
{
    return std::make_tuple(-w.support, int(w.axis), w.line, w.start, w.thickness, w.end);
}

}  // namespace

std::vector<WallSegment> detect_walls(const ClassifiedGrid& map_c, const DetectorParams& params)
{
    params.validate();
    std::vector<WallSegment> out;
    scan_axis(map_c, Axis::Horizontal, params, out);
    scan_axis(map_c, Axis::Vertical, params, out);
    std::sort(out.begin(), out.end(), [](const WallSegment& a, const WallSegment& b) { return wall_key(a) < wall_key(b); });
    return out;
}

std::vector<DoorCandidate> detect_doors(const ClassifiedGrid& map_c, const std::vector<WallSegment>& walls,
                                        const DetectorParams& params)
{
    params.validate();
    std::vector<DoorCandidate> out;
    for (std::size_t wi = 0; wi < walls.size(); ++wi) {
        const WallSegment& w = walls[wi];
        const LineView view{map_c, w.axis};
        auto open_at = [&](int pos) {
            int occupied = 0;
            for (int l = w.line; l <= w.last_line(); ++l)
                occupied += view.at(l, pos) == CellState::Occupied;
            return 2 * occupied < w.thickness;
        };
        int pos = w.start;
        while (pos < w.end) {
            if (!open_at(pos)) {
                ++pos;
                continue;
            }
            int end = pos;
            while (end < w.end && open_at(end))
                ++end;
            const int width = end - pos;
            if (width >= params.door_min_width && width <= params.door_max_width) {
                int free_cells = 0;
                for (int l = w.line; l <= w.last_line(); ++l)
                    for (int p = pos; p < end; ++p)
                        free_cells += view.at(l, p) == CellState::Free;
                const double support = double(free_cells) / double(width * w.thickness);
                if (support >= params.gap_support_min)
                    out.push_back({{w.axis, w.line, w.last_line(), pos, end}, int(wi), support});
            }
            pos = end;
        }
    }
    std::sort(out.begin(), out.end(), [](const DoorCandidate& a, const DoorCandidate& b) {
        return std::make_tuple(-a.gap_support, int(a.site.axis), a.site.band_lo, a.site.start, a.site.end) <
               std::make_tuple(-b.gap_support, int(b.site.axis), b.site.band_lo, b.site.start, b.site.end);
    });
    return out;
}

std::vector<UnitCandidate> propose_units(const std::vector<WallSegment>& walls, const DetectorParams& params,
                                         std::optional<Rect> bounds)
{
    params.validate();
    std::vector<int> hs, vs;
    for (std::size_t i = 0; i < walls.size(); ++i)
        (walls[i].axis == Axis::Horizontal ? hs : vs).push_back(int(i));
    const int t = params.wall_thickness;
    auto covers = [&](const WallSegment& w, int lo, int hi) {
        return double(overlap_len(w.start, w.end, lo, hi)) >= params.extent_overlap_min * double(hi - lo);
    };
    std::map<Rect, UnitCandidate> best;
    for (int ib : hs)
        for (int it : hs) {
            const WallSegment& bot = walls[ib];
            const WallSegment& top = walls[it];
            const int y0 = bot.last_line() + 1 - t;
            const int y1 = top.line + t;
            if (top.line <= bot.last_line() || y1 - y0 < params.min_unit_side)
                continue;
            for (int il : vs)
                for (int ir : vs) {
                    const WallSegment& left = walls[il];
                    const WallSegment& right = walls[ir];
                    const int x0 = left.last_line() + 1 - t;
                    const int x1 = right.line + t;
                    if (right.line <= left.last_line() || x1 - x0 < params.min_unit_side)
                        continue;
                    const Rect r{x0, y0, x1, y1};
                    if (bounds && intersect(r, *bounds) != r)
                        continue;
                    if (!covers(bot, x0, x1) || !covers(top, x0, x1) || !covers(left, y0, y1) || !covers(right, y0, y1))
                        continue;
                    const double score = bot.support * top.support * left.support * right.support;
                    auto [pos, inserted] = best.try_emplace(r, UnitCandidate{r, score, {ib, it, il, ir}});
                    if (!inserted && score > pos->second.score)
                        pos->second = UnitCandidate{r, score, {ib, it, il, ir}};
                }
        }
    std::vector<UnitCandidate> out;
    out.reserve(best.size());
    for (auto& [r, c] : best)
        out.push_back(c);
    std::stable_sort(out.begin(), out.end(),
                     [](const UnitCandidate& a, const UnitCandidate& b) { return a.score > b.score; });
    if (int(out.size()) > params.top_k)
        out.resize(std::size_t(params.top_k));
    return out;
}

Detections detect_all(const ClassifiedGrid& map_c, const DetectorParams& params)
{
    Detections d;
    d.walls = detect_walls(map_c, params);
    d.doors = detect_doors(map_c, d.walls, params);
    d.units = propose_units(d.walls, params, map_c.bounds());
    return d;
}

}  // namespace semloft
