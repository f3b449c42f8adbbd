#pragma once

#include <algorithm>
#include <cstdint>
#include <compare>

namespace semloft {

/// Half-open cell rectangle [x0, x1) x [y0, y1) on the integer lattice.
/// The lattice corners (x0,y0) and (x1,y1) are the unit's vertices.
struct Rect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0; }
    int height() const { return y1 - y0; }
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    std::int64_t area() const { return empty() ? 0 : std::int64_t(width()) * height(); }
    bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }

    Rect expanded(int r) const { return {x0 - r, y0 - r, x1 + r, y1 + r}; }
    Rect translated(int dx, int dy) const { return {x0 + dx, y0 + dy, x1 + dx, y1 + dy}; }

    friend auto operator<=>(const Rect&, const Rect&) = default;
};

inline Rect intersect(const Rect& a, const Rect& b)
{
    Rect r{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
    if (r.empty())
        return {};
    return r;
}

inline Rect bounding(const Rect& a, const Rect& b)
{
    if (a.empty())
        return b;
    if (b.empty())
        return a;
    return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
}

enum class Axis : std::uint8_t { Horizontal, Vertical };

/// Sides of a rectangle; Bottom is the min-y wall.
enum class Side : std::uint8_t { Left, Right, Bottom, Top };

inline Side opposite(Side s)
{
    switch (s) {
    case Side::Left: return Side::Right;
    case Side::Right: return Side::Left;
    case Side::Bottom: return Side::Top;
    case Side::Top: return Side::Bottom;
    }
    return s;
}

/// Horizontal walls are the bottom/top sides.
inline Axis wall_axis(Side s)
{
    return (s == Side::Bottom || s == Side::Top) ? Axis::Horizontal : Axis::Vertical;
}

}  // namespace semloft
