#include "semloft/gridmap.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "semloft/error.hpp"

namespace semloft {

OccupancyGrid::OccupancyGrid(int w, int h, double fill)
    : width(w), height(h), cells(std::size_t(w) * std::size_t(h), fill)
{
}

void OccupancyGrid::validate() const
{
    if (width <= 0 || height <= 0)
        throw Error(ErrorKind::Format, "occupancy grid dimensions must be positive");
    if (cells.size() != std::size_t(width) * std::size_t(height))
        throw Error(ErrorKind::Format, "occupancy grid cell count does not match dimensions");
    for (double v : cells)
        if (!(v >= 0.0 && v <= 1.0))
            throw Error(ErrorKind::Format, "occupancy intensity outside [0,1]");
}

void ClassifyThresholds::validate() const
{
    if (!(occupied >= 0.0 && occupied < unknown && unknown <= 1.0))
        throw Error(ErrorKind::Config, "classify thresholds must satisfy 0 <= h_o < h_u <= 1");
}

CellState classify_cell(double m, const ClassifyThresholds& t)
{
    if (m <= t.occupied)
        return CellState::Occupied;
    if (m <= t.unknown)
        return CellState::Unknown;
    return CellState::Free;
}

ClassifiedGrid classify(const OccupancyGrid& grid, const ClassifyThresholds& thresholds)
{
    thresholds.validate();
    ClassifiedGrid out(grid.width, grid.height);
    for (std::size_t i = 0; i < grid.cells.size(); ++i)
        out.cells[i] = classify_cell(grid.cells[i], thresholds);
    return out;
}

double canonical_intensity(CellState state)
{
    switch (state) {
    case CellState::Occupied: return 0.0;
    case CellState::Unknown: return 0.5;
    case CellState::Free: return 1.0;
    }
    return 0.5;
}

OccupancyGrid to_intensity(const ClassifiedGrid& grid)
{
    OccupancyGrid out(grid.width, grid.height);
    for (std::size_t i = 0; i < grid.cells.size(); ++i)
        out.cells[i] = canonical_intensity(grid.cells[i]);
    return out;
}

std::array<std::size_t, kCellStates> count_states(const ClassifiedGrid& grid)
{
    std::array<std::size_t, kCellStates> counts{};
    for (CellState s : grid.cells)
        ++counts[std::size_t(s)];
    return counts;
}

std::uint8_t to_byte(double intensity)
{
    double v = std::round(std::clamp(intensity, 0.0, 1.0) * 255.0);
    return std::uint8_t(v);
}

OrientationEstimate dominant_orientation(const ClassifiedGrid& grid, double step_deg)
{
    if (!(step_deg > 0.0 && step_deg <= 45.0))
        throw Error(ErrorKind::Config, "orientation step must be in (0, 45]");
    std::vector<std::pair<double, double>> points;
    const double cx = grid.width / 2.0;
    const double cy = grid.height / 2.0;
    for (int y = 0; y < grid.height; ++y)
        for (int x = 0; x < grid.width; ++x)
            if (grid.at(x, y) == CellState::Occupied)
                points.emplace_back(x + 0.5 - cx, y + 0.5 - cy);
    if (points.empty())
        throw Error(ErrorKind::Geometry, "dominant_orientation: map has no occupied cells");

    const int steps = int(std::lround(90.0 / step_deg));
    OrientationEstimate best{0.0, -1.0};
    // Each point is split linearly between the two nearest bin centres; hard binning leaves a
    // flat plateau around the true angle.
    std::unordered_map<long, double> hx;
    std::unordered_map<long, double> hy;
    const auto deposit = [](std::unordered_map<long, double>& h, double v) {
        const double u = v - 0.5;
        const double b = std::floor(u);
        const double frac = u - b;
        h[long(b)] += 1.0 - frac;
        h[long(b) + 1] += frac;
    };
    for (int i = 0; i < steps; ++i) {
        const double angle = -45.0 + i * step_deg;
        const double rad = angle * std::numbers::pi / 180.0;
        const double c = std::cos(rad);
        const double s = std::sin(rad);
        hx.clear();
        hy.clear();
        for (auto [px, py] : points) {
            deposit(hx, c * px - s * py + cx);
            deposit(hy, s * px + c * py + cy);
        }
        double sum = 0.0;
        for (auto& [bin, n] : hx)
            sum += n * n;
        for (auto& [bin, n] : hy)
            sum += n * n;
        const double sharpness = sum / double(points.size());
        if (sharpness > best.sharpness ||
            (sharpness == best.sharpness && std::abs(angle) < std::abs(best.angle_deg))) {
            best = {angle, sharpness};
        }
    }
    return best;
}

OccupancyGrid rotate_grid(const OccupancyGrid& grid, double angle_deg)
{
    if (!(std::abs(angle_deg) < 90.0))
        throw Error(ErrorKind::Geometry, "rotate_grid: |angle| must be below 90 degrees");
    if (angle_deg == 0.0)
        return grid;
    OccupancyGrid out = grid;
    const double rad = angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double cx = grid.width / 2.0;
    const double cy = grid.height / 2.0;
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x) {
            const double px = x + 0.5 - cx;
            const double py = y + 0.5 - cy;
            // inverse rotation maps the output cell back into the source
            const double sx = c * px + s * py + cx;
            const double sy = -s * px + c * py + cy;
            const long ix = long(std::floor(sx));
            const long iy = long(std::floor(sy));
            out.at(x, y) = (ix >= 0 && iy >= 0 && ix < grid.width && iy < grid.height)
                               ? grid.at(int(ix), int(iy))
                               : 0.5;
        }
    }
    return out;
}

NoiseModel NoiseModel::uniform_flip(double rate, double clutter, std::uint64_t seed)
{
    NoiseModel m;
    for (int i = 0; i < kCellStates; ++i)
        for (int j = 0; j < kCellStates; ++j)
            m.flip[i][j] = i == j ? 1.0 - rate : rate / 2.0;
    m.clutter_density = clutter;
    m.seed = seed;
    return m;
}

void NoiseModel::validate() const
{
    for (const auto& row : flip) {
        double sum = 0.0;
        for (double p : row) {
            if (!(p >= 0.0))
                throw Error(ErrorKind::Config, "noise confusion entries must be nonnegative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw Error(ErrorKind::Config, "noise confusion rows must sum to 1");
    }
    if (!(clutter_density >= 0.0 && clutter_density < 1.0))
        throw Error(ErrorKind::Config, "clutter density must be in [0,1)");
}

}  // namespace semloft
