#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "semloft/geometry.hpp"

namespace semloft {

/// Raster occupancy map. Intensities follow the image convention:
/// 0 is dark (occupied), 1 is bright (free).
struct OccupancyGrid {
    int width = 0;
    int height = 0;
    double resolution = 0.05;  ///< meters per cell
    bool has_resolution = false;  ///< true when the source carried resolution metadata
    std::vector<double> cells;  ///< row-major, y-major index y*width + x

    OccupancyGrid() = default;
    OccupancyGrid(int w, int h, double fill = 0.5);

    std::size_t size() const { return cells.size(); }
    double& at(int x, int y) { return cells[std::size_t(y) * width + x]; }
    double at(int x, int y) const { return cells[std::size_t(y) * width + x]; }

    /// Throws Format if the invariants (size, [0,1] range) are violated.
    void validate() const;
};

/// Discrete cell state; numeric codes match the classifier output.
enum class CellState : std::uint8_t { Free = 0, Unknown = 1, Occupied = 2 };

constexpr int kCellStates = 3;

struct ClassifiedGrid {
    int width = 0;
    int height = 0;
    std::vector<CellState> cells;

    ClassifiedGrid() = default;
    ClassifiedGrid(int w, int h, CellState fill = CellState::Unknown)
        : width(w), height(h), cells(std::size_t(w) * h, fill) {}

    std::size_t size() const { return cells.size(); }
    CellState& at(int x, int y) { return cells[std::size_t(y) * width + x]; }
    CellState at(int x, int y) const { return cells[std::size_t(y) * width + x]; }
    Rect bounds() const { return {0, 0, width, height}; }

    bool operator==(const ClassifiedGrid&) const = default;
};

struct ClassifyThresholds {
    double occupied = 0.25;  ///< h_o
    double unknown = 0.75;   ///< h_u

    /// Throws Config unless 0 <= h_o < h_u <= 1.
    void validate() const;
};

/// M <= h_o -> Occupied, h_o < M <= h_u -> Unknown, M > h_u -> Free.
CellState classify_cell(double intensity, const ClassifyThresholds& thresholds);
ClassifiedGrid classify(const OccupancyGrid& grid, const ClassifyThresholds& thresholds);

/// Canonical intensity of a state (Occupied 0.0, Unknown 0.5, Free 1.0).
double canonical_intensity(CellState state);
OccupancyGrid to_intensity(const ClassifiedGrid& grid);

std::array<std::size_t, kCellStates> count_states(const ClassifiedGrid& grid);

struct OrientationEstimate {
    double angle_deg = 0.0;  ///< rotation that aligns walls with the axes, in [-45, 45)
    double sharpness = 0.0;  ///< mean squared projection-bin count per occupied cell
};

/// Sweeps [-45, 45) in `step_deg` increments and returns the rotation under which the
/// row/column projection histograms of occupied cells are sharpest. Rotating the grid by the
/// returned angle with rotate_grid aligns its dominant walls with the axes.
OrientationEstimate dominant_orientation(const ClassifiedGrid& grid, double step_deg = 0.5);

/// Rotates about the grid center by `angle_deg` (counter-clockwise in cell coordinates) with
/// nearest-neighbour resampling. Cells mapping outside the source become 0.5.
OccupancyGrid rotate_grid(const OccupancyGrid& grid, double angle_deg);

/// Convert intensities to 8-bit-exact values in case the caller needs a PGM-stable grid.
std::uint8_t to_byte(double intensity);

/// Synthetic-map noise. Row s of `flip` is the distribution of the emitted state given the
/// clean state s (indexed by CellState codes).
struct NoiseModel {
    std::array<std::array<double, kCellStates>, kCellStates> flip{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    std::uint64_t seed = 1;
    double clutter_density = 0.0;  ///< fraction of free cells turned into small occupied blobs

    static NoiseModel identity() { return {}; }
    /// Diagonal 1-rate, off-diagonal rate/2 on every row.
    static NoiseModel uniform_flip(double rate, double clutter, std::uint64_t seed);

    void validate() const;
};

}  // namespace semloft
