#include "semloft/synth.hpp"

#include <random>

namespace semloft {

OccupancyGrid synth_map(const SemanticWorld& world, const WorldRasterParams& raster, const NoiseModel& noise)
{
    noise.validate();
    ClassifiedGrid clean = rasterize(world, raster);
    std::mt19937_64 rng(noise.seed);

    if (noise.clutter_density > 0.0) {
        std::vector<std::size_t> free_cells;
        for (std::size_t i = 0; i < clean.size(); ++i)
            if (clean.cells[i] == CellState::Free)
                free_cells.push_back(i);
        const auto target = std::size_t(noise.clutter_density * double(free_cells.size()) + 0.5);
        std::size_t converted = 0;
        std::uniform_int_distribution<std::size_t> pick(0, free_cells.empty() ? 0 : free_cells.size() - 1);
        std::uniform_int_distribution<int> side(1, 2);
        // Blobs of 1x1 to 2x2 cells; only originally free cells count towards the budget.
        for (std::size_t attempt = 0; converted < target && attempt < 16 * target + 16; ++attempt) {
            const std::size_t seed_cell = free_cells[pick(rng)];
            const int bx = int(seed_cell % std::size_t(clean.width));
            const int by = int(seed_cell / std::size_t(clean.width));
            const int w = side(rng);
            const int h = side(rng);
            for (int y = by; y < std::min(by + h, clean.height); ++y)
                for (int x = bx; x < std::min(bx + w, clean.width); ++x) {
                    CellState& s = clean.at(x, y);
                    if (s == CellState::Free && converted < target) {
                        s = CellState::Occupied;
                        ++converted;
                    }
                }
        }
    }

    OccupancyGrid out(clean.width, clean.height);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool identity = noise.flip == NoiseModel::identity().flip;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const int s = int(clean.cells[i]);
        int emitted = s;
        if (!identity) {
            const double u = unit(rng);
            double acc = 0.0;
            emitted = kCellStates - 1;
            for (int k = 0; k < kCellStates; ++k) {
                acc += noise.flip[s][k];
                if (u < acc) {
                    emitted = k;
                    break;
                }
            }
        }
        out.cells[i] = canonical_intensity(CellState(emitted));
    }
    return out;
}

}  // namespace semloft
