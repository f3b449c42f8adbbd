#pragma once

#include <iosfwd>
#include <string>

#include "semloft/gridmap.hpp"

namespace semloft {

/// Reads binary (P5) or ASCII (P2) PGM. Samples are normalized by maxval into [0,1].
/// A header comment of the form `# resolution <meters>` sets the grid resolution.
OccupancyGrid read_pgm(std::istream& in);
OccupancyGrid load_pgm(const std::string& path);

/// Writes P5 with maxval 255. The resolution comment is emitted only when the grid carries
/// resolution metadata.
void write_pgm(std::ostream& out, const OccupancyGrid& grid);
void save_pgm(const std::string& path, const OccupancyGrid& grid);

/// ASCII variant, mainly for fixtures.
void write_pgm_ascii(std::ostream& out, const OccupancyGrid& grid);

}  // namespace semloft
