#include "semloft/render.hpp"

#include <array>
#include <cstdio>
#include <memory>

#include <png.h>

#include "semloft/error.hpp"

namespace semloft {

std::vector<std::uint8_t> overlay_indices(const ClassifiedGrid& map_c, const SemanticWorld& world, int t)
{
    const ClassifiedGrid pred = rasterize(world, {t, map_c.width, map_c.height});
    std::vector<std::uint8_t> doors(map_c.size(), 0);
    for (const Door& d : world.doors)
        if (auto carve = door_carve(world, d, t)) {
            const Rect r = intersect(*carve, map_c.bounds());
            for (int y = r.y0; y < r.y1; ++y)
                for (int x = r.x0; x < r.x1; ++x)
                    doors[std::size_t(y) * map_c.width + x] = 1;
        }
    std::vector<std::uint8_t> out(map_c.size());
    for (int y = 0; y < map_c.height; ++y)
        for (int x = 0; x < map_c.width; ++x) {
            const std::size_t i = std::size_t(y) * map_c.width + x;
            OverlayColor c = OverlayColor(map_c.cells[i]);
            if (doors[i])
                c = OverlayColor::Door;
            else if (pred.cells[i] == CellState::Occupied)
                c = OverlayColor::Wall;
            else if (pred.cells[i] == CellState::Free && map_c.cells[i] == CellState::Free)
                c = OverlayColor::Interior;
            out[i] = std::uint8_t(c);
        }
    return out;
}

void write_overlay_png(const std::string& path, const ClassifiedGrid& map_c, const SemanticWorld& world,
                       int wall_thickness)
{
    const auto pixels = overlay_indices(map_c, world, wall_thickness);
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!file)
        throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(ErrorKind::Io, "png encoder initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::Io, "png encoding of '" + path + "' failed");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, png_uint_32(map_c.width), png_uint_32(map_c.height), 8, PNG_COLOR_TYPE_PALETTE,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::array<png_color, 6> palette{{
        {255, 255, 255},  // free
        {128, 128, 128},  // unknown
        {0, 0, 0},        // occupied
        {40, 80, 220},    // wall
        {0, 220, 220},    // door
        {225, 240, 210},  // interior
    }};
    png_set_PLTE(png, info, palette.data(), int(palette.size()));
    // No timestamp or text chunks: output bytes depend only on the pixels.
    png_write_info(png, info);
    for (int y = 0; y < map_c.height; ++y)
        png_write_row(png, pixels.data() + std::size_t(y) * map_c.width);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace semloft
