#include "semloft/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <vector>

#include "semloft/error.hpp"

namespace semloft {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(const std::vector<unsigned char>& data) : data_(data) {}

    std::size_t offset() const { return pos_; }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorKind::Format, "pgm parse error at byte " + std::to_string(pos_) + ": " + what);
    }

    // Skips whitespace and comments; comment text is scanned for resolution metadata.
    void skip_space()
    {
        while (pos_ < data_.size()) {
            unsigned char c = data_[pos_];
            if (c == '#') {
                std::size_t end = pos_;
                while (end < data_.size() && data_[end] != '\n' && data_[end] != '\r')
                    ++end;
                parse_comment(std::string(data_.begin() + pos_ + 1, data_.begin() + end));
                pos_ = end;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* what)
    {
        skip_space();
        if (pos_ >= data_.size())
            fail(std::string("unexpected end of data reading ") + what);
        if (!std::isdigit(data_[pos_]))
            fail(std::string("expected digit for ") + what);
        long v = 0;
        while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
            v = v * 10 + (data_[pos_] - '0');
            if (v > 100000000)
                fail(std::string("value too large for ") + what);
            ++pos_;
        }
        return v;
    }

    // Exactly one whitespace byte separates maxval from binary data.
    void single_space()
    {
        if (pos_ >= data_.size() || !std::isspace(data_[pos_]))
            fail("expected whitespace after maxval");
        ++pos_;
    }

    std::size_t pos_ = 0;
    bool has_resolution = false;
    double resolution = 0.05;

private:
    void parse_comment(const std::string& text)
    {
        std::istringstream ss(text);
        std::string key;
        double value = 0.0;
        if (ss >> key && (key == "resolution" || key == "resolution:") && ss >> value && value > 0.0) {
            has_resolution = true;
            resolution = value;
        }
    }

    const std::vector<unsigned char>& data_;
};

}  // namespace

OccupancyGrid read_pgm(std::istream& in)
{
    std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    HeaderReader reader(data);
    if (data.size() < 2 || data[0] != 'P')
        throw Error(ErrorKind::Format, "not a PGM file (missing 'P' magic)");
    if (data[1] != '2' && data[1] != '5')
        throw Error(ErrorKind::Format, std::string("unsupported magic number P") + char(data[1]));
    const bool binary = data[1] == '5';
    reader.pos_ = 2;

    const long width = reader.read_uint("width");
    const long height = reader.read_uint("height");
    const long maxval = reader.read_uint("maxval");
    if (width <= 0 || height <= 0)
        reader.fail("dimensions must be positive");
    if (maxval <= 0 || maxval > 65535)
        reader.fail("maxval must be in [1, 65535]");

    OccupancyGrid grid(static_cast<int>(width), static_cast<int>(height));
    grid.has_resolution = reader.has_resolution;
    grid.resolution = reader.resolution;
    const std::size_t count = std::size_t(width) * std::size_t(height);
    const double scale = 1.0 / double(maxval);

    if (binary) {
        reader.single_space();
        const std::size_t bytes_per = maxval > 255 ? 2 : 1;
        if (data.size() - reader.offset() < count * bytes_per)
            throw Error(ErrorKind::Format, "pgm parse error at byte " + std::to_string(data.size()) +
                                               ": truncated pixel data (expected " +
                                               std::to_string(count * bytes_per) + " bytes)");
        const unsigned char* p = data.data() + reader.offset();
        for (std::size_t i = 0; i < count; ++i) {
            long v = bytes_per == 2 ? (long(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
            if (v > maxval) {
                reader.pos_ = reader.offset() + i * bytes_per;
                reader.fail("sample exceeds maxval");
            }
            grid.cells[i] = double(v) * scale;
        }
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            long v = reader.read_uint("sample");
            if (v > maxval)
                reader.fail("sample exceeds maxval");
            grid.cells[i] = double(v) * scale;
        }
    }
    return grid;
}

OccupancyGrid load_pgm(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open map file '" + path + "'");
    return read_pgm(in);
}

namespace {

void write_header(std::ostream& out, const char* magic, const OccupancyGrid& grid)
{
    out << magic << '\n';
    if (grid.has_resolution) {
        std::ostringstream res;
        res << std::setprecision(17) << grid.resolution;
        out << "# resolution " << res.str() << '\n';
    }
    out << grid.width << ' ' << grid.height << '\n' << 255 << '\n';
}

}  // namespace

void write_pgm(std::ostream& out, const OccupancyGrid& grid)
{
    write_header(out, "P5", grid);
    std::vector<char> bytes(grid.cells.size());
    for (std::size_t i = 0; i < grid.cells.size(); ++i)
        bytes[i] = char(to_byte(grid.cells[i]));
    out.write(bytes.data(), std::streamsize(bytes.size()));
}

void write_pgm_ascii(std::ostream& out, const OccupancyGrid& grid)
{
    write_header(out, "P2", grid);
    for (int y = 0; y < grid.height; ++y) {
        for (int x = 0; x < grid.width; ++x)
            out << (x ? " " : "") << int(to_byte(grid.at(x, y)));
        out << '\n';
    }
}

void save_pgm(const std::string& path, const OccupancyGrid& grid)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    write_pgm(out, grid);
    if (!out)
        throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

}  // namespace semloft
