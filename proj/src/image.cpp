#include "irisnas/image.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>
#include <string>

namespace irisnas {

namespace {

std::size_t read_header_int(std::istream& in, const std::filesystem::path& path)
{
    int c = in.get();
    while (in && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (in && c != '\n')
                c = in.get();
        c = in.get();
    }
    if (!in || !std::isdigit(c))
        throw std::runtime_error(path.string() + ": malformed PGM header");
    std::size_t v = 0;
    while (in && std::isdigit(c)) {
        v = v * 10 + static_cast<std::size_t>(c - '0');
        c = in.get();
    }
    return v;  // the single whitespace after the token has been consumed
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    char magic[2] = {};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw std::runtime_error(path.string() + ": not a binary PGM (P5)");
    const std::size_t w = read_header_int(in, path);
    const std::size_t h = read_header_int(in, path);
    const std::size_t maxval = read_header_int(in, path);
    if (w == 0 || h == 0 || maxval == 0 || maxval > 255)
        throw std::runtime_error(path.string() + ": unsupported PGM geometry or depth");
    GrayImage img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (!in)
        throw std::runtime_error(path.string() + ": truncated PGM data");
    if (maxval != 255)
        for (auto& p : img.pixels)
            p = static_cast<std::uint8_t>((static_cast<unsigned>(p) * 255u + maxval / 2) / maxval);
    return img;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

}  // namespace irisnas
