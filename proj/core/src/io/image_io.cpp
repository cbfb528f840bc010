#include "mammoth2/io/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mammoth2/io/serial.hpp"

namespace m2::io {

std::string ppm_bytes(const Image& img) {
    M2_CHECK(img.h > 0 && img.w > 0, "image has no pixels");
    std::string out = "P6\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
    out.reserve(out.size() + static_cast<size_t>(img.h) * img.w * 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = std::clamp(static_cast<double>(img.at(y, x, c)), 0.0, 1.0);
                out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
            }
    return out;
}

void write_ppm(const std::string& path, const Image& img) {
    std::string bytes = ppm_bytes(img);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    M2_CHECK(os.is_open(), "cannot open image for writing: " + path);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    os.flush();
    M2_CHECK(os.good(), "image write failed: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    M2_CHECK(is.is_open(), "cannot open image: " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    is >> magic >> w >> h >> maxval;
    M2_CHECK(magic == "P6" && w > 0 && h > 0 && maxval == 255, "not an 8-bit P6 image: " + path);
    is.get();  // single whitespace byte after the header
    Image img(h, w);
    std::vector<unsigned char> raw(static_cast<size_t>(w) * static_cast<size_t>(h) * 3);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    M2_CHECK(is.good(), "image truncated: " + path);
    for (size_t i = 0; i < raw.size(); ++i)
        img.px[i] = static_cast<real>(raw[i]) / real(255);
    return img;
}

void write_token_grid(const std::string& path, const tok::TokenGrid& grid) {
    M2_CHECK(grid.size() == static_cast<int>(grid.ids.size()), "token grid size mismatch");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    M2_CHECK(os.is_open(), "cannot open token grid for writing: " + path);
    write_u32(os, static_cast<uint32_t>(grid.h));
    write_u32(os, static_cast<uint32_t>(grid.w));
    for (int32_t id : grid.ids) {
        M2_CHECK(id >= 0, "token grid holds a negative id");
        write_u32(os, static_cast<uint32_t>(id));
    }
    os.flush();
    M2_CHECK(os.good(), "token grid write failed: " + path);
}

tok::TokenGrid read_token_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    M2_CHECK(is.is_open(), "cannot open token grid: " + path);
    tok::TokenGrid grid;
    grid.h = static_cast<int>(read_u32(is));
    grid.w = static_cast<int>(read_u32(is));
    M2_CHECK(grid.h > 0 && grid.w > 0 && grid.h * grid.w <= (1 << 24),
             "token grid dimensions out of range");
    grid.ids.resize(static_cast<size_t>(grid.h) * static_cast<size_t>(grid.w));
    for (auto& id : grid.ids) id = static_cast<int32_t>(read_u32(is));
    return grid;
}

}  // namespace m2::io
