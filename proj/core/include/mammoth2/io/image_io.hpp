#pragma once

#include <string>

#include "mammoth2/image.hpp"
#include "mammoth2/tok/token_grid.hpp"

namespace m2::io {

// Binary PPM (P6, maxval 255): the minimal headered raw-RGB format. Pixels
// quantize via round(clamp(v, 0, 1) * 255).
std::string ppm_bytes(const Image& img);
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Token grids: 8-byte header (h, w as u32 LE) then row-major ids as u32 LE.
void write_token_grid(const std::string& path, const tok::TokenGrid& grid);
tok::TokenGrid read_token_grid(const std::string& path);

}  // namespace m2::io
