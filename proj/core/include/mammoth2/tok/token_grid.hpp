#pragma once

#include <cstdint>
#include <vector>

namespace m2::tok {

// Raster-ordered grid of codebook indices (row-major, top-left first).
struct TokenGrid {
    int h = 0;
    int w = 0;
    std::vector<int32_t> ids;

    TokenGrid() = default;
    TokenGrid(int h_, int w_) : h(h_), w(w_), ids(static_cast<size_t>(h_) * w_, 0) {}

    int size() const { return h * w; }
    int32_t& at(int y, int x) { return ids[static_cast<size_t>(y) * w + x]; }
    int32_t at(int y, int x) const { return ids[static_cast<size_t>(y) * w + x]; }

    bool operator==(const TokenGrid& o) const = default;
};

}  // namespace m2::tok
