#pragma once

#include <vector>

#include "mammoth2/errors.hpp"
#include "mammoth2/numerics/real.hpp"

namespace m2 {

// RGB image, channels in [0, 1], row-major (y, x, c).
struct Image {
    int h = 0;
    int w = 0;
    std::vector<real> px;

    Image() = default;
    Image(int h_, int w_) : h(h_), w(w_), px(static_cast<size_t>(h_) * w_ * 3, real(0)) {}

    real& at(int y, int x, int c) { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    real at(int y, int x, int c) const { return px[(static_cast<size_t>(y) * w + x) * 3 + c]; }
};

}  // namespace m2
