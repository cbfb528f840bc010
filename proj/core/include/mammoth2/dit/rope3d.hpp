#pragma once

#include <array>
#include <vector>

#include "mammoth2/nn.hpp"

namespace m2::dit {

// Rotary tables over (x, y, t) coordinates. The head dimension is split into
// three even groups, one per axis; each group is a standard 1-D rotary
// encoding of size d_head/3 over its coordinate. Attention logits between two
// rotated vectors then depend on the coordinate deltas only. t is continuous
// (callers scale it before passing); x/y are grid positions. All-zero
// coordinates give the identity rotation.
nn::RopeTables rope3d_tables(const std::vector<std::array<double, 3>>& pos, int d_head,
                             double base);

}  // namespace m2::dit
