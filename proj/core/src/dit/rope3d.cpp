#include "mammoth2/dit/rope3d.hpp"

#include <cmath>

namespace m2::dit {

using numerics::Array;
using m2::real;

nn::RopeTables rope3d_tables(const std::vector<std::array<double, 3>>& pos, int d_head,
                             double base) {
    M2_CHECK_CFG(d_head > 0 && d_head % 6 == 0,
             "rope3d: head dim must split into three even groups");
    int group = d_head / 3;
    int gp = group / 2;  // pairs per group
    int64_t n = static_cast<int64_t>(pos.size());
    Array c({n, static_cast<int64_t>(d_head) / 2}), s({n, static_cast<int64_t>(d_head) / 2});
    for (int64_t i = 0; i < n; ++i) {
        for (int axis = 0; axis < 3; ++axis) {
            double coord = pos[static_cast<size_t>(i)][static_cast<size_t>(axis)];
            for (int j = 0; j < gp; ++j) {
                double freq = std::pow(base, -2.0 * j / static_cast<double>(group));
                double ang = coord * freq;
                c.at(i, axis * gp + j) = static_cast<real>(std::cos(ang));
                s.at(i, axis * gp + j) = static_cast<real>(std::sin(ang));
            }
        }
    }
    return {std::move(c), std::move(s)};
}

}  // namespace m2::dit
