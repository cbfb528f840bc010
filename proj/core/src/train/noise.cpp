#include "mammoth2/train/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace m2::train {

using numerics::Array;
using numerics::Rng;

NeighborTable::NeighborTable(const Array& codebook, int m) : m_(m) {
    M2_CHECK(codebook.rank() == 2, "neighbor table needs a {K, d} codebook");
    const int k = static_cast<int>(codebook.dim(0));
    const int d = static_cast<int>(codebook.dim(1));
    M2_CHECK(m >= 1 && m < k, "neighbor count must satisfy 1 <= m < K");
    std::vector<double> norm(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        double s = 0;
        for (int c = 0; c < d; ++c) {
            double x = codebook.at(i, c);
            s += x * x;
        }
        norm[static_cast<size_t>(i)] = std::sqrt(s);
    }
    rows_.resize(static_cast<size_t>(k));
    std::vector<std::pair<double, int>> scored(static_cast<size_t>(k - 1));
    for (int i = 0; i < k; ++i) {
        size_t n = 0;
        for (int j = 0; j < k; ++j) {
            if (j == i) continue;
            double dot = 0;
            for (int c = 0; c < d; ++c) dot += double(codebook.at(i, c)) * codebook.at(j, c);
            double cos = dot / std::max(1e-12, norm[static_cast<size_t>(i)] *
                                                   norm[static_cast<size_t>(j)]);
            scored[n++] = {cos, j};
        }
        // cosine descending, lower index on ties
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        auto& row = rows_[static_cast<size_t>(i)];
        row.resize(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) row[static_cast<size_t>(j)] = scored[static_cast<size_t>(j)].second;
    }
}

const std::vector<int32_t>& NeighborTable::row(int code) const {
    M2_CHECK(code >= 0 && code < codes(), "neighbor lookup out of codebook range");
    return rows_[static_cast<size_t>(code)];
}

namespace {

NoiseResult identity_result(const tok::TokenGrid& grid) { return NoiseResult{grid, {}, {}, {}}; }

}  // namespace

NoiseResult region_noise(const tok::TokenGrid& grid, const NoiseSpec& spec, int codebook_size,
                         Rng& rng) {
    M2_CHECK(spec.rate >= 0.0 && spec.rate <= 1.0, "noise rate must lie in [0, 1]");
    M2_CHECK(codebook_size > 0, "region noise needs a codebook to draw from");
    M2_CHECK(spec.patch_h >= 1 && spec.patch_w >= 1 && spec.patch_h <= grid.h &&
                 spec.patch_w <= grid.w,
             "noise patch does not fit the grid");
    const int cells = grid.size();
    const int target = std::min<int>(cells, static_cast<int>(std::lround(spec.rate * cells)));
    if (target == 0) return identity_result(grid);

    std::vector<uint8_t> covered(static_cast<size_t>(cells), 0);
    std::vector<int> order;
    order.reserve(static_cast<size_t>(target));
    int64_t attempts = 0;
    const int64_t max_attempts = 1000 + 100ll * cells;
    while (static_cast<int>(order.size()) < target) {
        M2_CHECK(++attempts < max_attempts, "region noise failed to reach coverage");
        int y0 = static_cast<int>(rng.uniform_int(grid.h - spec.patch_h + 1));
        int x0 = static_cast<int>(rng.uniform_int(grid.w - spec.patch_w + 1));
        for (int dy = 0; dy < spec.patch_h && static_cast<int>(order.size()) < target; ++dy)
            for (int dx = 0; dx < spec.patch_w && static_cast<int>(order.size()) < target; ++dx) {
                int idx = (y0 + dy) * grid.w + (x0 + dx);
                if (!covered[static_cast<size_t>(idx)]) {
                    covered[static_cast<size_t>(idx)] = 1;
                    order.push_back(idx);
                }
            }
    }
    std::sort(order.begin(), order.end());

    NoiseResult out{grid, {}, {}, {}};
    out.positions = order;
    for (int idx : order) {
        out.old_ids.push_back(grid.ids[static_cast<size_t>(idx)]);
        int32_t nid = static_cast<int32_t>(rng.uniform_int(codebook_size));
        out.new_ids.push_back(nid);
        out.grid.ids[static_cast<size_t>(idx)] = nid;
    }
    return out;
}

NoiseResult similarity_noise(const tok::TokenGrid& grid, const NoiseSpec& spec,
                             const NeighborTable& neighbors, Rng& rng) {
    M2_CHECK(spec.rate >= 0.0 && spec.rate <= 1.0, "noise rate must lie in [0, 1]");
    M2_CHECK(spec.neighbors >= 1 && spec.neighbors <= neighbors.m(),
             "similarity noise asks for more neighbors than the table holds");
    NoiseResult out{grid, {}, {}, {}};
    for (int idx = 0; idx < grid.size(); ++idx) {
        if (rng.uniform() >= spec.rate) continue;
        int32_t old_id = grid.ids[static_cast<size_t>(idx)];
        const auto& row = neighbors.row(old_id);
        int32_t nid = row[static_cast<size_t>(rng.uniform_int(spec.neighbors))];
        out.positions.push_back(idx);
        out.old_ids.push_back(old_id);
        out.new_ids.push_back(nid);
        out.grid.ids[static_cast<size_t>(idx)] = nid;
    }
    return out;
}

NoiseResult apply_noise(const tok::TokenGrid& grid, const NoiseSpec& spec, int codebook_size,
                        const NeighborTable* neighbors, Rng& rng) {
    switch (spec.kind) {
        case NoiseKind::none: return identity_result(grid);
        case NoiseKind::region: return region_noise(grid, spec, codebook_size, rng);
        case NoiseKind::similarity:
            M2_CHECK(neighbors != nullptr, "similarity noise needs a neighbor table");
            return similarity_noise(grid, spec, *neighbors, rng);
    }
    throw ValidationError("unknown noise kind");
}

}  // namespace m2::train
