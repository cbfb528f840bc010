#pragma once

#include <cstdint>
#include <vector>

#include "mammoth2/numerics/array.hpp"
#include "mammoth2/numerics/rng.hpp"
#include "mammoth2/tok/token_grid.hpp"

namespace m2::train {

enum class NoiseKind { none, region, similarity };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::none;
    double rate = 0.0;  // target fraction of cells replaced (region) or
                        // per-cell replacement probability (similarity)
    int neighbors = 8;  // m for similarity noise
    int patch_h = 2;    // rectangle dims for region noise
    int patch_w = 2;
};

// Replacement record: grid plus which cells changed (noise regularizes the
// AR input only — next-token targets stay clean, and edit losses may
// upweight the touched cells).
struct NoiseResult {
    tok::TokenGrid grid;
    std::vector<int> positions;  // raster indices of replaced cells
    std::vector<int32_t> old_ids;
    std::vector<int32_t> new_ids;
};

// m nearest codebook entries per code by cosine similarity (self excluded),
// precomputed once per codebook state.
class NeighborTable {
public:
    NeighborTable(const numerics::Array& codebook, int m);

    int codes() const { return static_cast<int>(rows_.size()); }
    int m() const { return m_; }
    const std::vector<int32_t>& row(int code) const;

private:
    int m_ = 0;
    std::vector<std::vector<int32_t>> rows_;
};

// Replaces ~rate of the cells in randomly placed patch_h x patch_w
// rectangles with uniform-random codebook ids. The covered-cell count is
// exact: the last rectangle is trimmed in most-recently-covered order.
NoiseResult region_noise(const tok::TokenGrid& grid, const NoiseSpec& spec, int codebook_size,
                         numerics::Rng& rng);

// Each cell independently with probability rate is replaced by a uniform
// choice among its m nearest codebook neighbors.
NoiseResult similarity_noise(const tok::TokenGrid& grid, const NoiseSpec& spec,
                             const NeighborTable& neighbors, numerics::Rng& rng);

// Dispatch on spec.kind; `neighbors` may be null unless kind == similarity.
NoiseResult apply_noise(const tok::TokenGrid& grid, const NoiseSpec& spec, int codebook_size,
                        const NeighborTable* neighbors, numerics::Rng& rng);

}  // namespace m2::train
