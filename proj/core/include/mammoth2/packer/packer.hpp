#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace m2::packer {

struct PackItem {
    int64_t id = 0;
    int64_t token_count = 0;  // > 0
};

struct PackedBatch {
    std::vector<int64_t> ids;
    int64_t total_tokens = 0;
    int64_t budget = 0;  // total_tokens <= budget; an oversized singleton widens it
};

struct PackResult {
    std::vector<PackedBatch> batches;
    std::vector<int64_t> rejected_ids;   // token_count > hard_max: never packed
    std::vector<int64_t> singleton_ids;  // budget < token_count <= hard_max: own batch, warning
};

// Streaming token-budget packing: a sliding prefetch window of up to `window`
// items feeds best-fit-decreasing placement — the largest windowed item that
// still fits joins the open batch (ties to the earliest), and the batch
// flushes when nothing fits. Items larger than the budget but within hard_max
// are emitted as singleton batches at admission time (their budget widens to
// the item length); items above hard_max are rejected. Every admitted item
// lands in exactly one batch, and the flush order is deterministic.
PackResult pack(const std::vector<PackItem>& items, int64_t budget, int window,
                int64_t hard_max = 16384);

// dense: every row padded to pad_to, waste = padded cells carrying no token.
// zero_forward: padding is never materialized, so the waste is zero by
// construction.
enum class PadAccounting { dense, zero_forward };

// rows = real lengths. Requires pad_to >= every row; empty input wastes
// nothing. Returns a fraction in [0, 1).
double padding_waste(const std::vector<int64_t>& rows, int64_t pad_to,
                     PadAccounting acc = PadAccounting::dense);

// Dense waste of token-budget batches: each batch occupies its own budget of
// cells, filled by total_tokens real ones.
double packed_waste(const std::vector<PackedBatch>& batches);

// Dense waste of fixed-count batching over the same stream: consecutive
// groups of batch_size rows, each row padded to its group's longest.
double naive_waste(const std::vector<int64_t>& lengths, int batch_size);

struct PackStats {
    int64_t batches = 0;
    double mean_fill = 0.0;    // mean real tokens per non-singleton batch budget
    double waste_packed = 0.0;
    double waste_naive = 0.0;
    int64_t rejected = 0;
    int64_t singletons = 0;
};

// Packs a workload and reports the measurable throughput proxies against
// naive fixed-count batching. Deterministic in its inputs.
PackStats throughput_sim(const std::vector<int64_t>& lengths, int64_t budget, int window,
                         int naive_batch = 32, int64_t hard_max = 16384);

// "batches=... mean_fill=... waste_naive=... waste_packed=..."
std::string pack_report(const PackStats& stats);

// One token count per line.
std::vector<int64_t> read_workload(const std::string& path);
void write_workload(const std::string& path, const std::vector<int64_t>& lengths);

}  // namespace m2::packer
