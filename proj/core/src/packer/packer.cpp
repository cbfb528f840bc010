#include "mammoth2/packer/packer.hpp"

#include <algorithm>
#include <fstream>

#include "mammoth2/errors.hpp"
#include "mammoth2/io/metrics.hpp"

namespace m2::packer {

PackResult pack(const std::vector<PackItem>& items, int64_t budget, int window,
                int64_t hard_max) {
    M2_CHECK_CFG(budget >= 1, "pack: budget must be positive");
    M2_CHECK_CFG(window >= 1, "pack: prefetch window must be positive");
    M2_CHECK_CFG(hard_max >= 1, "pack: hard_max must be positive");

    PackResult res;
    std::vector<PackItem> win;
    size_t next = 0;

    auto admit = [&] {
        while (win.size() < static_cast<size_t>(window) && next < items.size()) {
            const PackItem& it = items[next++];
            M2_CHECK(it.token_count > 0,
                     "pack: non-positive token count for sample " + std::to_string(it.id));
            if (it.token_count > hard_max) {
                res.rejected_ids.push_back(it.id);
                continue;
            }
            if (it.token_count > budget) {
                // legal but unbatchable: its own batch, budget widened to fit
                res.batches.push_back(PackedBatch{{it.id}, it.token_count, it.token_count});
                res.singleton_ids.push_back(it.id);
                continue;
            }
            win.push_back(it);
        }
    };

    PackedBatch cur;
    cur.budget = budget;
    admit();
    while (!win.empty()) {
        int best = -1;
        for (int i = 0; i < static_cast<int>(win.size()); ++i) {
            if (cur.total_tokens + win[static_cast<size_t>(i)].token_count > budget) continue;
            if (best < 0 ||
                win[static_cast<size_t>(i)].token_count > win[static_cast<size_t>(best)].token_count)
                best = i;
        }
        if (best < 0) {  // nothing fits; every windowed item fits an empty batch
            res.batches.push_back(std::move(cur));
            cur = PackedBatch{};
            cur.budget = budget;
            continue;
        }
        cur.ids.push_back(win[static_cast<size_t>(best)].id);
        cur.total_tokens += win[static_cast<size_t>(best)].token_count;
        win.erase(win.begin() + best);
        admit();
    }
    if (!cur.ids.empty()) res.batches.push_back(std::move(cur));
    return res;
}

double padding_waste(const std::vector<int64_t>& rows, int64_t pad_to, PadAccounting acc) {
    if (acc == PadAccounting::zero_forward) return 0.0;
    if (rows.empty()) return 0.0;
    M2_CHECK(pad_to >= 1, "padding: pad_to must be positive");
    int64_t real_tokens = 0;
    for (int64_t r : rows) {
        M2_CHECK(r >= 1, "padding: non-positive row length");
        M2_CHECK(r <= pad_to, "padding: row longer than pad_to");
        real_tokens += r;
    }
    double cells = static_cast<double>(rows.size()) * static_cast<double>(pad_to);
    return (cells - static_cast<double>(real_tokens)) / cells;
}

double packed_waste(const std::vector<PackedBatch>& batches) {
    if (batches.empty()) return 0.0;
    double cells = 0.0, real_tokens = 0.0;
    for (const PackedBatch& b : batches) {
        M2_CHECK(!b.ids.empty() && b.total_tokens >= 1 && b.total_tokens <= b.budget,
                 "padding: malformed batch");
        cells += static_cast<double>(b.budget);
        real_tokens += static_cast<double>(b.total_tokens);
    }
    return (cells - real_tokens) / cells;
}

double naive_waste(const std::vector<int64_t>& lengths, int batch_size) {
    M2_CHECK_CFG(batch_size >= 1, "padding: batch size must be positive");
    if (lengths.empty()) return 0.0;
    double cells = 0.0;
    int64_t real_tokens = 0;
    for (size_t i = 0; i < lengths.size(); i += static_cast<size_t>(batch_size)) {
        size_t end = std::min(lengths.size(), i + static_cast<size_t>(batch_size));
        int64_t longest = 0;
        for (size_t j = i; j < end; ++j) {
            M2_CHECK(lengths[j] >= 1, "padding: non-positive row length");
            longest = std::max(longest, lengths[j]);
            real_tokens += lengths[j];
        }
        cells += static_cast<double>(end - i) * static_cast<double>(longest);
    }
    return (cells - static_cast<double>(real_tokens)) / cells;
}

PackStats throughput_sim(const std::vector<int64_t>& lengths, int64_t budget, int window,
                         int naive_batch, int64_t hard_max) {
    M2_CHECK(!lengths.empty(), "throughput sim: empty workload");
    std::vector<PackItem> items(lengths.size());
    for (size_t i = 0; i < lengths.size(); ++i)
        items[i] = PackItem{static_cast<int64_t>(i), lengths[i]};
    PackResult res = pack(items, budget, window, hard_max);

    PackStats stats;
    stats.batches = static_cast<int64_t>(res.batches.size());
    stats.rejected = static_cast<int64_t>(res.rejected_ids.size());
    stats.singletons = static_cast<int64_t>(res.singleton_ids.size());
    int64_t fill = 0, filled = 0;
    for (const PackedBatch& b : res.batches) {
        if (b.budget != budget) continue;  // widened singletons carry no fill signal
        fill += b.total_tokens;
        ++filled;
    }
    stats.mean_fill = filled ? static_cast<double>(fill) / static_cast<double>(filled) : 0.0;
    stats.waste_packed = packed_waste(res.batches);
    stats.waste_naive = naive_waste(lengths, naive_batch);
    return stats;
}

std::string pack_report(const PackStats& stats) {
    return "batches=" + std::to_string(stats.batches) + " mean_fill=" +
           io::fmt_real(stats.mean_fill) + " waste_naive=" + io::fmt_real(stats.waste_naive) +
           " waste_packed=" + io::fmt_real(stats.waste_packed);
}

std::vector<int64_t> read_workload(const std::string& path) {
    std::ifstream is(path);
    M2_CHECK(is.is_open(), "cannot open workload file: " + path);
    std::vector<int64_t> lengths;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        size_t pos = 0;
        int64_t v = 0;
        try {
            v = std::stoll(line, &pos);
        } catch (const std::exception&) {
            throw ValidationError("workload line is not a token count: " + line);
        }
        M2_CHECK(pos == line.size(), "workload line is not a token count: " + line);
        lengths.push_back(v);
    }
    return lengths;
}

void write_workload(const std::string& path, const std::vector<int64_t>& lengths) {
    std::ofstream os(path);
    M2_CHECK(os.is_open(), "cannot write workload file: " + path);
    for (int64_t v : lengths) os << v << "\n";
}

}  // namespace m2::packer
