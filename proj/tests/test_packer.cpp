#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"

#include "mammoth2/errors.hpp"
#include "mammoth2/numerics/rng.hpp"
#include "mammoth2/packer/packer.hpp"

using namespace m2;
using namespace m2::packer;

namespace {

std::string tmp_dir() {
    static std::string dir = [] {
        std::string d = (std::filesystem::temp_directory_path() / "m2_test_packer").string();
        std::filesystem::remove_all(d);
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

std::vector<PackItem> items_of(const std::vector<int64_t>& lengths) {
    std::vector<PackItem> items(lengths.size());
    for (size_t i = 0; i < lengths.size(); ++i)
        items[i] = PackItem{static_cast<int64_t>(i), lengths[i]};
    return items;
}

std::vector<int64_t> uniform_lengths(int n, int64_t lo, int64_t hi, uint64_t seed) {
    numerics::Rng rng(seed);
    std::vector<int64_t> lengths(static_cast<size_t>(n));
    for (auto& v : lengths) v = lo + rng.uniform_int(hi - lo + 1);
    return lengths;
}

// every admitted item lands in exactly one batch; rejected items in none
void check_partition(const PackResult& res, const std::vector<PackItem>& items) {
    std::map<int64_t, int> seen;
    for (const PackedBatch& b : res.batches) {
        REQUIRE(!b.ids.empty());
        int64_t total = 0;
        for (int64_t id : b.ids) {
            ++seen[id];
            total += items[static_cast<size_t>(id)].token_count;
        }
        CHECK(total == b.total_tokens);
        CHECK(b.total_tokens <= b.budget);
    }
    for (int64_t id : res.rejected_ids) ++seen[id];
    REQUIRE(seen.size() == items.size());
    for (const auto& [id, n] : seen) {
        CHECK(n == 1);
        CHECK(id >= 0);
        CHECK(id < static_cast<int64_t>(items.size()));
    }
}

}  // namespace

TEST_CASE("packing picks the largest windowed item that still fits") {
    PackResult res = pack(items_of({10, 20, 30}), 40, 3);
    REQUIRE(res.batches.size() == 2);
    CHECK(res.batches[0].ids == std::vector<int64_t>{2, 0});  // 30 first, then 10 tops it off
    CHECK(res.batches[0].total_tokens == 40);
    CHECK(res.batches[1].ids == std::vector<int64_t>{1});
    CHECK(res.batches[1].total_tokens == 20);
    CHECK(res.rejected_ids.empty());
    CHECK(res.singleton_ids.empty());
}

TEST_CASE("packing an empty stream yields no batches") {
    PackResult res = pack({}, 100, 8);
    CHECK(res.batches.empty());
    CHECK(res.rejected_ids.empty());
    CHECK(res.singleton_ids.empty());
}

TEST_CASE("items exactly at the budget each fill their own batch") {
    PackResult res = pack(items_of({50, 50, 50}), 50, 4);
    REQUIRE(res.batches.size() == 3);
    for (const PackedBatch& b : res.batches) {
        CHECK(b.ids.size() == 1);
        CHECK(b.total_tokens == 50);
    }
}

TEST_CASE("a window of one degenerates to next-fit in stream order") {
    // 30 opens a batch, 25 does not fit and forces a flush, then 25+10+5 fill
    PackResult res = pack(items_of({30, 25, 10, 5}), 40, 1);
    REQUIRE(res.batches.size() == 2);
    CHECK(res.batches[0].ids == std::vector<int64_t>{0});
    CHECK(res.batches[1].ids == std::vector<int64_t>{1, 2, 3});
    CHECK(res.batches[1].total_tokens == 40);
}

TEST_CASE("oversized items become singleton batches or rejections") {
    // budget 40, hard_max 100: 60 is a widened singleton, 300 is rejected
    PackResult res = pack(items_of({10, 60, 300, 20}), 40, 4, 100);
    CHECK(res.singleton_ids == std::vector<int64_t>{1});
    CHECK(res.rejected_ids == std::vector<int64_t>{2});
    REQUIRE(res.batches.size() == 2);
    CHECK(res.batches[0].ids == std::vector<int64_t>{1});  // emitted at admission
    CHECK(res.batches[0].total_tokens == 60);
    CHECK(res.batches[0].budget == 60);
    CHECK(res.batches[1].ids == std::vector<int64_t>{3, 0});  // 20 then 10 by size
    check_partition(res, items_of({10, 60, 300, 20}));
}

TEST_CASE("packing validates its inputs") {
    CHECK_THROWS_AS(pack(items_of({0}), 10, 1), ValidationError);
    CHECK_THROWS_AS(pack(items_of({-3}), 10, 1), ValidationError);
    CHECK_THROWS_AS(pack(items_of({5}), 0, 1), ConfigError);
    CHECK_THROWS_AS(pack(items_of({5}), 10, 0), ConfigError);
    CHECK_THROWS_AS(pack(items_of({5}), 10, 1, 0), ConfigError);
}

TEST_CASE("packing is a partition and respects the budget on random workloads") {
    for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        auto lengths = uniform_lengths(500, 1, 512, seed);
        auto items = items_of(lengths);
        PackResult res = pack(items, 1024, 32);
        check_partition(res, items);
    }
}

TEST_CASE("packing is deterministic in its inputs") {
    auto lengths = uniform_lengths(300, 1, 200, 17);
    auto items = items_of(lengths);
    PackResult a = pack(items, 512, 16);
    PackResult b = pack(items, 512, 16);
    REQUIRE(a.batches.size() == b.batches.size());
    for (size_t i = 0; i < a.batches.size(); ++i) {
        CHECK(a.batches[i].ids == b.batches[i].ids);
        CHECK(a.batches[i].total_tokens == b.batches[i].total_tokens);
    }
}

TEST_CASE("padding waste follows the dense accounting rule") {
    CHECK(padding_waste({90}, 90) == 0.0);  // single full row
    CHECK(padding_waste({10, 90}, 90) == doctest::Approx(80.0 / 180.0).epsilon(1e-12));
    CHECK(padding_waste({}, 50) == 0.0);
    CHECK(padding_waste({10, 90}, 90, PadAccounting::zero_forward) == 0.0);
    CHECK_THROWS_AS(padding_waste({100}, 90), ValidationError);
    CHECK_THROWS_AS(padding_waste({0}, 90), ValidationError);
}

TEST_CASE("naive fixed-count batching pads every row to its group's longest") {
    // one group: cells 2*90 = 180, real 100
    CHECK(naive_waste({10, 90}, 2) == doctest::Approx(80.0 / 180.0).epsilon(1e-12));
    // two groups of one: no padding at all
    CHECK(naive_waste({10, 90}, 1) == 0.0);
    CHECK(naive_waste({}, 4) == 0.0);
    CHECK_THROWS_AS(naive_waste({5}, 0), ConfigError);
}

TEST_CASE("packed waste never exceeds naive waste on random workloads") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto lengths = uniform_lengths(2000, 1, 512, 100 + seed);
        PackStats stats = throughput_sim(lengths, 4096, 64);
        CHECK(stats.waste_packed <= stats.waste_naive);
    }
}

TEST_CASE("the crowded-budget workload fills at least ninety percent") {
    auto lengths = uniform_lengths(10000, 1, 512, 424242);
    PackStats stats = throughput_sim(lengths, 4096, 64);
    CHECK(stats.mean_fill >= 0.9 * 4096);
    CHECK(stats.rejected == 0);
    CHECK(stats.singletons == 0);
    CHECK(stats.waste_packed < stats.waste_naive);

    auto items = items_of(lengths);
    check_partition(pack(items, 4096, 64), items);
}

TEST_CASE("a wider prefetch window improves expected fill") {
    double fill1 = 0.0, fill64 = 0.0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
        auto lengths = uniform_lengths(1000, 1, 512, 900 + seed);
        fill1 += throughput_sim(lengths, 4096, 1).mean_fill;
        fill64 += throughput_sim(lengths, 4096, 64).mean_fill;
    }
    CHECK(fill64 > fill1);
}

TEST_CASE("the simulation report carries every throughput proxy") {
    auto lengths = uniform_lengths(500, 1, 256, 7);
    PackStats stats = throughput_sim(lengths, 1024, 16);
    std::string report = pack_report(stats);
    CHECK(report.find("batches=") == 0);
    CHECK(report.find("mean_fill=") != std::string::npos);
    CHECK(report.find("waste_naive=") != std::string::npos);
    CHECK(report.find("waste_packed=") != std::string::npos);
    CHECK(pack_report(throughput_sim(lengths, 1024, 16)) == report);  // byte-stable
    CHECK_THROWS_AS(throughput_sim({}, 1024, 16), ValidationError);
}

TEST_CASE("workload files round-trip one count per line") {
    std::string path = tmp_dir() + "/workload.txt";
    std::vector<int64_t> lengths = {1, 512, 37, 4096};
    write_workload(path, lengths);
    CHECK(read_workload(path) == lengths);

    std::string bad = tmp_dir() + "/bad.txt";
    {
        std::ofstream os(bad);
        os << "12\nnot-a-number\n";
    }
    CHECK_THROWS_AS(read_workload(bad), ValidationError);
    CHECK_THROWS_AS(read_workload(tmp_dir() + "/absent.txt"), ValidationError);
}
