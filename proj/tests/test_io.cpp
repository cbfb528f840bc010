#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mammoth2/io/checkpoint.hpp"
#include "mammoth2/io/dataset.hpp"
#include "mammoth2/io/image_io.hpp"
#include "mammoth2/io/lockfile.hpp"
#include "mammoth2/io/metrics.hpp"
#include "mammoth2/io/serial.hpp"
#include "mammoth2/text/vocab.hpp"

using namespace m2;
using namespace m2::io;
using m2::numerics::Array;
using m2::numerics::Rng;

namespace {

std::string tmp_dir() {
    static std::string dir = [] {
        std::string d = (std::filesystem::temp_directory_path() / "m2_test_io").string();
        std::filesystem::remove_all(d);
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

std::string file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.is_open());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("little-endian primitives round-trip") {
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    write_u32(ss, 0xdeadbeefu);
    write_u64(ss, 0x0123456789abcdefull);
    write_f64(ss, -0.1);
    write_str(ss, "hello");
    CHECK(read_u32(ss) == 0xdeadbeefu);
    CHECK(read_u64(ss) == 0x0123456789abcdefull);
    CHECK(read_f64(ss) == -0.1);
    CHECK(read_str(ss) == "hello");

    // byte order is fixed, not native
    std::stringstream le(std::ios::in | std::ios::out | std::ios::binary);
    write_u32(le, 1);
    CHECK(le.str()[0] == 1);
    CHECK(le.str()[3] == 0);
}

TEST_CASE("string length fields are bounded") {
    std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
    write_u64(ss, uint64_t(1) << 40);
    CHECK_THROWS_AS(read_str(ss), ValidationError);
}

TEST_CASE("fnv1a matches known vectors") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
    ParamSet ps;
    Rng rng(3);
    ps.add("w1", Array::randn({3, 4}, rng), "und");
    Array tricky({5}, {real(0), real(-0.0), real(1e-308), real(-1e300),
                       real(0.1) + real(0.2)});
    ps.add("tricky", tricky, "gen");
    ps.add("bias", Array::vec({real(-1), real(2.5)}), "dit");

    std::string path = tmp_dir() + "/ck.bin";
    CheckpointMeta meta{"pretrain1", 42, fnv1a("config-text")};
    save_checkpoint(path, ps, meta);

    ParamSet fresh;
    fresh.add("w1", Array({3, 4}), "und");
    fresh.add("tricky", Array({5}), "gen");
    fresh.add("bias", Array({2}), "dit");
    CheckpointMeta got = load_into(path, fresh);
    CHECK(got.stage == "pretrain1");
    CHECK(got.step == 42);
    CHECK(got.config_hash == meta.config_hash);
    for (int i = 0; i < ps.count(); ++i) {
        const Array& a = ps.value(i);
        int id = fresh.find(ps.name(i));
        REQUIRE(id >= 0);
        const Array& b = fresh.value(id);
        REQUIRE(a.same_shape(b));
        CHECK(std::memcmp(a.data(), b.data(), sizeof(real) * static_cast<size_t>(a.size())) == 0);
    }

    // save -> load -> save is byte-identical
    std::string path2 = tmp_dir() + "/ck2.bin";
    save_checkpoint(path2, fresh, got);
    CHECK(file_bytes(path) == file_bytes(path2));
}

TEST_CASE("checkpoint restore is strict about names and shapes") {
    ParamSet ps;
    Rng rng(5);
    ps.add("w", Array::randn({2, 2}, rng), "und");
    std::string path = tmp_dir() + "/strict.bin";
    save_checkpoint(path, ps, {"sft", 1, 0});

    ParamSet renamed;
    renamed.add("w_other", Array({2, 2}), "und");
    CHECK_THROWS_AS(load_into(path, renamed), ValidationError);

    ParamSet reshaped;
    reshaped.add("w", Array({4}), "und");
    CHECK_THROWS_AS(load_into(path, reshaped), ValidationError);

    ParamSet extra;
    extra.add("w", Array({2, 2}), "und");
    extra.add("w2", Array({1}), "und");
    CHECK_THROWS_AS(load_into(path, extra), ValidationError);

    std::string bad = tmp_dir() + "/bad.bin";
    std::ofstream(bad, std::ios::binary) << "NOPE";
    CHECK_THROWS_AS(load_checkpoint(bad), ValidationError);
}

TEST_CASE("ppm images round-trip on the 8-bit grid") {
    Image img(5, 7);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = real((y * 7 + x) * 3 + c) / real(255);
    std::string path = tmp_dir() + "/img.ppm";
    write_ppm(path, img);
    Image back = read_ppm(path);
    REQUIRE(back.h == 5);
    REQUIRE(back.w == 7);
    for (size_t i = 0; i < img.px.size(); ++i) CHECK(back.px[i] == img.px[i]);

    // out-of-range channels clamp instead of wrapping
    Image hot(1, 1);
    hot.at(0, 0, 0) = real(2);
    hot.at(0, 0, 1) = real(-1);
    write_ppm(path, hot);
    Image hb = read_ppm(path);
    CHECK(hb.at(0, 0, 0) == real(1));
    CHECK(hb.at(0, 0, 1) == real(0));
}

TEST_CASE("token grids round-trip") {
    tok::TokenGrid g(3, 4);
    for (int i = 0; i < g.size(); ++i) g.ids[static_cast<size_t>(i)] = i * 7 + 1;
    std::string path = tmp_dir() + "/grid.bin";
    write_token_grid(path, g);
    tok::TokenGrid back = read_token_grid(path);
    CHECK(back == g);
    // header is exactly 8 bytes + 4 bytes per id
    CHECK(std::filesystem::file_size(path) == 8 + 4 * static_cast<size_t>(g.size()));
}

TEST_CASE("metric values render byte-stably") {
    CHECK(fmt_real(0.0) == "0.000000000e+00");
    CHECK(fmt_real(1.5) == "1.500000000e+00");
    CHECK(fmt_real(-0.03125) == "-3.125000000e-02");

    std::string path = tmp_dir() + "/metrics.log";
    {
        MetricsWriter w(path);
        w.write({{"step", "1"}, {"stage", "sft"}, {"ntp_loss", fmt_real(0.5)}});
        w.write({{"step", "2"}, {"stage", "sft"}, {"ntp_loss", fmt_real(0.25)}});
    }
    CHECK(file_bytes(path) ==
          "step=1 stage=sft ntp_loss=5.000000000e-01\n"
          "step=2 stage=sft ntp_loss=2.500000000e-01\n");
}

TEST_CASE("scene captions describe the rendered image") {
    auto samples = gen_shapes_t2i(16, 7);
    REQUIRE(samples.size() == 16);
    for (const auto& s : samples) {
        CHECK(s.caption == caption_for(s.spec));
        // the shape's color must appear inside its region and nowhere outside
        auto [x0, y0, x1, y1] = shape_region(s.spec);
        bool colored_inside = false;
        for (int y = 0; y < s.image.h; ++y)
            for (int x = 0; x < s.image.w; ++x) {
                bool bg = s.image.at(y, x, 0) == s.image.at(y, x, 1) &&
                          s.image.at(y, x, 1) == s.image.at(y, x, 2);
                if (!bg) {
                    CHECK((x >= x0 && x <= x1 && y >= y0 && y <= y1));
                    colored_inside = true;
                }
            }
        CHECK(colored_inside);
    }
    // 16 draws from 320 scenes without replacement: all distinct
    for (size_t i = 0; i < samples.size(); ++i)
        for (size_t j = i + 1; j < samples.size(); ++j)
            CHECK(samples[i].caption != samples[j].caption);
}

TEST_CASE("dataset generation is deterministic and write/read is faithful") {
    auto a = gen_shapes_t2i(8, 11);
    auto b = gen_shapes_t2i(8, 11);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].caption == b[i].caption);
        CHECK(a[i].image.px == b[i].image.px);
    }
    auto c = gen_shapes_t2i(8, 12);
    bool any_diff = false;
    for (size_t i = 0; i < a.size(); ++i) any_diff |= (a[i].caption != c[i].caption);
    CHECK(any_diff);

    std::string d1 = tmp_dir() + "/t2i_a", d2 = tmp_dir() + "/t2i_b";
    write_shapes_t2i(d1, a);
    write_shapes_t2i(d2, b);
    CHECK(file_bytes(d1 + "/img_0003.ppm") == file_bytes(d2 + "/img_0003.ppm"));
    CHECK(file_bytes(d1 + "/captions.txt") == file_bytes(d2 + "/captions.txt"));

    auto back = read_shapes_t2i(d1);
    REQUIRE(back.size() == a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(back[i].caption == a[i].caption);
        CHECK(back[i].spec.shape == a[i].spec.shape);
        CHECK(back[i].spec.position == a[i].spec.position);
        // images pass through the 8-bit grid once
        for (size_t p = 0; p < a[i].image.px.size(); ++p)
            CHECK(std::abs(back[i].image.px[p] - a[i].image.px[p]) < real(0.5) / 255);
    }
}

TEST_CASE("edits recolor exactly the instructed region") {
    auto samples = gen_shapes_edit(12, 13);
    for (const auto& s : samples) {
        auto [x0, y0, x1, y1] = s.region;
        bool changed_inside = false;
        for (int y = 0; y < s.source.h; ++y)
            for (int x = 0; x < s.source.w; ++x) {
                bool same = true;
                for (int c = 0; c < 3; ++c) same &= s.source.at(y, x, c) == s.target.at(y, x, c);
                bool inside = x >= x0 && x <= x1 && y >= y0 && y <= y1;
                if (!inside) CHECK(same);
                if (!same) changed_inside = true;
            }
        CHECK(changed_inside);
        CHECK(s.new_color != s.spec.color);
        CHECK(s.instruction.find(kColors[static_cast<size_t>(s.new_color)]) != std::string::npos);
    }

    std::string dir = tmp_dir() + "/edit";
    write_shapes_edit(dir, samples);
    auto back = read_shapes_edit(dir);
    REQUIRE(back.size() == samples.size());
    CHECK(back[5].instruction == samples[5].instruction);
    CHECK(back[5].region == samples[5].region);
    CHECK(back[5].new_color == samples[5].new_color);
}

TEST_CASE("mixture samples match the declared moments") {
    const int n = 20000;
    auto pts = gen_mixture2d(n, 99);
    const Mixture2d& m = mixture2d_params();
    double mx = 0, my = 0, near0 = 0;
    for (const auto& p : pts) {
        mx += p[0];
        my += p[1];
        double d0 = std::hypot(p[0] - m.means[0][0], p[1] - m.means[0][1]);
        double d1 = std::hypot(p[0] - m.means[1][0], p[1] - m.means[1][1]);
        near0 += d0 < d1 ? 1 : 0;
    }
    mx /= n;
    my /= n;
    near0 /= n;
    double ex = m.weights[0] * m.means[0][0] + m.weights[1] * m.means[1][0];
    double ey = m.weights[0] * m.means[0][1] + m.weights[1] * m.means[1][1];
    CHECK(std::abs(mx - ex) < 0.06);
    CHECK(std::abs(my - ey) < 0.05);
    CHECK(std::abs(near0 - m.weights[0]) < 0.02);

    std::string path = tmp_dir() + "/points.txt";
    write_mixture2d(path, pts);
    std::ifstream is(path);
    double x, y;
    is >> x >> y;
    CHECK(x == pts[0][0]);  // %.17g preserves doubles exactly
    CHECK(y == pts[0][1]);
}

TEST_CASE("vocabulary covers both grammars without unknowns") {
    text::Vocab v;
    for (const auto& s : gen_shapes_t2i(320, 1)) {
        for (int id : v.encode(s.caption)) CHECK(id >= text::kFirstWord);
        CHECK(v.decode(v.encode(s.caption)) == s.caption);
    }
    for (const auto& s : gen_shapes_edit(64, 2))
        for (int id : v.encode(s.instruction)) CHECK(id >= text::kFirstWord);
    CHECK(v.id("spaceship") == text::kUnk);
    CHECK(v.word(text::kBos) == "<bos>");
    CHECK(v.word(text::kImgEnd) == "<img_end>");
    CHECK_THROWS_AS(v.word(v.size()), ValidationError);
}

TEST_CASE("output directories accept one writer at a time") {
    std::string dir = tmp_dir() + "/locked";
    {
        DirLock lock(dir);
        CHECK_THROWS_AS(DirLock{dir}, ValidationError);
    }
    DirLock again(dir);  // released on destruction
}
