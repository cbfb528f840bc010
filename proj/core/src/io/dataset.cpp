#include "mammoth2/io/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mammoth2/io/image_io.hpp"

namespace m2::io {

const std::array<const char*, 2> kSizes = {"small", "large"};
const std::array<const char*, 5> kColors = {"red", "green", "blue", "yellow", "purple"};
const std::array<const char*, 4> kShapes = {"circle", "square", "triangle", "diamond"};
const std::array<const char*, 8> kPositions = {"top left", "top right",   "bottom left",
                                               "bottom right", "center", "top",
                                               "bottom",       "left"};

namespace {

constexpr std::array<std::array<real, 3>, 5> kColorRgb = {{
    {real(0.90), real(0.10), real(0.10)},  // red
    {real(0.10), real(0.80), real(0.15)},  // green
    {real(0.15), real(0.20), real(0.90)},  // blue
    {real(0.90), real(0.85), real(0.10)},  // yellow
    {real(0.60), real(0.15), real(0.80)},  // purple
}};
constexpr real kBackground = real(0.15);

// shape centers on a unit square, scaled by the image size
constexpr std::array<std::array<double, 2>, 8> kCenters = {{
    {0.25, 0.25},  // top left  (y, x)
    {0.25, 0.75},  // top right
    {0.75, 0.25},  // bottom left
    {0.75, 0.75},  // bottom right
    {0.50, 0.50},  // center
    {0.25, 0.50},  // top
    {0.75, 0.50},  // bottom
    {0.50, 0.25},  // left
}};

int radius_for(int size_idx, int img_size) {
    return size_idx == 0 ? img_size / 8 : img_size / 8 + img_size / 10;
}

bool inside_shape(int shape, int dy, int dx, int r) {
    switch (shape) {
        case 0: return dy * dy + dx * dx <= r * r;            // circle
        case 1: return std::abs(dy) <= r && std::abs(dx) <= r; // square
        case 2: return dy >= -r && dy <= r && 2 * std::abs(dx) <= dy + r;  // triangle, apex up
        default: return std::abs(dy) + std::abs(dx) <= r;      // diamond
    }
}

void center_of(const ShapeSpec& spec, int img_size, int& cy, int& cx) {
    cy = static_cast<int>(kCenters[static_cast<size_t>(spec.position)][0] * img_size);
    cx = static_cast<int>(kCenters[static_cast<size_t>(spec.position)][1] * img_size);
}

ShapeSpec spec_from_index(int idx) {
    ShapeSpec s;
    s.position = idx % 8;
    idx /= 8;
    s.shape = idx % 4;
    idx /= 4;
    s.color = idx % 5;
    idx /= 5;
    s.size = idx % 2;
    return s;
}

std::vector<int> scene_order(int n, uint64_t seed) {
    // Fisher-Yates over all 320 scenes, cycled if more are requested.
    numerics::Rng rng(seed);
    std::vector<int> all(320);
    for (int i = 0; i < 320; ++i) all[i] = i;
    for (int i = 319; i > 0; --i) {
        int j = static_cast<int>(rng.uniform() * (i + 1));
        if (j > i) j = i;
        std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
    }
    std::vector<int> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = all[static_cast<size_t>(i % 320)];
    return out;
}

std::string index_name(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04d.ppm", prefix, i);
    return buf;
}

}  // namespace

std::string caption_for(const ShapeSpec& spec) {
    std::string s = "a ";
    s += kSizes[static_cast<size_t>(spec.size)];
    s += " ";
    s += kColors[static_cast<size_t>(spec.color)];
    s += " ";
    s += kShapes[static_cast<size_t>(spec.shape)];
    s += " at the ";
    s += kPositions[static_cast<size_t>(spec.position)];
    return s;
}

Image render_shape(const ShapeSpec& spec, int img_size) {
    Image img(img_size, img_size);
    for (auto& v : img.px) v = kBackground;
    int cy, cx;
    center_of(spec, img_size, cy, cx);
    int r = radius_for(spec.size, img_size);
    const auto& rgb = kColorRgb[static_cast<size_t>(spec.color)];
    for (int y = 0; y < img_size; ++y)
        for (int x = 0; x < img_size; ++x)
            if (inside_shape(spec.shape, y - cy, x - cx, r))
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = rgb[static_cast<size_t>(c)];
    return img;
}

std::array<int, 4> shape_region(const ShapeSpec& spec, int img_size) {
    int cy, cx;
    center_of(spec, img_size, cy, cx);
    int r = radius_for(spec.size, img_size);
    auto clamp = [&](int v) { return std::max(0, std::min(img_size - 1, v)); };
    return {clamp(cx - r), clamp(cy - r), clamp(cx + r), clamp(cy + r)};
}

std::vector<T2iSample> gen_shapes_t2i(int n, uint64_t seed, int img_size) {
    M2_CHECK(n > 0, "dataset size must be positive");
    std::vector<T2iSample> out;
    out.reserve(static_cast<size_t>(n));
    for (int idx : scene_order(n, seed)) {
        T2iSample s;
        s.spec = spec_from_index(idx);
        s.caption = caption_for(s.spec);
        s.image = render_shape(s.spec, img_size);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<EditSample> gen_shapes_edit(int n, uint64_t seed, int img_size) {
    M2_CHECK(n > 0, "dataset size must be positive");
    numerics::Rng color_rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<EditSample> out;
    out.reserve(static_cast<size_t>(n));
    for (int idx : scene_order(n, seed)) {
        EditSample s;
        s.spec = spec_from_index(idx);
        int shift = 1 + static_cast<int>(color_rng.uniform() * 4);
        if (shift > 4) shift = 4;
        s.new_color = (s.spec.color + shift) % 5;  // always a different color
        s.instruction = std::string("recolor the ") + kShapes[static_cast<size_t>(s.spec.shape)] +
                        " to " + kColors[static_cast<size_t>(s.new_color)];
        s.source = render_shape(s.spec, img_size);
        ShapeSpec recolored = s.spec;
        recolored.color = s.new_color;
        s.target = render_shape(recolored, img_size);
        s.region = shape_region(s.spec, img_size);
        out.push_back(std::move(s));
    }
    return out;
}

const Mixture2d& mixture2d_params() {
    static const Mixture2d m{{0.7, 0.3}, {{{2.0, 2.0}, {-2.0, -1.0}}}, 0.35};
    return m;
}

std::vector<std::array<double, 2>> gen_mixture2d(int n, uint64_t seed) {
    M2_CHECK(n > 0, "dataset size must be positive");
    const Mixture2d& m = mixture2d_params();
    numerics::Rng rng(seed);
    std::vector<std::array<double, 2>> pts(static_cast<size_t>(n));
    for (auto& p : pts) {
        int k = rng.uniform() < m.weights[0] ? 0 : 1;
        p[0] = m.means[static_cast<size_t>(k)][0] + m.sigma * rng.normal();
        p[1] = m.means[static_cast<size_t>(k)][1] + m.sigma * rng.normal();
    }
    return pts;
}

void write_shapes_t2i(const std::string& dir, const std::vector<T2iSample>& samples) {
    std::filesystem::create_directories(dir);
    std::ofstream caps(dir + "/captions.txt", std::ios::trunc);
    M2_CHECK(caps.is_open(), "cannot write captions: " + dir);
    for (size_t i = 0; i < samples.size(); ++i) {
        write_ppm(dir + "/" + index_name("img", static_cast<int>(i)), samples[i].image);
        caps << samples[i].caption << '\n';
    }
}

void write_shapes_edit(const std::string& dir, const std::vector<EditSample>& samples) {
    std::filesystem::create_directories(dir);
    std::ofstream ins(dir + "/instructions.txt", std::ios::trunc);
    std::ofstream regs(dir + "/regions.txt", std::ios::trunc);
    M2_CHECK(ins.is_open() && regs.is_open(), "cannot write edit metadata: " + dir);
    for (size_t i = 0; i < samples.size(); ++i) {
        write_ppm(dir + "/" + index_name("src", static_cast<int>(i)), samples[i].source);
        write_ppm(dir + "/" + index_name("tgt", static_cast<int>(i)), samples[i].target);
        ins << samples[i].instruction << '\n';
        regs << samples[i].region[0] << ' ' << samples[i].region[1] << ' ' << samples[i].region[2]
             << ' ' << samples[i].region[3] << '\n';
    }
}

void write_mixture2d(const std::string& path, const std::vector<std::array<double, 2>>& pts) {
    std::ofstream os(path, std::ios::trunc);
    M2_CHECK(os.is_open(), "cannot write points: " + path);
    char buf[64];
    for (const auto& p : pts) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p[0], p[1]);
        os << buf;
    }
}

namespace {

int find_word(const std::string& w, const char* const* table, int count) {
    for (int i = 0; i < count; ++i)
        if (w == table[i]) return i;
    return -1;
}

ShapeSpec parse_caption(const std::string& caption) {
    // "a {size} {color} {shape} at the {position...}"
    std::istringstream ss(caption);
    std::string a, size, color, shape, at, the, rest, word;
    ss >> a >> size >> color >> shape >> at >> the;
    while (ss >> word) rest += (rest.empty() ? "" : " ") + word;
    ShapeSpec s;
    s.size = find_word(size, kSizes.data(), 2);
    s.color = find_word(color, kColors.data(), 5);
    s.shape = find_word(shape, kShapes.data(), 4);
    s.position = find_word(rest, kPositions.data(), 8);
    M2_CHECK(a == "a" && at == "at" && the == "the" && s.size >= 0 && s.color >= 0 &&
                 s.shape >= 0 && s.position >= 0,
             "caption does not follow the scene grammar: " + caption);
    return s;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream is(path);
    M2_CHECK(is.is_open(), "cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);
    return lines;
}

}  // namespace

std::vector<T2iSample> read_shapes_t2i(const std::string& dir) {
    std::vector<std::string> caps = read_lines(dir + "/captions.txt");
    std::vector<T2iSample> out(caps.size());
    for (size_t i = 0; i < caps.size(); ++i) {
        out[i].caption = caps[i];
        out[i].spec = parse_caption(caps[i]);
        out[i].image = read_ppm(dir + "/" + index_name("img", static_cast<int>(i)));
    }
    return out;
}

std::vector<EditSample> read_shapes_edit(const std::string& dir) {
    std::vector<std::string> ins = read_lines(dir + "/instructions.txt");
    std::vector<std::string> regs = read_lines(dir + "/regions.txt");
    M2_CHECK(ins.size() == regs.size(), "edit metadata rows disagree: " + dir);
    std::vector<EditSample> out(ins.size());
    for (size_t i = 0; i < ins.size(); ++i) {
        out[i].instruction = ins[i];
        std::istringstream rs(regs[i]);
        rs >> out[i].region[0] >> out[i].region[1] >> out[i].region[2] >> out[i].region[3];
        M2_CHECK(!rs.fail(), "malformed region line: " + regs[i]);
        out[i].source = read_ppm(dir + "/" + index_name("src", static_cast<int>(i)));
        out[i].target = read_ppm(dir + "/" + index_name("tgt", static_cast<int>(i)));
        // recover the scene from the instruction's shape and the source colors
        std::istringstream is(ins[i]);
        std::string recolor, the, shape, to, color;
        is >> recolor >> the >> shape >> to >> color;
        out[i].new_color = find_word(color, kColors.data(), 5);
        M2_CHECK(recolor == "recolor" && out[i].new_color >= 0,
                 "instruction does not follow the edit grammar: " + ins[i]);
    }
    return out;
}

}  // namespace m2::io
