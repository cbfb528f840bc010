#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mammoth2/image.hpp"
#include "mammoth2/numerics/rng.hpp"

namespace m2::io {

// Caption grammar: "a {size} {color} {shape} at the {position}".
// 2 sizes x 5 colors x 4 shapes x 8 positions = 320 distinct scenes; every
// caption renders to exactly one image, so next-token structure is learnable.
extern const std::array<const char*, 2> kSizes;
extern const std::array<const char*, 5> kColors;
extern const std::array<const char*, 4> kShapes;
extern const std::array<const char*, 8> kPositions;  // two-word names split on space

struct ShapeSpec {
    int size = 0;      // index into kSizes
    int color = 0;     // index into kColors
    int shape = 0;     // index into kShapes
    int position = 0;  // index into kPositions
};

std::string caption_for(const ShapeSpec& spec);
Image render_shape(const ShapeSpec& spec, int img_size = 32);
// Inclusive pixel bounding box (x0, y0, x1, y1) that contains every pixel
// the shape touches; edits recolor inside it only.
std::array<int, 4> shape_region(const ShapeSpec& spec, int img_size = 32);

struct T2iSample {
    ShapeSpec spec;
    std::string caption;
    Image image;
};

struct EditSample {
    ShapeSpec spec;
    int new_color = 0;
    std::string instruction;  // "recolor the {shape} to {color2}"
    Image source;
    Image target;
    std::array<int, 4> region{};
};

// Deterministic in (n, seed). n <= 320 draws distinct scenes; larger n
// repeats scenes.
std::vector<T2iSample> gen_shapes_t2i(int n, uint64_t seed, int img_size = 32);
std::vector<EditSample> gen_shapes_edit(int n, uint64_t seed, int img_size = 32);

struct Mixture2d {
    std::array<double, 2> weights;
    std::array<std::array<double, 2>, 2> means;
    double sigma;
};
// The fixed two-component target used by the toy flow experiment.
const Mixture2d& mixture2d_params();
std::vector<std::array<double, 2>> gen_mixture2d(int n, uint64_t seed);

// Persistence: images as img_NNNN.ppm / src_NNNN.ppm / tgt_NNNN.ppm plus
// captions.txt, instructions.txt, regions.txt ("x0 y0 x1 y1" per line) and
// points.txt ("x y" per line, %.17g).
void write_shapes_t2i(const std::string& dir, const std::vector<T2iSample>& samples);
void write_shapes_edit(const std::string& dir, const std::vector<EditSample>& samples);
void write_mixture2d(const std::string& path, const std::vector<std::array<double, 2>>& pts);

std::vector<T2iSample> read_shapes_t2i(const std::string& dir);
std::vector<EditSample> read_shapes_edit(const std::string& dir);

}  // namespace m2::io
