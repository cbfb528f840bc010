#pragma once

#include <array>
#include <string>
#include <vector>

#include "mammoth2/image.hpp"

namespace m2::rewards {

enum class Applicability { t2i, edit, both };

// One entry of the fusion registry. Weights are relative: the applicable
// subset is renormalized to sum 1 per sample.
struct RewardSpec {
    std::string name;
    double weight = 1.0;  // >= 0
    Applicability applies = Applicability::both;
};

// Weighted fusion of pre-scaled [0,1] component scores. `scores` aligns with
// `specs`; entries whose spec does not apply to the task are ignored.
double hybrid_reward(const std::vector<double>& scores, const std::vector<RewardSpec>& specs,
                     bool edit_task);

// Probabilities over the discrete judge scores 0..5.
struct JudgeDistribution {
    std::array<double, 6> p{};
};

// Probability-weighted expected score, in [0, 5].
double expectation_score(const JudgeDistribution& dist);

// Toy component rewards, each deterministic and in [0, 1].
// Mean per-channel closeness to the target color.
double target_color(const Image& img, const std::array<double, 3>& rgb);
// Best template placement by mean absolute difference; 0 when the template
// does not fit inside the image.
double pattern_match(const Image& img, const Image& tmpl);
// One minus the mean absolute difference between neighboring pixels, so a
// constant image scores 1 and a full-contrast checkerboard scores 0.
double smoothness(const Image& img);

// Default desk fusion: preference proxy (smoothness) 0.4, pattern match 0.3,
// alignment proxy (target color) 0.3.
std::vector<RewardSpec> default_hybrid_specs();

// One audit line per scored sample: id, per-component values, fused value.
std::string reward_record(int64_t sample_id, const std::vector<RewardSpec>& specs,
                          const std::vector<double>& scores, double fused);

}  // namespace m2::rewards
