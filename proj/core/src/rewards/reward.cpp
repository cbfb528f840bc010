#include "mammoth2/rewards/reward.hpp"

#include <algorithm>
#include <cmath>

#include "mammoth2/errors.hpp"
#include "mammoth2/io/metrics.hpp"

namespace m2::rewards {

double hybrid_reward(const std::vector<double>& scores, const std::vector<RewardSpec>& specs,
                     bool edit_task) {
    M2_CHECK(scores.size() == specs.size(), "hybrid reward: scores do not align with specs");
    double wsum = 0.0, acc = 0.0;
    for (size_t i = 0; i < specs.size(); ++i) {
        const RewardSpec& spec = specs[i];
        M2_CHECK_CFG(spec.weight >= 0.0, "hybrid reward: negative weight for " + spec.name);
        bool applies = spec.applies == Applicability::both ||
                       spec.applies == (edit_task ? Applicability::edit : Applicability::t2i);
        if (!applies) continue;
        M2_CHECK(scores[i] >= 0.0 && scores[i] <= 1.0,
                 "hybrid reward: component score outside [0, 1]: " + spec.name);
        wsum += spec.weight;
        acc += spec.weight * scores[i];
    }
    M2_CHECK_CFG(wsum > 0.0, "hybrid reward: no applicable reward has positive weight");
    return acc / wsum;
}

double expectation_score(const JudgeDistribution& dist) {
    double sum = 0.0, acc = 0.0;
    for (size_t s = 0; s < dist.p.size(); ++s) {
        M2_CHECK(dist.p[s] >= 0.0, "judge distribution: negative probability");
        sum += dist.p[s];
        acc += static_cast<double>(s) * dist.p[s];
    }
    M2_CHECK(std::fabs(sum - 1.0) <= 1e-9, "judge distribution: probabilities must sum to 1");
    return acc;
}

double target_color(const Image& img, const std::array<double, 3>& rgb) {
    M2_CHECK(img.h > 0 && img.w > 0, "target color: empty image");
    double acc = 0.0;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int c = 0; c < 3; ++c)
                acc += std::fabs(static_cast<double>(img.at(y, x, c)) - rgb[static_cast<size_t>(c)]);
    double mean = acc / (static_cast<double>(img.h) * img.w * 3);
    return std::clamp(1.0 - mean, 0.0, 1.0);
}

double pattern_match(const Image& img, const Image& tmpl) {
    if (tmpl.h <= 0 || tmpl.w <= 0 || tmpl.h > img.h || tmpl.w > img.w) return 0.0;
    double best = 0.0;
    for (int oy = 0; oy + tmpl.h <= img.h; ++oy) {
        for (int ox = 0; ox + tmpl.w <= img.w; ++ox) {
            double acc = 0.0;
            for (int y = 0; y < tmpl.h; ++y)
                for (int x = 0; x < tmpl.w; ++x)
                    for (int c = 0; c < 3; ++c)
                        acc += std::fabs(static_cast<double>(img.at(oy + y, ox + x, c)) -
                                         tmpl.at(y, x, c));
            double score = 1.0 - acc / (static_cast<double>(tmpl.h) * tmpl.w * 3);
            best = std::max(best, score);
        }
    }
    return std::clamp(best, 0.0, 1.0);
}

double smoothness(const Image& img) {
    M2_CHECK(img.h > 0 && img.w > 0, "smoothness: empty image");
    double acc = 0.0;
    int64_t pairs = 0;
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x) {
            for (int c = 0; c < 3; ++c) {
                if (x + 1 < img.w) {
                    acc += std::fabs(static_cast<double>(img.at(y, x, c)) - img.at(y, x + 1, c));
                    ++pairs;
                }
                if (y + 1 < img.h) {
                    acc += std::fabs(static_cast<double>(img.at(y, x, c)) - img.at(y + 1, x, c));
                    ++pairs;
                }
            }
        }
    }
    if (pairs == 0) return 1.0;  // single pixel
    return std::clamp(1.0 - acc / static_cast<double>(pairs), 0.0, 1.0);
}

std::vector<RewardSpec> default_hybrid_specs() {
    return {{"preference", 0.4, Applicability::both},
            {"pattern", 0.3, Applicability::both},
            {"alignment", 0.3, Applicability::both}};
}

std::string reward_record(int64_t sample_id, const std::vector<RewardSpec>& specs,
                          const std::vector<double>& scores, double fused) {
    M2_CHECK(scores.size() == specs.size(), "reward record: scores do not align with specs");
    std::string line = "sample=" + std::to_string(sample_id);
    for (size_t i = 0; i < specs.size(); ++i)
        line += " " + specs[i].name + "=" + io::fmt_real(scores[i]);
    line += " fused=" + io::fmt_real(fused);
    return line;
}

}  // namespace m2::rewards
