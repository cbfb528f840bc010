#pragma once

#include <vector>

#include "mammoth2/dit/model.hpp"
#include "mammoth2/dit/sampler.hpp"
#include "mammoth2/nft/nft.hpp"

namespace m2::nft {

// The image model as a reinforcement policy: conditions are frozen per prompt
// (the planning pathway stays fixed here), rollouts run the guided Euler
// sampler, and the velocity seam re-runs the denoiser on the caller's tape.
class DitVelocityPolicy final : public NftPolicy {
public:
    struct Prompt {
        dit::CondValues cond;
        dit::CondValues null_cond;  // unconditional branch for guided rollouts
        int h = 0, w = 0;           // latent grid extent
        numerics::Array spatial;    // optional {h*w, latent_dim} loss emphasis; empty = uniform
    };

    DitVelocityPolicy(const dit::DitModel& model, std::vector<Prompt> prompts);

    int prompt_count() const override { return static_cast<int>(prompts_.size()); }

    numerics::Array rollout(ParamSet& ps, int prompt, int steps, double guidance,
                            uint64_t seed) const override;

    numerics::Var velocity(numerics::Tape& t, ParamSet& ps, int prompt, numerics::Var x_t,
                           double time) const override;

    const numerics::Array* spatial_weights(int prompt) const override;

private:
    const dit::DitModel* model_;
    std::vector<Prompt> prompts_;
};

}  // namespace m2::nft
