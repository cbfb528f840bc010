#include "mammoth2/nft/dit_policy.hpp"

#include "mammoth2/errors.hpp"

namespace m2::nft {

using numerics::Array;
using numerics::Tape;
using numerics::Var;

DitVelocityPolicy::DitVelocityPolicy(const dit::DitModel& model, std::vector<Prompt> prompts)
    : model_(&model), prompts_(std::move(prompts)) {
    M2_CHECK_CFG(!prompts_.empty(), "dit policy: no prompts");
    for (const Prompt& p : prompts_) {
        M2_CHECK_CFG(p.h >= 1 && p.w >= 1, "dit policy: empty latent grid");
        if (p.spatial.size() > 0) {
            M2_CHECK_CFG(p.spatial.rank() == 2 &&
                             p.spatial.dim(0) == static_cast<int64_t>(p.h) * p.w &&
                             p.spatial.dim(1) == model.config().latent_dim,
                         "dit policy: spatial weights must cover the latent grid");
        }
    }
}

Array DitVelocityPolicy::rollout(ParamSet& ps, int prompt, int steps, double guidance,
                                 uint64_t seed) const {
    M2_CHECK(prompt >= 0 && prompt < prompt_count(), "dit policy: prompt out of range");
    const Prompt& p = prompts_[static_cast<size_t>(prompt)];
    return dit::sample_euler(ps, *model_, p.cond, p.null_cond, p.h, p.w, steps, guidance, seed);
}

Var DitVelocityPolicy::velocity(Tape& t, ParamSet& ps, int prompt, Var x_t, double time) const {
    M2_CHECK(prompt >= 0 && prompt < prompt_count(), "dit policy: prompt out of range");
    const Prompt& p = prompts_[static_cast<size_t>(prompt)];
    align::ConditionSequence seq{t.constant(p.cond.feats), p.cond.segments};
    dit::LatentGrid grid = dit::LatentGrid::raster(p.h, p.w, Array(t.val(x_t)));
    return model_->forward(t, ps, seq, x_t, grid, time);
}

const Array* DitVelocityPolicy::spatial_weights(int prompt) const {
    M2_CHECK(prompt >= 0 && prompt < prompt_count(), "dit policy: prompt out of range");
    const Prompt& p = prompts_[static_cast<size_t>(prompt)];
    return p.spatial.size() > 0 ? &p.spatial : nullptr;
}

}  // namespace m2::nft
