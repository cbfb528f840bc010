#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mammoth2/nft/nft.hpp"
#include "mammoth2/nn.hpp"

namespace m2::nft {

struct Toy2dConfig {
    int hidden = 64;   // width of both hidden layers
    int prompts = 1;   // independent rollout groups per step (all unconditional)
};

// Unconditional 2-D velocity field: a small silu MLP over (x, y, t), the
// minimal policy that exercises the full rollout/score/descend loop and the
// planar flow-matching checks. Parameters live in group "policy".
class Toy2dPolicy final : public NftPolicy {
public:
    Toy2dPolicy(ParamSet& ps, const Toy2dConfig& cfg, numerics::Rng& rng);

    int prompt_count() const override { return cfg_.prompts; }

    // one endpoint {1, 2} from x0 ~ N(0, I); guidance is ignored
    numerics::Array rollout(ParamSet& ps, int prompt, int steps, double guidance,
                            uint64_t seed) const override;

    numerics::Var velocity(numerics::Tape& t, ParamSet& ps, int prompt, numerics::Var x_t,
                           double time) const override;

    // {n, 2} endpoints integrated jointly from one noise draw, for sampling
    // statistics; the draw depends only on (n, seed), not on steps
    numerics::Array sample_points(ParamSet& ps, int n, int steps, uint64_t seed) const;

private:
    Toy2dConfig cfg_;
    nn::LinearParams in_, mid_, out_;
};

// Rectified-flow fit of the policy to a fixed 2-D point set: each step draws
// a batch with replacement, one (x0, t) corruption, and takes one AdamW step
// on the mean per-element velocity error under a cosine-decayed rate.
void flow_pretrain(Toy2dPolicy& policy, ParamSet& ps,
                   const std::vector<std::array<double, 2>>& data, int steps, int batch,
                   double lr, uint64_t seed);

}  // namespace m2::nft
