#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "mammoth2/align/aligner.hpp"
#include "mammoth2/nn.hpp"

namespace m2::dit {

struct DitConfig {
    int layers = 4;
    int d = 72;
    int heads = 4;
    int ffn = 288;
    int latent_dim = 48;  // flattened patch pixels
    double rope_base = 10000.0;
    // diffusion time is scaled before entering the rotary temporal group so
    // frequencies are non-degenerate on [0, 1]
    double time_scale = 1000.0;
    // optional additive time embedding on latent tokens (off: time enters
    // through the rotary temporal channel only)
    bool time_embed = false;
};

// Noisy/clean latent tokens with explicit integer grid positions.
struct LatentGrid {
    int h = 0;
    int w = 0;
    numerics::Array latents;  // {n, latent_dim}
    std::vector<std::pair<int, int>> pos;  // (x, y) per row

    static LatentGrid raster(int h, int w, numerics::Array latents);
};

// Single-stream diffusion decoder: self-attention over the concatenation
// [condition tokens ; latent tokens] with no mask between segments, rotary
// (x, y, t) positions, and RMSNorm both before and after each sublayer.
// Condition tokens sit at grid origin with a learned segment offset added to
// their features; velocity is read at latent rows only.
class DitModel {
public:
    DitModel(ParamSet& ps, const DitConfig& cfg, numerics::Rng& rng);

    const DitConfig& config() const { return cfg_; }

    // x_t: {n, latent_dim} graph var holding noisy latents; pos/h/w from the
    // grid. Returns predicted velocity {n, latent_dim}.
    numerics::Var forward(numerics::Tape& t, ParamSet& ps, const align::ConditionSequence& cond,
                          numerics::Var x_t, const LatentGrid& grid, double time) const;

private:
    DitConfig cfg_;
    nn::LinearParams lat_in_;
    int cond_offset_ = -1;
    nn::MlpParams time_mlp_;  // registered only when time_embed is on
    struct Block {
        int attn_pre = -1, attn_post = -1;
        nn::AttnParams attn;
        int ffn_pre = -1, ffn_post = -1;
        nn::MlpParams ffn;
    };
    std::vector<Block> blocks_;
    int final_norm_ = -1;
    nn::LinearParams out_;
};

// Any velocity field usable under the flow loss: noisy latents in, predicted
// velocity {n, latent_dim} out.
using VelocityFn =
    std::function<numerics::Var(numerics::Tape&, numerics::Var, const LatentGrid&, double)>;

// sum of squared velocity error over all latent elements for one sample,
// with x0 ~ N(0,1) and t ~ U(0,1) drawn from rng: x_t = (1-t) x0 + t x1,
// target v = x1 - x0. Optional per-element weights multiply the squared
// errors (spatial edit emphasis); optional scalar weight multiplies the sum.
numerics::Var flow_loss(numerics::Tape& t, const VelocityFn& velocity, const LatentGrid& x1,
                        numerics::Rng& rng, const numerics::Array* elem_weights = nullptr,
                        double scalar_weight = 1.0);

numerics::Var flow_loss(numerics::Tape& t, ParamSet& ps, const DitModel& model,
                        const align::ConditionSequence& cond, const LatentGrid& x1,
                        numerics::Rng& rng, const numerics::Array* elem_weights = nullptr,
                        double scalar_weight = 1.0);

}  // namespace m2::dit
