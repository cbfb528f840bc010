#include "mammoth2/nft/toy2d.hpp"

#include <cmath>

#include "mammoth2/dit/model.hpp"
#include "mammoth2/dit/sampler.hpp"
#include "mammoth2/errors.hpp"
#include "mammoth2/train/optimizer.hpp"

namespace m2::nft {

using numerics::Array;
using numerics::Tape;
using numerics::Var;

Toy2dPolicy::Toy2dPolicy(ParamSet& ps, const Toy2dConfig& cfg, numerics::Rng& rng) : cfg_(cfg) {
    M2_CHECK_CFG(cfg.hidden >= 1, "toy policy: hidden width must be positive");
    M2_CHECK_CFG(cfg.prompts >= 1, "toy policy: needs at least one prompt");
    in_ = nn::register_linear(ps, "toy2d.in", 3, cfg.hidden, rng, "policy");
    mid_ = nn::register_linear(ps, "toy2d.mid", cfg.hidden, cfg.hidden, rng, "policy");
    out_ = nn::register_linear(ps, "toy2d.out", cfg.hidden, 2, rng, "policy");
}

Var Toy2dPolicy::velocity(Tape& t, ParamSet& ps, int prompt, Var x_t, double time) const {
    M2_CHECK(prompt >= 0 && prompt < cfg_.prompts, "toy policy: prompt out of range");
    const Array& x = t.val(x_t);
    M2_CHECK(x.rank() == 2 && x.dim(1) == 2, "toy policy: points must be {n, 2}");
    Var t_col = t.constant(Array::full({x.dim(0), 1}, real(time)));
    Var h = concat_cols(t, {x_t, t_col});
    h = silu(t, nn::linear(t, ps, in_, h));
    h = silu(t, nn::linear(t, ps, mid_, h));
    return nn::linear(t, ps, out_, h);
}

Array Toy2dPolicy::sample_points(ParamSet& ps, int n, int steps, uint64_t seed) const {
    M2_CHECK(n >= 1, "toy policy: need at least one point");
    numerics::Rng rng(seed);
    Array x0 = Array::randn({n, 2}, rng);
    auto field = [&](const Array& x, double time) {
        Tape t;
        Var v = velocity(t, ps, 0, t.constant(x), time);
        return Array(t.val(v));
    };
    return dit::euler_integrate(field, std::move(x0), steps);
}

Array Toy2dPolicy::rollout(ParamSet& ps, int prompt, int steps, double guidance,
                           uint64_t seed) const {
    M2_CHECK(prompt >= 0 && prompt < cfg_.prompts, "toy policy: prompt out of range");
    (void)guidance;  // unconditional field
    return sample_points(ps, 1, steps, seed);
}

void flow_pretrain(Toy2dPolicy& policy, ParamSet& ps,
                   const std::vector<std::array<double, 2>>& data, int steps, int batch,
                   double lr, uint64_t seed) {
    M2_CHECK(!data.empty(), "flow pretrain: empty point set");
    M2_CHECK_CFG(steps >= 1 && batch >= 1 && lr > 0.0, "flow pretrain: bad settings");

    train::AdamWConfig ocfg;
    ocfg.weight_decay = 0.0;  // pure fit, no pull toward zero
    train::AdamW opt(ps, ocfg);
    numerics::Rng rng(seed);

    dit::VelocityFn field = [&policy, &ps](Tape& t, Var x, const dit::LatentGrid&, double time) {
        return policy.velocity(t, ps, 0, x, time);
    };

    for (int step = 0; step < steps; ++step) {
        Array pts({static_cast<int64_t>(batch), 2});
        for (int i = 0; i < batch; ++i) {
            const auto& p = data[static_cast<size_t>(rng.uniform_int(
                static_cast<int64_t>(data.size())))];
            pts.at(i, 0) = real(p[0]);
            pts.at(i, 1) = real(p[1]);
        }
        dit::LatentGrid grid = dit::LatentGrid::raster(batch, 1, std::move(pts));

        Tape t;
        Var loss = dit::flow_loss(t, field, grid, rng, nullptr,
                                  1.0 / static_cast<double>(grid.latents.size()));
        t.backward(loss);
        double progress = static_cast<double>(step) / steps;
        double now = lr * 0.5 * (1.0 + std::cos(progress * 3.14159265358979323846));
        opt.step(ps, t, {{"policy", now}});
    }
}

}  // namespace m2::nft
