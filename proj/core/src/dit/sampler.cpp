#include "mammoth2/dit/sampler.hpp"

#include <utility>

namespace m2::dit {

using numerics::Array;
using numerics::Tape;
using numerics::Var;

CondValues freeze(Tape& t, const align::ConditionSequence& cond) {
    return CondValues{Array(t.val(cond.feats)), cond.segments};
}

Array euler_integrate(const std::function<Array(const Array&, double)>& v, Array x0, int steps) {
    M2_CHECK(steps >= 1, "euler_integrate: steps must be >= 1");
    const double dt = 1.0 / steps;
    Array x = std::move(x0);
    for (int i = 0; i < steps; ++i) {
        Array vel = v(x, static_cast<double>(i) * dt);
        M2_CHECK(vel.same_shape(x), "euler_integrate: velocity shape mismatch");
        for (int64_t j = 0; j < x.size(); ++j) x[j] += static_cast<real>(dt) * vel[j];
    }
    return x;
}

Array sample_euler(ParamSet& ps, const DitModel& model, const CondValues& cond,
                   const CondValues& null_cond, int h, int w, int steps, double guidance,
                   uint64_t seed) {
    numerics::Rng rng(seed);
    Array x0 = Array::randn({static_cast<int64_t>(h) * w, model.config().latent_dim}, rng);

    auto eval = [&](const Array& x, double time, const CondValues& c) {
        Tape t;
        align::ConditionSequence seq{t.constant(c.feats), c.segments};
        LatentGrid grid = LatentGrid::raster(h, w, x);
        Var v = model.forward(t, ps, seq, t.constant(x), grid, time);
        return Array(t.val(v));
    };

    auto field = [&](const Array& x, double time) {
        Array vc = eval(x, time, cond);
        if (guidance == 1.0) return vc;  // unguided path: the null branch never runs
        Array vu = eval(x, time, null_cond);
        for (int64_t j = 0; j < vu.size(); ++j)
            vu[j] += static_cast<real>(guidance) * (vc[j] - vu[j]);
        return vu;
    };

    return euler_integrate(field, std::move(x0), steps);
}

}  // namespace m2::dit
