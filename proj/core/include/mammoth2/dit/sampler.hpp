#pragma once

#include <functional>

#include "mammoth2/dit/model.hpp"

namespace m2::dit {

// Plain-value condition tokens, detached from any tape; what the sampler
// carries across integration steps.
struct CondValues {
    numerics::Array feats;
    std::vector<int> segments;
};

CondValues freeze(numerics::Tape& t, const align::ConditionSequence& cond);

// x(1) = Euler integration of dx/dt = v(x, t) from t=0 over `steps` equal
// steps, evaluating v at the left endpoint of each step.
numerics::Array euler_integrate(
    const std::function<numerics::Array(const numerics::Array&, double)>& v,
    numerics::Array x0, int steps);

// Classifier-free-guided Euler sampling of a latent grid. guidance == 1
// never evaluates the unconditional branch, so it is bit-identical to the
// plain conditional sampler.
numerics::Array sample_euler(ParamSet& ps, const DitModel& model, const CondValues& cond,
                             const CondValues& null_cond, int h, int w, int steps,
                             double guidance, uint64_t seed);

}  // namespace m2::dit
