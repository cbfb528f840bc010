#pragma once

#include <string>

#include "mammoth2/numerics/ops.hpp"
#include "mammoth2/params.hpp"

namespace m2::nn {

// cos/sin tables for rotary encodings, one row per sequence position,
// d_head/2 columns.
struct RopeTables {
    numerics::Array cos;
    numerics::Array sin;
};

struct LinearParams {
    int w = -1;
    int b = -1;
};

struct AttnParams {
    LinearParams q, k, v, o;
};

// Two-layer silu MLP; also used for the feed-forward half of blocks.
struct MlpParams {
    LinearParams l1, l2;
};

LinearParams register_linear(ParamSet& ps, const std::string& prefix, int in, int out,
                             numerics::Rng& rng, const std::string& group);
AttnParams register_attn(ParamSet& ps, const std::string& prefix, int d_model,
                         numerics::Rng& rng, const std::string& group);
MlpParams register_mlp(ParamSet& ps, const std::string& prefix, int in, int hidden, int out,
                       numerics::Rng& rng, const std::string& group);
int register_norm_gain(ParamSet& ps, const std::string& name, int dim,
                       const std::string& group);

numerics::Var linear(numerics::Tape& t, ParamSet& ps, const LinearParams& p, numerics::Var x);
numerics::Var mlp(numerics::Tape& t, ParamSet& ps, const MlpParams& p, numerics::Var x);
numerics::Var rms(numerics::Tape& t, ParamSet& ps, int gain, numerics::Var x);

// Multi-head attention with optional additive mask {nq, nk} and optional
// per-head rotary tables (applied to q and k before scoring). x_q == x_kv
// gives self-attention.
numerics::Var mha(numerics::Tape& t, ParamSet& ps, const AttnParams& p, int heads,
                  numerics::Var x_q, numerics::Var x_kv, const numerics::Array* mask,
                  const RopeTables* rope_q, const RopeTables* rope_k);

}  // namespace m2::nn
