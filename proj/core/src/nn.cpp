#include "mammoth2/nn.hpp"

#include <cmath>

namespace m2::nn {

using namespace numerics;

LinearParams register_linear(ParamSet& ps, const std::string& prefix, int in, int out,
                             Rng& rng, const std::string& group) {
    double stddev = 1.0 / std::sqrt(static_cast<double>(in));
    LinearParams p;
    p.w = ps.add(prefix + ".w", Array::randn({in, out}, rng, stddev), group);
    p.b = ps.add(prefix + ".b", Array::zeros({out}), group);
    return p;
}

AttnParams register_attn(ParamSet& ps, const std::string& prefix, int d_model, Rng& rng,
                         const std::string& group) {
    AttnParams p;
    p.q = register_linear(ps, prefix + ".q", d_model, d_model, rng, group);
    p.k = register_linear(ps, prefix + ".k", d_model, d_model, rng, group);
    p.v = register_linear(ps, prefix + ".v", d_model, d_model, rng, group);
    p.o = register_linear(ps, prefix + ".o", d_model, d_model, rng, group);
    return p;
}

MlpParams register_mlp(ParamSet& ps, const std::string& prefix, int in, int hidden, int out,
                       Rng& rng, const std::string& group) {
    MlpParams p;
    p.l1 = register_linear(ps, prefix + ".l1", in, hidden, rng, group);
    p.l2 = register_linear(ps, prefix + ".l2", hidden, out, rng, group);
    return p;
}

int register_norm_gain(ParamSet& ps, const std::string& name, int dim,
                       const std::string& group) {
    return ps.add(name, Array::full({dim}, real(1)), group);
}

Var linear(Tape& t, ParamSet& ps, const LinearParams& p, Var x) {
    return numerics::linear(t, x, t.leaf(ps.ptr(p.w)), t.leaf(ps.ptr(p.b)));
}

Var mlp(Tape& t, ParamSet& ps, const MlpParams& p, Var x) {
    return linear(t, ps, p.l2, silu(t, linear(t, ps, p.l1, x)));
}

Var rms(Tape& t, ParamSet& ps, int gain, Var x) {
    return rms_norm(t, x, t.leaf(ps.ptr(gain)), real(1e-6));
}

Var mha(Tape& t, ParamSet& ps, const AttnParams& p, int heads, Var x_q, Var x_kv,
        const Array* mask, const RopeTables* rope_q, const RopeTables* rope_k) {
    int64_t d_model = t.val(x_q).dim(1);
    M2_CHECK(d_model % heads == 0, "mha: d_model not divisible by head count");
    int64_t d_head = d_model / heads;
    Var q = linear(t, ps, p.q, x_q);
    Var k = linear(t, ps, p.k, x_kv);
    Var v = linear(t, ps, p.v, x_kv);
    std::vector<Var> outs;
    outs.reserve(static_cast<size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var qh = slice_cols(t, q, h * d_head, d_head);
        Var kh = slice_cols(t, k, h * d_head, d_head);
        Var vh = slice_cols(t, v, h * d_head, d_head);
        if (rope_q != nullptr) qh = rope_rotate(t, qh, rope_q->cos, rope_q->sin);
        if (rope_k != nullptr) kh = rope_rotate(t, kh, rope_k->cos, rope_k->sin);
        outs.push_back(attention(t, qh, kh, vh, mask));
    }
    return linear(t, ps, p.o, concat_cols(t, outs));
}

}  // namespace m2::nn
