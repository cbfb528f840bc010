#include "mammoth2/align/aligner.hpp"

#include <cmath>

namespace m2::align {

using namespace numerics;

Aligner::Aligner(ParamSet& ps, const AlignConfig& cfg, Rng& rng) : cfg_(cfg) {
    M2_CHECK_CFG(cfg.queries > 0, "aligner: need at least one query token");
    M2_CHECK_CFG(cfg.d_cond % cfg.comp_heads == 0 && cfg.d_cond % cfg.enc_heads == 0,
                 "aligner: width not divisible by head count");
    queries_ = ps.add("align.queries",
                      Array::randn({cfg.queries, cfg.d_cond}, rng,
                                   1.0 / std::sqrt(static_cast<double>(cfg.d_cond))),
                      "align");
    vis_in_ = nn::register_linear(ps, "align.vis_in", cfg.d_model, cfg.d_cond, rng, "align");
    code_in_ = nn::register_linear(ps, "align.code_in", cfg.code_dim, cfg.d_cond, rng, "align");
    text_in_ = nn::register_linear(ps, "align.text_in", cfg.d_model, cfg.d_cond, rng, "align");
    seg_text_ = ps.add("align.seg_text", Array::randn({cfg.d_cond}, rng, 0.02), "align");
    seg_vis_ = ps.add("align.seg_vis", Array::randn({cfg.d_cond}, rng, 0.02), "align");
    auto make_blocks = [&](std::vector<Block>& out, int count, const std::string& prefix,
                           int ffn_hidden) {
        out.resize(static_cast<size_t>(count));
        for (int b = 0; b < count; ++b) {
            std::string p = prefix + std::to_string(b);
            Block& blk = out[static_cast<size_t>(b)];
            blk.attn_norm = nn::register_norm_gain(ps, p + ".attn_norm", cfg.d_cond, "align");
            blk.attn = nn::register_attn(ps, p + ".attn", cfg.d_cond, rng, "align");
            blk.ffn_norm = nn::register_norm_gain(ps, p + ".ffn_norm", cfg.d_cond, "align");
            blk.ffn = nn::register_mlp(ps, p + ".ffn", cfg.d_cond, ffn_hidden, cfg.d_cond, rng,
                                       "align");
        }
    };
    make_blocks(comp_, cfg.comp_layers, "align.comp", cfg.comp_ffn);
    make_blocks(enc_, cfg.enc_layers, "align.enc", cfg.enc_ffn);
    enc_final_norm_ = nn::register_norm_gain(ps, "align.enc.final_norm", cfg.d_cond, "align");
    null_cond_ = ps.add("align.null_cond", Array::randn({1, cfg.d_cond}, rng, 0.02), "align");
}

Var Aligner::aggregate_layers(Tape& t, const std::vector<Var>& hidden) {
    M2_CHECK(!hidden.empty(), "aggregate: no hidden snapshots");
    return mean_vars(t, hidden);
}

Var Aligner::project_hidden(Tape& t, ParamSet& ps, Var feats) const {
    return nn::linear(t, ps, vis_in_, feats);
}

Var Aligner::project_codes(Tape& t, ParamSet& ps, Var codes) const {
    return nn::linear(t, ps, code_in_, codes);
}

Var Aligner::compress(Tape& t, ParamSet& ps, Var kv) const {
    const Array& kvv = t.val(kv);
    M2_CHECK(kvv.rank() == 2 && kvv.dim(0) >= 1 && kvv.dim(1) == cfg_.d_cond,
             "compress: kv must be {n >= 1, d_cond}");
    Var x = t.leaf(ps.ptr(queries_));
    for (const Block& blk : comp_) {
        Var a = nn::mha(t, ps, blk.attn, cfg_.comp_heads, nn::rms(t, ps, blk.attn_norm, x), kv,
                        nullptr, nullptr, nullptr);
        x = add(t, x, a);
        x = add(t, x, nn::mlp(t, ps, blk.ffn, nn::rms(t, ps, blk.ffn_norm, x)));
    }
    return x;
}

ConditionSequence Aligner::unified_encode(Tape& t, ParamSet& ps, Var text_feats,
                                          Var vis_tokens) const {
    M2_CHECK(text_feats.valid() || vis_tokens.valid(),
             "unified_encode: need at least one segment");
    std::vector<Var> parts;
    ConditionSequence out;
    if (text_feats.valid()) {
        Var tx = nn::linear(t, ps, text_in_, text_feats);
        int64_t nt = t.val(tx).dim(0);
        parts.push_back(add(t, tx, tile_rows(t, t.leaf(ps.ptr(seg_text_)), nt)));
        out.segments.insert(out.segments.end(), static_cast<size_t>(nt), 0);
    }
    if (vis_tokens.valid()) {
        const Array& vv = t.val(vis_tokens);
        M2_CHECK(vv.dim(1) == cfg_.d_cond, "unified_encode: visual tokens not in d_cond");
        parts.push_back(add(t, vis_tokens, tile_rows(t, t.leaf(ps.ptr(seg_vis_)), vv.dim(0))));
        out.segments.insert(out.segments.end(), static_cast<size_t>(vv.dim(0)), 1);
    }
    Var h = parts.size() == 1 ? parts[0] : concat_rows(t, parts);
    for (const Block& blk : enc_) {
        Var xn = nn::rms(t, ps, blk.attn_norm, h);
        h = add(t, h, nn::mha(t, ps, blk.attn, cfg_.enc_heads, xn, xn, nullptr, nullptr, nullptr));
        h = add(t, h, nn::mlp(t, ps, blk.ffn, nn::rms(t, ps, blk.ffn_norm, h)));
    }
    out.feats = nn::rms(t, ps, enc_final_norm_, h);
    return out;
}

ConditionSequence Aligner::null_condition(Tape& t, ParamSet& ps) const {
    ConditionSequence out;
    out.feats = t.leaf(ps.ptr(null_cond_));
    out.segments = {0};
    return out;
}

}  // namespace m2::align
