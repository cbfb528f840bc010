#include "mammoth2/ar/backbone.hpp"

#include <cmath>
#include <numeric>

namespace m2::ar {

using namespace numerics;

Backbone::Backbone(ParamSet& ps, const ArConfig& cfg, Rng& rng) : cfg_(cfg) {
    M2_CHECK_CFG(cfg.layers > 0 && cfg.d_model > 0 && cfg.heads > 0, "backbone: bad sizes");
    M2_CHECK_CFG(cfg.d_model % cfg.heads == 0 && (cfg.d_model / cfg.heads) % 2 == 0,
                 "backbone: head dim must be even for rotary positions");
    M2_CHECK_CFG(0 <= cfg.gen_layer_begin && cfg.gen_layer_begin <= cfg.gen_layer_end &&
                     cfg.gen_layer_end <= cfg.layers,
                 "backbone: expert window out of range");
    double emb_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
    text_emb_ = ps.add("ar.text_emb", Array::randn({cfg.text_vocab, cfg.d_model}, rng, emb_std),
                       "und");
    vis_emb_ = ps.add("ar.vis_emb", Array::randn({cfg.vis_vocab, cfg.d_model}, rng, emb_std),
                      "gen");
    layers_.resize(static_cast<size_t>(cfg.layers));
    for (int l = 0; l < cfg.layers; ++l) {
        std::string p = "ar.l" + std::to_string(l);
        Layer& ly = layers_[static_cast<size_t>(l)];
        ly.attn_norm = nn::register_norm_gain(ps, p + ".attn_norm", cfg.d_model, "und");
        ly.attn = nn::register_attn(ps, p + ".attn", cfg.d_model, rng, "und");
        ly.ffn_norm = nn::register_norm_gain(ps, p + ".ffn_norm", cfg.d_model, "und");
        ly.und_ffn = nn::register_mlp(ps, p + ".und_ffn", cfg.d_model, cfg.ffn_hidden,
                                      cfg.d_model, rng, "und");
        ly.has_gen = l >= cfg.gen_layer_begin && l < cfg.gen_layer_end;
        if (ly.has_gen) {
            // expert starts as an exact copy of the FFN it shadows
            ly.gen_ffn.l1.w = ps.add(p + ".gen_ffn.l1.w", Array(ps.value(ly.und_ffn.l1.w)), "gen");
            ly.gen_ffn.l1.b = ps.add(p + ".gen_ffn.l1.b", Array(ps.value(ly.und_ffn.l1.b)), "gen");
            ly.gen_ffn.l2.w = ps.add(p + ".gen_ffn.l2.w", Array(ps.value(ly.und_ffn.l2.w)), "gen");
            ly.gen_ffn.l2.b = ps.add(p + ".gen_ffn.l2.b", Array(ps.value(ly.und_ffn.l2.b)), "gen");
        }
    }
    final_norm_ = nn::register_norm_gain(ps, "ar.final_norm", cfg.d_model, "und");
    text_head_ = nn::register_linear(ps, "ar.text_head", cfg.d_model, cfg.text_vocab, rng, "und");
    vis_head_ = nn::register_linear(ps, "ar.vis_head", cfg.d_model, cfg.vis_vocab, rng, "gen");
}

bool Backbone::routes_to_gen(Modality mod, int layer, const ArConfig& cfg) {
    return mod == Modality::vis_gen && layer >= cfg.gen_layer_begin && layer < cfg.gen_layer_end;
}

int32_t Backbone::unified_id(const Token& tok) const {
    if (tok.mod == Modality::text) {
        M2_CHECK(tok.id >= 0 && tok.id < cfg_.text_vocab, "text token id out of range");
        return tok.id;
    }
    M2_CHECK(tok.id >= 0 && tok.id < cfg_.vis_vocab, "visual token id out of range");
    return cfg_.text_vocab + tok.id;
}

BackboneOutput Backbone::forward_collect(Tape& t, ParamSet& ps, const TokenStream& stream) const {
    int n = stream.size();
    M2_CHECK(n > 0, "forward: empty stream");
    M2_CHECK(n <= cfg_.max_seq, "forward: stream longer than max_seq");

    std::vector<int64_t> text_pos, text_ids, vis_pos, vis_ids;
    for (int i = 0; i < n; ++i) {
        const Token& tok = stream.tokens[static_cast<size_t>(i)];
        unified_id(tok);  // range check
        if (tok.mod == Modality::text) {
            text_pos.push_back(i);
            text_ids.push_back(tok.id);
        } else {
            vis_pos.push_back(i);
            vis_ids.push_back(tok.id);
        }
    }
    Var h{-1};
    if (vis_pos.empty()) {
        h = gather_rows(t, t.leaf(ps.ptr(text_emb_)), text_ids);
    } else if (text_pos.empty()) {
        h = gather_rows(t, t.leaf(ps.ptr(vis_emb_)), vis_ids);
    } else {
        Var te = scatter_rows(t, n, gather_rows(t, t.leaf(ps.ptr(text_emb_)), text_ids), text_pos);
        Var ve = scatter_rows(t, n, gather_rows(t, t.leaf(ps.ptr(vis_emb_)), vis_ids), vis_pos);
        h = add(t, te, ve);
    }

    std::vector<int64_t> positions(static_cast<size_t>(n));
    std::iota(positions.begin(), positions.end(), 0);
    auto [rc, rs] = rope_tables_1d(positions, cfg_.d_model / cfg_.heads, cfg_.rope_base);
    nn::RopeTables rope{std::move(rc), std::move(rs)};
    Array mask = causal_mask(n);

    BackboneOutput out;
    out.hidden.reserve(static_cast<size_t>(cfg_.layers) + 1);
    out.hidden.push_back(h);
    for (int l = 0; l < cfg_.layers; ++l) {
        const Layer& ly = layers_[static_cast<size_t>(l)];
        Var xn = nn::rms(t, ps, ly.attn_norm, h);
        h = add(t, h, nn::mha(t, ps, ly.attn, cfg_.heads, xn, xn, &mask, &rope, &rope));
        Var fn = nn::rms(t, ps, ly.ffn_norm, h);
        std::vector<int64_t> und_idx, gen_idx;
        for (int i = 0; i < n; ++i) {
            if (routes_to_gen(stream.tokens[static_cast<size_t>(i)].mod, l, cfg_))
                gen_idx.push_back(i);
            else
                und_idx.push_back(i);
        }
        Var f{-1};
        if (gen_idx.empty()) {
            f = nn::mlp(t, ps, ly.und_ffn, fn);
        } else if (und_idx.empty()) {
            f = nn::mlp(t, ps, ly.gen_ffn, fn);
        } else {
            Var fu = nn::mlp(t, ps, ly.und_ffn, gather_rows(t, fn, und_idx));
            Var fg = nn::mlp(t, ps, ly.gen_ffn, gather_rows(t, fn, gen_idx));
            f = add(t, scatter_rows(t, n, fu, und_idx), scatter_rows(t, n, fg, gen_idx));
        }
        h = add(t, h, f);
        out.hidden.push_back(h);
    }

    Var hn = nn::rms(t, ps, final_norm_, h);
    out.logits = concat_cols(t, {nn::linear(t, ps, text_head_, hn),
                                 nn::linear(t, ps, vis_head_, hn)});
    return out;
}

Var Backbone::ntp_loss(Tape& t, Var logits, const TokenStream& stream,
                       const std::vector<uint8_t>& supervise) const {
    int n = stream.size();
    M2_CHECK(n >= 2, "ntp: stream too short to supervise");
    M2_CHECK(t.val(logits).dim(0) == n, "ntp: logit rows do not match stream");
    M2_CHECK(static_cast<int>(supervise.size()) == n - 1,
             "ntp: supervision mask must cover stream size - 1 positions");
    std::vector<int64_t> targets(static_cast<size_t>(n) - 1);
    for (int i = 0; i + 1 < n; ++i)
        targets[static_cast<size_t>(i)] = unified_id(stream.tokens[static_cast<size_t>(i) + 1]);
    return cross_entropy_masked(t, slice_rows(t, logits, 0, n - 1), targets, supervise);
}

Var Backbone::ntp_loss(Tape& t, Var logits, const std::vector<int32_t>& unified_targets,
                       const std::vector<uint8_t>& supervise) const {
    int n = static_cast<int>(unified_targets.size());
    M2_CHECK(n >= 2, "ntp: stream too short to supervise");
    M2_CHECK(t.val(logits).dim(0) == n, "ntp: logit rows do not match targets");
    M2_CHECK(static_cast<int>(supervise.size()) == n - 1,
             "ntp: supervision mask must cover stream size - 1 positions");
    int vocab = cfg_.text_vocab + cfg_.vis_vocab;
    std::vector<int64_t> targets(static_cast<size_t>(n) - 1);
    for (int i = 0; i + 1 < n; ++i) {
        int32_t id = unified_targets[static_cast<size_t>(i) + 1];
        M2_CHECK(!supervise[static_cast<size_t>(i)] || (id >= 0 && id < vocab),
                 "ntp: supervised target outside unified vocabulary");
        // unsupervised rows carry zero weight; clamp keeps the row pick in range
        targets[static_cast<size_t>(i)] = supervise[static_cast<size_t>(i)] ? id : 0;
    }
    return cross_entropy_masked(t, slice_rows(t, logits, 0, n - 1), targets, supervise);
}

tok::TokenGrid Backbone::generate_raster(ParamSet& ps, const TokenStream& prompt, int h, int w,
                                         double temperature, uint64_t seed) const {
    M2_CHECK(h > 0 && w > 0, "generate: empty grid");
    M2_CHECK(prompt.size() + h * w <= cfg_.max_seq, "generate: grid exceeds max_seq");
    TokenStream stream = prompt;
    tok::TokenGrid grid(h, w);
    Rng base(seed);
    for (int i = 0; i < h * w; ++i) {
        Tape t;
        BackboneOutput out = forward_collect(t, ps, stream);
        const Array& logits = t.val(out.logits);
        int64_t last = logits.dim(0) - 1;
        int32_t picked = 0;
        if (temperature == 0.0) {
            real best = logits.at(last, cfg_.text_vocab);
            for (int k = 1; k < cfg_.vis_vocab; ++k) {
                real v = logits.at(last, cfg_.text_vocab + k);
                if (v > best) {  // strict > keeps the lowest index on ties
                    best = v;
                    picked = k;
                }
            }
        } else {
            std::vector<double> p(static_cast<size_t>(cfg_.vis_vocab));
            double m = -1e300;
            for (int k = 0; k < cfg_.vis_vocab; ++k)
                m = std::max(m, static_cast<double>(logits.at(last, cfg_.text_vocab + k)));
            double z = 0;
            for (int k = 0; k < cfg_.vis_vocab; ++k) {
                p[static_cast<size_t>(k)] = std::exp(
                    (static_cast<double>(logits.at(last, cfg_.text_vocab + k)) - m) / temperature);
                z += p[static_cast<size_t>(k)];
            }
            Rng step_rng = base.split(static_cast<uint64_t>(i));
            double u = step_rng.uniform() * z, acc = 0;
            picked = cfg_.vis_vocab - 1;
            for (int k = 0; k < cfg_.vis_vocab; ++k) {
                acc += p[static_cast<size_t>(k)];
                if (u < acc) {
                    picked = k;
                    break;
                }
            }
        }
        grid.ids[static_cast<size_t>(i)] = picked;
        stream.push_vis(picked, true);
    }
    return grid;
}

}  // namespace m2::ar
