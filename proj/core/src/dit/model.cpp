#include "mammoth2/dit/model.hpp"

#include <cmath>
#include <set>

#include "mammoth2/dit/rope3d.hpp"

namespace m2::dit {

using namespace numerics;

LatentGrid LatentGrid::raster(int h, int w, Array latents) {
    LatentGrid g;
    g.h = h;
    g.w = w;
    M2_CHECK(latents.rank() == 2 && latents.dim(0) == static_cast<int64_t>(h) * w,
             "latent grid: row count does not match h*w");
    g.latents = std::move(latents);
    g.pos.reserve(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) g.pos.emplace_back(x, y);
    return g;
}

DitModel::DitModel(ParamSet& ps, const DitConfig& cfg, Rng& rng) : cfg_(cfg) {
    M2_CHECK_CFG(cfg.d % cfg.heads == 0 && (cfg.d / cfg.heads) % 6 == 0,
                 "dit: head dim must split into three even rope groups");
    lat_in_ = nn::register_linear(ps, "dit.lat_in", cfg.latent_dim, cfg.d, rng, "dit");
    cond_offset_ = ps.add("dit.cond_offset", Array::randn({cfg.d}, rng, 0.02), "dit");
    if (cfg.time_embed)
        time_mlp_ = nn::register_mlp(ps, "dit.time_mlp", 8, cfg.d, cfg.d, rng, "dit");
    blocks_.resize(static_cast<size_t>(cfg.layers));
    for (int b = 0; b < cfg.layers; ++b) {
        std::string p = "dit.b" + std::to_string(b);
        Block& blk = blocks_[static_cast<size_t>(b)];
        blk.attn_pre = nn::register_norm_gain(ps, p + ".attn_pre", cfg.d, "dit");
        blk.attn = nn::register_attn(ps, p + ".attn", cfg.d, rng, "dit");
        blk.attn_post = nn::register_norm_gain(ps, p + ".attn_post", cfg.d, "dit");
        blk.ffn_pre = nn::register_norm_gain(ps, p + ".ffn_pre", cfg.d, "dit");
        blk.ffn = nn::register_mlp(ps, p + ".ffn", cfg.d, cfg.ffn, cfg.d, rng, "dit");
        blk.ffn_post = nn::register_norm_gain(ps, p + ".ffn_post", cfg.d, "dit");
    }
    final_norm_ = nn::register_norm_gain(ps, "dit.final_norm", cfg.d, "dit");
    out_ = nn::register_linear(ps, "dit.out", cfg.d, cfg.latent_dim, rng, "dit");
}

Var DitModel::forward(Tape& t, ParamSet& ps, const align::ConditionSequence& cond, Var x_t,
                      const LatentGrid& grid, double time) const {
    M2_CHECK(cond.feats.valid(), "dit: missing condition");
    const Array& cf = t.val(cond.feats);
    M2_CHECK(cf.rank() == 2 && cf.dim(1) == cfg_.d, "dit: condition width mismatch");
    const Array& xv = t.val(x_t);
    int64_t nl = static_cast<int64_t>(grid.pos.size());
    M2_CHECK(xv.rank() == 2 && xv.dim(0) == nl && xv.dim(1) == cfg_.latent_dim,
             "dit: latent shape does not match grid");
    std::set<std::pair<int, int>> seen;
    for (const auto& [x, y] : grid.pos) {
        M2_CHECK(x >= 0 && x < grid.w && y >= 0 && y < grid.h,
                 "dit: latent position out of grid bounds");
        M2_CHECK(seen.insert({x, y}).second, "dit: latent position collision");
    }
    int64_t nc = cf.dim(0);

    Var c = add(t, cond.feats, tile_rows(t, t.leaf(ps.ptr(cond_offset_)), nc));
    Var l = nn::linear(t, ps, lat_in_, x_t);
    if (cfg_.time_embed) {
        Array tf({1, 8});
        for (int k = 0; k < 4; ++k) {
            double ang = time * std::pow(2.0, k) * 3.14159265358979323846;
            tf.at(0, 2 * k) = static_cast<real>(std::sin(ang));
            tf.at(0, 2 * k + 1) = static_cast<real>(std::cos(ang));
        }
        Var te = nn::mlp(t, ps, time_mlp_, t.constant(std::move(tf)));
        l = add(t, l, tile_rows(t, reshape(t, te, {cfg_.d}), nl));
    }
    Var h = concat_rows(t, {c, l});

    double ts = time * cfg_.time_scale;
    std::vector<std::array<double, 3>> pos;
    pos.reserve(static_cast<size_t>(nc + nl));
    for (int64_t i = 0; i < nc; ++i) pos.push_back({0.0, 0.0, ts});
    for (const auto& [x, y] : grid.pos)
        pos.push_back({static_cast<double>(x), static_cast<double>(y), ts});
    nn::RopeTables rope = rope3d_tables(pos, cfg_.d / cfg_.heads, cfg_.rope_base);

    for (const Block& blk : blocks_) {
        Var xn = nn::rms(t, ps, blk.attn_pre, h);
        Var a = nn::mha(t, ps, blk.attn, cfg_.heads, xn, xn, nullptr, &rope, &rope);
        h = add(t, h, nn::rms(t, ps, blk.attn_post, a));
        Var f = nn::mlp(t, ps, blk.ffn, nn::rms(t, ps, blk.ffn_pre, h));
        h = add(t, h, nn::rms(t, ps, blk.ffn_post, f));
    }
    Var out = nn::linear(t, ps, out_, nn::rms(t, ps, final_norm_, h));
    return slice_rows(t, out, nc, nl);  // condition rows produce no velocity
}

Var flow_loss(Tape& t, const VelocityFn& velocity, const LatentGrid& x1, Rng& rng,
              const Array* elem_weights, double scalar_weight) {
    double time = rng.uniform();
    Array x0 = Array::randn(x1.latents.shape(), rng);
    Array xt = x1.latents;
    Array target = x1.latents;
    for (int64_t i = 0; i < xt.size(); ++i) {
        xt[i] = static_cast<real>((1.0 - time) * x0[i] + time * x1.latents[i]);
        target[i] = x1.latents[i] - x0[i];
    }
    LatentGrid noisy = x1;
    noisy.latents = xt;
    Var pred = velocity(t, t.constant(std::move(xt)), noisy, time);
    Var d = sub(t, pred, t.constant(std::move(target)));
    Var sq = mul(t, d, d);
    if (elem_weights != nullptr) {
        M2_CHECK(elem_weights->same_shape(t.val(sq)), "flow_loss: weight shape mismatch");
        sq = mul(t, sq, t.constant(*elem_weights));
    }
    Var loss = sum(t, sq);
    return scalar_weight == 1.0 ? loss : scale(t, loss, static_cast<real>(scalar_weight));
}

Var flow_loss(Tape& t, ParamSet& ps, const DitModel& model,
              const align::ConditionSequence& cond, const LatentGrid& x1, Rng& rng,
              const Array* elem_weights, double scalar_weight) {
    auto velocity = [&](Tape& tp, Var xt, const LatentGrid& grid, double time) {
        return model.forward(tp, ps, cond, xt, grid, time);
    };
    return flow_loss(t, velocity, x1, rng, elem_weights, scalar_weight);
}

}  // namespace m2::dit
