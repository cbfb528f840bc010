#include "mammoth2/tok/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "mammoth2/dit/rope3d.hpp"

namespace m2::tok {

using namespace numerics;

Array patchify(const Image& img, int patch) {
    M2_CHECK(patch > 0 && img.h % patch == 0 && img.w % patch == 0,
             "patchify: image size not divisible by patch size");
    int hp = img.h / patch, wp = img.w / patch;
    int64_t d = static_cast<int64_t>(patch) * patch * 3;
    Array out({static_cast<int64_t>(hp) * wp, d});
    for (int py = 0; py < hp; ++py) {
        for (int px = 0; px < wp; ++px) {
            real* row = out.data() + (static_cast<int64_t>(py) * wp + px) * d;
            int64_t k = 0;
            for (int dy = 0; dy < patch; ++dy)
                for (int dx = 0; dx < patch; ++dx)
                    for (int c = 0; c < 3; ++c)
                        row[k++] = img.at(py * patch + dy, px * patch + dx, c);
        }
    }
    return out;
}

Image unpatchify(const Array& px, int hp, int wp, int patch) {
    int64_t d = static_cast<int64_t>(patch) * patch * 3;
    M2_CHECK(px.rank() == 2 && px.dim(0) == static_cast<int64_t>(hp) * wp && px.dim(1) == d,
             "unpatchify: pixel array shape mismatch");
    Image img(hp * patch, wp * patch);
    for (int py = 0; py < hp; ++py) {
        for (int pxi = 0; pxi < wp; ++pxi) {
            const real* row = px.data() + (static_cast<int64_t>(py) * wp + pxi) * d;
            int64_t k = 0;
            for (int dy = 0; dy < patch; ++dy)
                for (int dx = 0; dx < patch; ++dx)
                    for (int c = 0; c < 3; ++c)
                        img.at(py * patch + dy, pxi * patch + dx, c) = row[k++];
        }
    }
    return img;
}

Tokenizer::Tokenizer(ParamSet& ps, const TokConfig& cfg, Rng& rng) : cfg_(cfg) {
    M2_CHECK_CFG(cfg.codebook_size > 0 && cfg.code_dim > 0, "tokenizer: empty codebook");
    M2_CHECK_CFG(cfg.dec_dim % cfg.dec_heads == 0 && (cfg.dec_dim / cfg.dec_heads) % 6 == 0,
                 "tokenizer: decoder head dim must split into three even rope groups");
    int pd = cfg.patch * cfg.patch * 3;
    enc_ = nn::register_mlp(ps, "tok.enc", pd, cfg.enc_hidden, cfg.code_dim, rng, "tok");
    cb_ = ps.add("tok.codebook",
                 Array::randn({cfg.codebook_size, cfg.code_dim}, rng,
                              1.0 / std::sqrt(static_cast<double>(cfg.code_dim))),
                 "tok");
    dec_in_ = nn::register_linear(ps, "tok.dec.in", cfg.code_dim, cfg.dec_dim, rng, "tok");
    dec_blocks_.resize(static_cast<size_t>(cfg.dec_blocks));
    for (int b = 0; b < cfg.dec_blocks; ++b) {
        std::string p = "tok.dec.b" + std::to_string(b);
        Block& blk = dec_blocks_[static_cast<size_t>(b)];
        blk.attn_norm = nn::register_norm_gain(ps, p + ".attn_norm", cfg.dec_dim, "tok");
        blk.attn = nn::register_attn(ps, p + ".attn", cfg.dec_dim, rng, "tok");
        blk.ffn_norm = nn::register_norm_gain(ps, p + ".ffn_norm", cfg.dec_dim, "tok");
        blk.ffn = nn::register_mlp(ps, p + ".ffn", cfg.dec_dim, cfg.dec_ffn, cfg.dec_dim, rng,
                                   "tok");
    }
    dec_final_norm_ = nn::register_norm_gain(ps, "tok.dec.final_norm", cfg.dec_dim, "tok");
    dec_out_ = nn::register_linear(ps, "tok.dec.out", cfg.dec_dim, pd, rng, "tok");
    sem_enc_ = nn::register_mlp(ps, "tok.sem", pd, cfg.sem_hidden, cfg.sem_dim, rng,
                                "tok_frozen");
    align_head_ = nn::register_mlp(ps, "tok.align_head", cfg.dec_dim, cfg.align_hidden,
                                   cfg.sem_dim, rng, "tok");
    usage_.assign(static_cast<size_t>(cfg.codebook_size), 0);
}

Var Tokenizer::encode(Tape& t, ParamSet& ps, const Image& img) const {
    return nn::mlp(t, ps, enc_, t.constant(patchify(img, cfg_.patch)));
}

Quantized Tokenizer::quantize(Tape& t, ParamSet& ps, Var z, int hp, int wp) {
    const Array& zv = t.val(z);
    M2_CHECK(zv.rank() == 2 && zv.dim(0) == static_cast<int64_t>(hp) * wp &&
                 zv.dim(1) == cfg_.code_dim,
             "quantize: feature shape mismatch");
    const Array& cb = ps.value(cb_);
    Quantized out;
    out.grid = TokenGrid(hp, wp);
    std::vector<int64_t> ids(static_cast<size_t>(zv.dim(0)));
    for (int64_t i = 0; i < zv.dim(0); ++i) {
        int best = 0;
        real best_d = real(0);
        for (int k = 0; k < cfg_.codebook_size; ++k) {
            real d = 0;
            for (int j = 0; j < cfg_.code_dim; ++j) {
                real diff = zv.at(i, j) - cb.at(k, j);
                d += diff * diff;
            }
            // strict < keeps the lowest index on exact ties
            if (k == 0 || d < best_d) {
                best = k;
                best_d = d;
            }
        }
        out.grid.ids[static_cast<size_t>(i)] = static_cast<int32_t>(best);
        ids[static_cast<size_t>(i)] = best;
        ++usage_[static_cast<size_t>(best)];
    }
    Var e = gather_rows(t, t.leaf(ps.ptr(cb_)), ids);
    out.z = z;
    out.zq = add(t, z, stop_grad(t, sub(t, e, z)));
    return out;
}

Var Tokenizer::decode_features(Tape& t, ParamSet& ps, Var codes, int hp, int wp,
                               std::vector<Var>* taps) const {
    const Array& cv = t.val(codes);
    M2_CHECK(cv.rank() == 2 && cv.dim(0) == static_cast<int64_t>(hp) * wp,
             "decode: code count does not match grid");
    std::vector<std::array<double, 3>> pos;
    pos.reserve(static_cast<size_t>(hp) * wp);
    for (int y = 0; y < hp; ++y)
        for (int x = 0; x < wp; ++x) pos.push_back({static_cast<double>(x), static_cast<double>(y), 0.0});
    nn::RopeTables rope = dit::rope3d_tables(pos, cfg_.dec_dim / cfg_.dec_heads, cfg_.rope_base);

    Var h = nn::linear(t, ps, dec_in_, codes);
    if (taps) taps->push_back(h);
    for (const Block& blk : dec_blocks_) {
        Var a = nn::mha(t, ps, blk.attn, cfg_.dec_heads, nn::rms(t, ps, blk.attn_norm, h),
                        nn::rms(t, ps, blk.attn_norm, h), nullptr, &rope, &rope);
        h = add(t, h, a);
        Var f = nn::mlp(t, ps, blk.ffn, nn::rms(t, ps, blk.ffn_norm, h));
        h = add(t, h, f);
        if (taps) taps->push_back(h);
    }
    return nn::linear(t, ps, dec_out_, nn::rms(t, ps, dec_final_norm_, h));
}

Var Tokenizer::decode_tokens(Tape& t, ParamSet& ps, const TokenGrid& grid,
                             std::vector<Var>* taps) const {
    std::vector<int64_t> ids(grid.ids.begin(), grid.ids.end());
    for (int64_t id : ids)
        M2_CHECK(id >= 0 && id < cfg_.codebook_size, "decode: token id out of range");
    Var codes = gather_rows(t, t.leaf(ps.ptr(cb_)), std::move(ids));
    return decode_features(t, ps, codes, grid.h, grid.w, taps);
}

Image Tokenizer::to_image(const Array& pixels, int hp, int wp) const {
    Array clamped = pixels;
    for (int64_t i = 0; i < clamped.size(); ++i)
        clamped[i] = std::min(real(1), std::max(real(0), clamped[i]));
    return unpatchify(clamped, hp, wp, cfg_.patch);
}

VqLosses Tokenizer::vq_losses(Tape& t, ParamSet& ps, Var z, const TokenGrid& grid) const {
    const Array& zv = t.val(z);
    M2_CHECK(zv.dim(0) == grid.size(), "vq_losses: grid does not match features");
    std::vector<int64_t> ids(grid.ids.begin(), grid.ids.end());
    Var e = gather_rows(t, t.leaf(ps.ptr(cb_)), ids);
    Array e_val = t.val(e);
    real inv_n = real(1) / real(zv.dim(0));
    VqLosses out;
    Var dc = sub(t, e, t.constant(Array(zv)));  // z detached: codebook term
    out.codebook = scale(t, sum(t, mul(t, dc, dc)), inv_n);
    Var dz = sub(t, z, t.constant(std::move(e_val)));  // e detached: commit term
    out.commit = scale(t, sum(t, mul(t, dz, dz)), inv_n);
    return out;
}

Var Tokenizer::sem_align_loss(Tape& t, ParamSet& ps, const Image& img, Var dec_tap) const {
    Var sem = nn::mlp(t, ps, sem_enc_, t.constant(patchify(img, cfg_.patch)));
    Array sem_val = t.val(sem);
    int64_t n = sem_val.dim(0);
    Array w({n});
    int64_t valid = 0;
    for (int64_t i = 0; i < n; ++i) {
        real ns = 0;
        for (int64_t j = 0; j < sem_val.dim(1); ++j) ns += sem_val.at(i, j) * sem_val.at(i, j);
        w[i] = ns > real(1e-12) ? real(1) : real(0);
        valid += w[i] > 0 ? 1 : 0;
    }
    if (valid < n)
        std::cerr << "sem_align: dropped " << (n - valid) << " zero-norm positions\n";
    M2_CHECK(valid > 0, "sem_align: no valid semantic features");
    for (int64_t i = 0; i < n; ++i) w[i] = -w[i] / real(valid);

    Var proj = nn::mlp(t, ps, align_head_, dec_tap);
    // teacher features enter as constants: the frozen encoder gets no gradient
    Var cos = cosine_rows(t, proj, t.constant(std::move(sem_val)), real(1e-12));
    return sum(t, mul(t, cos, t.constant(std::move(w))));
}

std::vector<int32_t> Tokenizer::codebook_neighbors(const ParamSet& ps, int idx, int m) const {
    const Array& cb = ps.value(cb_);
    M2_CHECK(idx >= 0 && idx < cfg_.codebook_size, "codebook_neighbors: index out of range");
    M2_CHECK(m >= 0 && m < cfg_.codebook_size, "codebook_neighbors: too many neighbors");
    auto norm = [&](int k) {
        double n = 0;
        for (int j = 0; j < cfg_.code_dim; ++j) n += cb.at(k, j) * cb.at(k, j);
        return std::sqrt(n);
    };
    double ni = norm(idx);
    std::vector<std::pair<double, int32_t>> scored;
    scored.reserve(static_cast<size_t>(cfg_.codebook_size) - 1);
    for (int k = 0; k < cfg_.codebook_size; ++k) {
        if (k == idx) continue;
        double dot = 0;
        for (int j = 0; j < cfg_.code_dim; ++j) dot += cb.at(idx, j) * cb.at(k, j);
        double denom = std::max(1e-12, ni * norm(k));
        scored.emplace_back(dot / denom, static_cast<int32_t>(k));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int32_t> out;
    out.reserve(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) out.push_back(scored[static_cast<size_t>(k)].second);
    return out;
}

}  // namespace m2::tok
