#include "doctest.h"

#include <cmath>
#include <vector>

#include "mammoth2/align/aligner.hpp"
#include "mammoth2/numerics/grad_check.hpp"
#include "mammoth2/numerics/ops.hpp"

using namespace m2;
using namespace m2::numerics;
using m2::align::AlignConfig;
using m2::align::Aligner;
using m2::align::ConditionSequence;
using m2::real;

namespace {

AlignConfig tiny_config() {
    AlignConfig cfg;
    cfg.layer_set = {1, 2};
    cfg.d_model = 10;
    cfg.d_cond = 12;
    cfg.code_dim = 4;
    cfg.queries = 5;
    cfg.comp_layers = 2;
    cfg.comp_heads = 2;
    cfg.comp_ffn = 24;
    cfg.enc_layers = 2;
    cfg.enc_heads = 3;
    cfg.enc_ffn = 24;
    return cfg;
}

real max_abs_diff(const Array& a, const Array& b) {
    REQUIRE(a.same_shape(b));
    real m = 0;
    for (int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("layer aggregation is the elementwise mean, in any order") {
    Tape t;
    Rng rng(3);
    Array a = Array::randn({4, 6}, rng);
    Array b = Array::randn({4, 6}, rng);
    Array c = Array::randn({4, 6}, rng);
    Var va = t.constant(a), vb = t.constant(b), vc = t.constant(c);

    Array m1 = t.val(Aligner::aggregate_layers(t, {va, vb, vc}));
    for (int64_t i = 0; i < m1.size(); ++i)
        CHECK(m1[i] == doctest::Approx((a[i] + b[i] + c[i]) / 3).epsilon(1e-12));

    Array m2 = t.val(Aligner::aggregate_layers(t, {vc, va, vb}));
    CHECK(max_abs_diff(m1, m2) < 1e-12);

    // singleton set returns the snapshot itself
    Array s = t.val(Aligner::aggregate_layers(t, {vb}));
    CHECK(max_abs_diff(s, b) == 0);

    CHECK_THROWS_AS(Aligner::aggregate_layers(t, {}), ValidationError);
}

TEST_CASE("compressor emits exactly q tokens for every input length") {
    ParamSet ps;
    Rng rng(7);
    AlignConfig cfg = tiny_config();
    Aligner al(ps, cfg, rng);
    for (int n = 1; n <= 128; ++n) {
        Tape t;
        Var kv = t.constant(Array::randn({n, cfg.d_cond}, rng));
        const Array& out = t.val(al.compress(t, ps, kv));
        REQUIRE(out.rank() == 2);
        CHECK(out.dim(0) == cfg.queries);
        CHECK(out.dim(1) == cfg.d_cond);
        for (int64_t i = 0; i < out.size(); ++i) REQUIRE(std::isfinite(out[i]));
    }
    Tape t;
    Var empty = t.constant(Array({0, cfg.d_cond}));
    CHECK_THROWS_AS(al.compress(t, ps, empty), ValidationError);
}

TEST_CASE("a single key-value row makes every query read the same value") {
    ParamSet ps;
    Rng rng(11);
    nn::AttnParams attn = nn::register_attn(ps, "a", 8, rng, "g");
    Tape t;
    Var q = t.constant(Array::randn({5, 8}, rng));
    Var kv = t.constant(Array::randn({1, 8}, rng));
    Array out = t.val(nn::mha(t, ps, attn, 2, q, kv, nullptr, nullptr, nullptr));
    for (int64_t i = 1; i < out.dim(0); ++i)
        for (int64_t j = 0; j < out.dim(1); ++j)
            CHECK(out.at(i, j) == doctest::Approx(out.at(0, j)).epsilon(1e-12));
}

TEST_CASE("duplicating key-value rows leaves the compressed output unchanged") {
    ParamSet ps;
    Rng rng(13);
    AlignConfig cfg = tiny_config();
    Aligner al(ps, cfg, rng);
    Array kv = Array::randn({6, cfg.d_cond}, rng);
    Array kv2({12, cfg.d_cond});
    for (int64_t i = 0; i < kv.size(); ++i) {
        kv2[i] = kv[i];
        kv2[kv.size() + i] = kv[i];
    }
    Tape t;
    Array a = t.val(al.compress(t, ps, t.constant(kv)));
    Array b = t.val(al.compress(t, ps, t.constant(kv2)));
    CHECK(max_abs_diff(a, b) < 1e-9);
}

TEST_CASE("unified encoding concatenates tagged segments and stays bidirectional") {
    ParamSet ps;
    Rng rng(17);
    AlignConfig cfg = tiny_config();
    Aligner al(ps, cfg, rng);
    Array text = Array::randn({5, cfg.d_model}, rng);
    Array vis = Array::randn({3, cfg.d_cond}, rng);

    Tape t;
    ConditionSequence both = al.unified_encode(t, ps, t.constant(text), t.constant(vis));
    const Array& f = t.val(both.feats);
    CHECK(f.dim(0) == 8);
    CHECK(f.dim(1) == cfg.d_cond);
    CHECK(both.segments == std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1});

    // perturbing the last visual row must reach the first text row's output
    Array vis2 = vis;
    vis2.at(2, 0) += real(1);
    Tape t2;
    ConditionSequence moved = al.unified_encode(t2, ps, t2.constant(text), t2.constant(vis2));
    const Array& f2 = t2.val(moved.feats);
    real d0 = 0;
    for (int64_t j = 0; j < f.dim(1); ++j) d0 = std::max(d0, std::abs(f.at(0, j) - f2.at(0, j)));
    CHECK(d0 > 1e-8);

    Tape t3;
    ConditionSequence text_only = al.unified_encode(t3, ps, t3.constant(text), Var{});
    CHECK(t3.val(text_only.feats).dim(0) == 5);
    CHECK(text_only.segments == std::vector<int>(5, 0));

    Tape t4;
    ConditionSequence vis_only = al.unified_encode(t4, ps, Var{}, t4.constant(vis));
    CHECK(t4.val(vis_only.feats).dim(0) == 3);
    CHECK(vis_only.segments == std::vector<int>(3, 1));

    Tape t5;
    CHECK_THROWS_AS(al.unified_encode(t5, ps, Var{}, Var{}), ValidationError);
}

TEST_CASE("null condition is the learned stand-in, untouched by the encoder") {
    ParamSet ps;
    Rng rng(19);
    AlignConfig cfg = tiny_config();
    Aligner al(ps, cfg, rng);
    Tape t;
    ConditionSequence nc = al.null_condition(t, ps);
    const Array& f = t.val(nc.feats);
    CHECK(f.dim(0) == 1);
    CHECK(f.dim(1) == cfg.d_cond);
    CHECK(max_abs_diff(f, ps.value(ps.find("align.null_cond"))) == 0);
    CHECK(nc.segments == std::vector<int>{0});
}

TEST_CASE("alignment stack gradients pass finite differences") {
    ParamSet ps;
    Rng rng(23);
    AlignConfig cfg = tiny_config();
    cfg.comp_layers = 1;
    cfg.enc_layers = 1;
    Aligner al(ps, cfg, rng);
    // hidden-state input participates as a leaf so the check also covers the
    // path back into the backbone
    Array hidden = Array::randn({3, cfg.d_model}, rng);
    Array text = Array::randn({2, cfg.d_model}, rng);
    Array target = Array::randn({2 + cfg.queries, cfg.d_cond}, rng);

    auto loss = [&](Tape& t) {
        Var vis = al.compress(t, ps, al.project_hidden(t, ps, t.leaf(&hidden)));
        ConditionSequence cond = al.unified_encode(t, ps, t.leaf(&text), vis);
        return mse_sum(t, cond.feats, target);
    };
    std::vector<std::pair<std::string, Array*>> params;
    for (int i = 0; i < ps.count(); ++i) params.emplace_back(ps.name(i), ps.ptr(i));
    params.emplace_back("hidden_input", &hidden);
    params.emplace_back("text_input", &text);
    auto rep = grad_check(loss, params);
    INFO("worst ", rep.worst_param, "[", rep.worst_elem, "] analytic ", rep.analytic,
         " numeric ", rep.numeric);
    CHECK(rep.max_rel_err < 1e-4);
    // the hidden-state leaf itself must have received a live gradient
    bool hidden_live = false;
    {
        Tape t;
        Var l = loss(t);
        t.backward(l);
        const Array* g = t.grad_for(&hidden);
        if (g != nullptr)
            for (int64_t i = 0; i < g->size(); ++i) hidden_live |= ((*g)[i] != real(0));
    }
    CHECK(hidden_live);
}

TEST_CASE("projection widths are enforced") {
    ParamSet ps;
    Rng rng(29);
    AlignConfig cfg = tiny_config();
    Aligner al(ps, cfg, rng);
    Tape t;
    // visual tokens handed to the encoder must already be in d_cond
    Var bad = t.constant(Array::randn({3, cfg.d_cond + 1}, rng));
    CHECK_THROWS_AS(al.unified_encode(t, ps, Var{}, bad), ValidationError);
    // code projection accepts code_dim rows and emits d_cond
    Var codes = t.constant(Array::randn({4, cfg.code_dim}, rng));
    CHECK(t.val(al.project_codes(t, ps, codes)).dim(1) == cfg.d_cond);
}
