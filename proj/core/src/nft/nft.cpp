#include "mammoth2/nft/nft.hpp"

#include <algorithm>
#include <cmath>

#include "mammoth2/errors.hpp"
#include "mammoth2/numerics/rng.hpp"
#include "mammoth2/train/optimizer.hpp"

namespace m2::nft {

using numerics::Array;
using numerics::Tape;
using numerics::Var;

std::vector<double> normalize_rewards(const std::vector<double>& raw) {
    M2_CHECK(raw.size() >= 2, "reward normalization needs at least two trajectories");
    for (double v : raw) M2_CHECK(std::isfinite(v), "reward normalization: non-finite reward");
    auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi == lo) return std::vector<double>(raw.size(), 0.5);
    // epsilon floors the spread (rather than padding it) so the group extremes
    // land exactly on 0 and 1 whenever the spread is non-degenerate
    double denom = std::max(hi - lo, 1e-8);
    std::vector<double> r(raw.size());
    for (size_t i = 0; i < raw.size(); ++i)
        r[i] = std::clamp((raw[i] - lo) / denom, 0.0, 1.0);
    return r;
}

std::pair<Array, Array> nft_policies(const Array& v_theta, const Array& v_old, double beta) {
    M2_CHECK(v_theta.shape() == v_old.shape(), "policy mix: shape mismatch");
    M2_CHECK_CFG(beta > 0.0 && beta <= 1.0, "policy mix: beta outside (0, 1]");
    // one shared offset keeps v+ + v- == 2 v_old an arithmetic identity
    Array vp(v_theta.shape()), vm(v_theta.shape());
    for (int64_t i = 0; i < v_theta.size(); ++i) {
        real d = real(beta) * (v_theta[i] - v_old[i]);
        vp[i] = v_old[i] + d;
        vm[i] = v_old[i] - d;
    }
    return {std::move(vp), std::move(vm)};
}

Var nft_loss(Tape& t, Var v_theta, const Array& v_old, const Array& v_target, double r,
             double beta, const Array* elem_weights, double scalar_weight) {
    const Array& vt = t.val(v_theta);
    M2_CHECK(vt.shape() == v_old.shape(), "nft loss: prediction/snapshot shape mismatch");
    M2_CHECK(vt.shape() == v_target.shape(), "nft loss: prediction/target shape mismatch");
    M2_CHECK(r >= 0.0 && r <= 1.0, "nft loss: optimality probability outside [0, 1]");
    M2_CHECK_CFG(beta > 0.0 && beta <= 1.0, "nft loss: beta outside (0, 1]");
    if (elem_weights)
        M2_CHECK(elem_weights->shape() == vt.shape(), "nft loss: weight shape mismatch");

    Var old_c = t.constant(v_old);
    Var tgt_c = t.constant(v_target);
    Var d = scale(t, sub(t, v_theta, old_c), real(beta));
    Var ep = sub(t, add(t, old_c, d), tgt_c);  // v+ - target
    Var em = sub(t, sub(t, old_c, d), tgt_c);  // v- - target
    Var sp = mul(t, ep, ep);
    Var sm = mul(t, em, em);
    if (elem_weights) {
        Var w = t.constant(*elem_weights);
        sp = mul(t, sp, w);
        sm = mul(t, sm, w);
    }
    Var pos = sum(t, sp);
    Var neg = sum(t, sm);
    // neg + r (pos - neg): equal branches cancel exactly, so the loss at
    // v_theta == v_old is identical for every r and beta
    Var loss = add(t, neg, scale(t, sub(t, pos, neg), real(r)));
    if (scalar_weight != 1.0) loss = scale(t, loss, real(scalar_weight));
    return loss;
}

Var kl_reg(Tape& t, Var v_theta, const Array& v_old) {
    M2_CHECK(t.val(v_theta).shape() == v_old.shape(), "kl reg: shape mismatch");
    Var d = sub(t, v_theta, t.constant(v_old));
    return mean(t, mul(t, d, d));
}

namespace {

uint64_t trajectory_key(uint64_t seed, int step, int prompt, int g) {
    using numerics::hash_combine;
    uint64_t k = hash_combine(seed, static_cast<uint64_t>(step));
    k = hash_combine(k, static_cast<uint64_t>(prompt));
    return hash_combine(k, static_cast<uint64_t>(g));
}

template <typename T>
std::string csv(const std::vector<T>& vs, const std::function<std::string(const T&)>& one) {
    std::string out;
    for (size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ",";
        out += one(vs[i]);
    }
    return out;
}

}  // namespace

NftStats nft_train(NftPolicy& policy, ParamSet& ps, const NftConfig& cfg, const RewardFn& reward,
                   const std::map<std::string, double>& group_lr, uint64_t seed,
                   io::MetricsWriter* rollout_log) {
    M2_CHECK_CFG(cfg.beta > 0.0 && cfg.beta <= 1.0, "nft: beta outside (0, 1]");
    M2_CHECK_CFG(cfg.kl_weight >= 0.0, "nft: negative kl weight");
    M2_CHECK_CFG(cfg.rollouts_per_prompt >= 2, "nft: group size below two");
    M2_CHECK_CFG(cfg.steps >= 1, "nft: no steps");
    M2_CHECK_CFG(cfg.sample_steps >= 1, "nft: no sampler steps");
    M2_CHECK_CFG(cfg.renoise_per_traj >= 1, "nft: no re-noised pairs per trajectory");
    M2_CHECK_CFG(policy.prompt_count() > 0, "nft: policy exposes no prompts");
    M2_CHECK_CFG(!group_lr.empty(), "nft: no trainable group");
    M2_CHECK(static_cast<bool>(reward), "nft: no reward function");

    train::AdamWConfig ocfg;
    ocfg.weight_decay = cfg.weight_decay;
    train::AdamW opt(ps, ocfg);

    NftStats stats;
    for (int step = 0; step < cfg.steps; ++step) {
        ParamSet snapshot = ps;  // the old policy every rollout and target this step sees

        Tape tape;
        std::vector<Var> losses;
        double reward_acc = 0.0;
        int64_t reward_n = 0;

        for (int prompt = 0; prompt < policy.prompt_count(); ++prompt) {
            struct Traj {
                Array x1;
                double raw;
                uint64_t seed;
                uint64_t key;
            };
            std::vector<Traj> kept;
            for (int g = 0; g < cfg.rollouts_per_prompt; ++g) {
                uint64_t key = trajectory_key(seed, step, prompt, g);
                uint64_t roll_seed = numerics::hash_combine(key, 1);
                Array x1 =
                    policy.rollout(snapshot, prompt, cfg.sample_steps, cfg.guidance, roll_seed);
                std::optional<double> raw = reward(prompt, x1);
                if (!raw.has_value() || !std::isfinite(*raw)) {
                    ++stats.dropped_trajectories;
                    continue;
                }
                kept.push_back(Traj{std::move(x1), *raw, roll_seed, key});
            }
            if (kept.size() < 2) {
                ++stats.dropped_groups;
                continue;
            }

            std::vector<double> raws(kept.size());
            for (size_t k = 0; k < kept.size(); ++k) raws[k] = kept[k].raw;
            std::vector<double> r = normalize_rewards(raws);
            for (double v : raws) reward_acc += v;
            reward_n += static_cast<int64_t>(raws.size());

            if (rollout_log) {
                std::function<std::string(const uint64_t&)> u64s = [](const uint64_t& v) {
                    return std::to_string(v);
                };
                std::function<std::string(const double&)> reals = [](const double& v) {
                    return io::fmt_real(v);
                };
                std::vector<uint64_t> seeds(kept.size());
                for (size_t k = 0; k < kept.size(); ++k) seeds[k] = kept[k].seed;
                rollout_log->write({{"step", std::to_string(step)},
                                    {"prompt", std::to_string(prompt)},
                                    {"seeds", csv(seeds, u64s)},
                                    {"raw", csv(raws, reals)},
                                    {"r", csv(r, reals)}});
            }

            const Array* sw = policy.spatial_weights(prompt);
            for (size_t k = 0; k < kept.size(); ++k) {
                numerics::Rng noise(numerics::hash_combine(kept[k].key, 2));
                for (int j = 0; j < cfg.renoise_per_traj; ++j) {
                    const Array& x1 = kept[k].x1;
                    double time = noise.uniform();
                    Array x0 = Array::randn(x1.shape(), noise, 1.0);
                    Array xt(x1.shape()), vtgt(x1.shape());
                    for (int64_t i = 0; i < x1.size(); ++i) {
                        xt[i] = real(1.0 - time) * x0[i] + real(time) * x1[i];
                        vtgt[i] = x1[i] - x0[i];
                    }

                    Array v_old;
                    {
                        Tape scratch;  // snapshot prediction is a plain value
                        Var vo = policy.velocity(scratch, snapshot, prompt,
                                                 scratch.constant(xt), time);
                        v_old = scratch.val(vo);
                    }
                    Var v_theta = policy.velocity(tape, ps, prompt, tape.constant(xt), time);

                    double w = 1.0 / static_cast<double>(x1.size());  // per-element scale
                    if (cfg.edit_time_weight) w *= 1.0 + time;
                    Var l = nft_loss(tape, v_theta, v_old, vtgt, r[k], cfg.beta, sw, w);
                    if (cfg.kl_weight > 0.0)
                        l = add(tape, l,
                                scale(tape, kl_reg(tape, v_theta, v_old), real(cfg.kl_weight)));
                    losses.push_back(l);
                }
            }
        }

        stats.reward_history.push_back(reward_n ? reward_acc / static_cast<double>(reward_n)
                                                : 0.0);
        if (losses.empty()) continue;  // every group dropped: nothing to descend

        Var total = mean_vars(tape, losses);
        stats.final_loss = static_cast<double>(tape.scalar(total));
        tape.backward(total);
        opt.step(ps, tape, group_lr);
    }
    return stats;
}

}  // namespace m2::nft
