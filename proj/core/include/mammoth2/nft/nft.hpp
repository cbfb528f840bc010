#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mammoth2/io/metrics.hpp"
#include "mammoth2/numerics/ops.hpp"
#include "mammoth2/params.hpp"

namespace m2::nft {

// Negative-aware reinforcement settings. The policy-mix coefficient beta
// blends the frozen snapshot with the current predictor; kl_weight scales the
// velocity-deviation penalty that anchors the policy to the snapshot.
struct NftConfig {
    double beta = 0.5;              // in (0, 1]
    double kl_weight = 0.001;       // >= 0
    int rollouts_per_prompt = 16;   // group size G
    int steps = 200;                // optimizer steps
    int sample_steps = 50;          // Euler steps per rollout
    double guidance = 1.0;          // rollout CFG scale
    int renoise_per_traj = 1;       // (x_t, t) pairs drawn per kept trajectory
    double weight_decay = 0.0;      // reinforcement keeps weights where rewards put them
    bool edit_time_weight = false;  // w(t) = 1 + t, late-denoising emphasis
    double edit_spatial_gain = 2.0; // multiplier on edited-region elements
};

// Group min-max to optimality probabilities: r_i = (raw_i - min)/(max - min + eps),
// clipped to [0, 1]; a degenerate group (max == min) maps to all 0.5.
// Requires at least two trajectories.
std::vector<double> normalize_rewards(const std::vector<double>& raw);

// Implicit positive/negative policies around the snapshot:
//   v+ = v_old + beta (v_theta - v_old),  v- = v_old - beta (v_theta - v_old)
// so v+ + v- == 2 v_old holds exactly in floating point.
std::pair<numerics::Array, numerics::Array> nft_policies(const numerics::Array& v_theta,
                                                         const numerics::Array& v_old,
                                                         double beta);

// r ||v+ - v_target||^2 + (1-r) ||v- - v_target||^2, summed over elements,
// built so that v_theta == v_old collapses to ||v_old - v_target||^2 for any
// r and beta. Gradients flow only through v_theta; the snapshot is constant.
// Optional per-element weights multiply the squared errors; scalar_weight
// multiplies the total.
numerics::Var nft_loss(numerics::Tape& t, numerics::Var v_theta, const numerics::Array& v_old,
                       const numerics::Array& v_target, double r, double beta,
                       const numerics::Array* elem_weights = nullptr,
                       double scalar_weight = 1.0);

// Mean squared deviation from the snapshot prediction; the likelihood-free
// stand-in for a KL anchor.
numerics::Var kl_reg(numerics::Tape& t, numerics::Var v_theta, const numerics::Array& v_old);

// Anything nft_train can optimize: a conditional velocity field that can also
// roll out complete samples from noise. `prompt` indexes a fixed condition
// set the policy owns.
class NftPolicy {
public:
    virtual ~NftPolicy() = default;

    virtual int prompt_count() const = 0;

    // Final sample of one trajectory under the given weights (the caller
    // passes the snapshot, decoupling sampling from the weights in training).
    virtual numerics::Array rollout(ParamSet& ps, int prompt, int steps, double guidance,
                                    uint64_t seed) const = 0;

    // Graph-building velocity prediction at (x_t, time) for this prompt;
    // x_t matches the rollout shape {n, latent_dim}.
    virtual numerics::Var velocity(numerics::Tape& t, ParamSet& ps, int prompt,
                                   numerics::Var x_t, double time) const = 0;

    // Per-element loss emphasis (edited regions); nullptr = uniform.
    virtual const numerics::Array* spatial_weights(int prompt) const {
        (void)prompt;
        return nullptr;
    }
};

// nullopt = scoring failed; the trajectory is dropped.
using RewardFn = std::function<std::optional<double>(int prompt, const numerics::Array& x1)>;

struct NftStats {
    std::vector<double> reward_history;  // mean raw reward of scored rollouts, per step
    int dropped_trajectories = 0;        // reward failures
    int dropped_groups = 0;              // groups left with fewer than two trajectories
    double final_loss = 0.0;
};

// Reinforcement loop: per step, snapshot the weights, roll out G trajectories
// per prompt from the snapshot, score and min-max normalize per group, then
// descend the negative-aware loss plus the KL anchor over re-noised (x_t, t)
// pairs of each kept trajectory. Groups whose scored size drops below two are
// skipped. Only groups named in group_lr move; everything else is frozen.
NftStats nft_train(NftPolicy& policy, ParamSet& ps, const NftConfig& cfg, const RewardFn& reward,
                   const std::map<std::string, double>& group_lr, uint64_t seed,
                   io::MetricsWriter* rollout_log = nullptr);

}  // namespace m2::nft
