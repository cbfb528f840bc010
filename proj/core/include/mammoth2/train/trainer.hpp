#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "mammoth2/align/aligner.hpp"
#include "mammoth2/ar/backbone.hpp"
#include "mammoth2/dit/model.hpp"
#include "mammoth2/io/metrics.hpp"
#include "mammoth2/tok/tokenizer.hpp"
#include "mammoth2/train/optimizer.hpp"
#include "mammoth2/train/stage.hpp"
#include "mammoth2/train/tasks.hpp"

namespace m2::train {

// The full model stack sharing one parameter registry. Cross-module width
// couplings are validated before any parameter is registered.
struct ModelBundle {
    tok::TokConfig tok_cfg;
    ar::ArConfig ar_cfg;
    align::AlignConfig align_cfg;
    dit::DitConfig dit_cfg;
    ParamSet ps;
    numerics::Rng init_rng;
    tok::Tokenizer tokenizer;
    ar::Backbone backbone;
    align::Aligner aligner;
    dit::DitModel dit;

    ModelBundle(const tok::TokConfig& tc, const ar::ArConfig& ac, const align::AlignConfig& gc,
                const dit::DitConfig& dc, uint64_t seed);

    ModelBundle(const ModelBundle&) = delete;
    ModelBundle& operator=(const ModelBundle&) = delete;

    // Default desk-scale stack (32x32 images, patch 4, 256-code book).
    static std::unique_ptr<ModelBundle> desk(uint64_t seed);

    // encode + nearest-code quantize; no gradients kept
    tok::TokenGrid tokenize(const Image& img);
};

struct StepStats {
    double ntp = 0.0;    // nats per supervised token, batch mean
    double flow = 0.0;   // squared velocity error per latent element, batch mean
    double total = 0.0;  // ntp_w * ntp + vp_w * flow
    double lr = 0.0;     // scheduled base rate this step
    int64_t tokens = 0;  // stream tokens consumed
};

// One-stage training driver: applies input-side noise, assembles the joint
// next-token + velocity objective on a single tape, and steps the optimizer
// under the stage's freeze map. Per-sample randomness is keyed by
// (global seed, step, sample id), so a step is reproducible in isolation.
class Trainer {
public:
    Trainer(ModelBundle& m, StageConfig stage, uint64_t global_seed);

    const StageConfig& stage() const { return stage_; }
    AdamW& optimizer() { return opt_; }

    StepStats joint_step(const std::vector<TaskSample>& batch, int step);

private:
    align::ConditionSequence condition_for(numerics::Tape& t, const TaskSample& s,
                                           numerics::Var aggregated);

    ModelBundle& m_;
    StageConfig stage_;
    uint64_t seed_;
    AdamW opt_;
    std::optional<NeighborTable> neighbors_;
};

// Prepared sample pools, one per task kind.
struct TaskPools {
    std::vector<TaskSample> t2i;
    std::vector<TaskSample> edit;
    std::vector<TaskSample> und;

    const std::vector<TaskSample>& of(Task task) const;
};

// Runs stage.total_steps batches; batches are whole-task in pre stages and
// round-robin over tasks in sft. Writes one metrics record per step when a
// writer is given (deterministic fields only; throughput goes to stderr).
// Returns the final step's stats.
StepStats train_stage(ModelBundle& m, const StageConfig& stage, const TaskPools& pools,
                      int batch_size, uint64_t seed, io::MetricsWriter* metrics);

}  // namespace m2::train
