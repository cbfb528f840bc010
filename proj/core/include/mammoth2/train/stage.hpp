#pragma once

#include <map>
#include <string>
#include <vector>

#include "mammoth2/train/noise.hpp"

namespace m2::train {

enum class Stage { pre1, pre2, sft };
enum class Task { t2i, edit, und };

const char* stage_name(Stage s);
Stage stage_from_name(const std::string& name);

enum class LrSchedule { constant, cosine };

// Knobs for one training stage. The learning-rate map doubles as the freeze
// matrix: parameter groups absent from group_lr are never touched by the
// optimizer, so their values stay bit-identical across the stage.
struct StageConfig {
    Stage stage = Stage::pre1;
    double base_lr = 1e-3;
    int warmup_steps = 20;
    int total_steps = 400;
    LrSchedule schedule = LrSchedule::constant;
    std::map<std::string, double> group_lr;  // trainable groups, absolute rates

    double ntp_w = 1.0;  // next-token loss weight
    double vp_w = 1.0;   // velocity-prediction loss weight
    double cond_drop = 0.1;  // chance a sample's condition is replaced by the null one

    int max_resolution = 32;       // largest image side accepted, pixels
    NoiseSpec noise;               // applied to visual tokens on the AR input side
    std::vector<Task> tasks;       // task mix for the stage
    bool visual_condition = false; // feed AR visual hidden states to the decoder
    bool round_robin = false;      // cycle tasks per sample instead of batch-level
};

// Stage presets: alignment pretraining (text-to-image only, text conditioning,
// clean streams), joint pretraining (adds editing, visual conditioning, and
// input-token noise), and supervised finetuning (all tasks, cosine decay,
// understanding experts unfrozen).
StageConfig default_stage(Stage stage, double base_lr = 1e-3);

// Linear warmup to base_lr, then constant or cosine decay to zero over the
// remaining steps. step is zero-based.
double lr_at(const StageConfig& cfg, int step);

}  // namespace m2::train
