#include "mammoth2/train/stage.hpp"

#include <cmath>

#include "mammoth2/errors.hpp"

namespace m2::train {

const char* stage_name(Stage s) {
    switch (s) {
        case Stage::pre1: return "pre1";
        case Stage::pre2: return "pre2";
        case Stage::sft: return "sft";
    }
    throw ValidationError("unknown stage");
}

Stage stage_from_name(const std::string& name) {
    if (name == "pre1") return Stage::pre1;
    if (name == "pre2") return Stage::pre2;
    if (name == "sft") return Stage::sft;
    throw ConfigError("unknown stage name: " + name);
}

StageConfig default_stage(Stage stage, double base_lr) {
    M2_CHECK_CFG(base_lr > 0.0, "stage: base_lr must be positive");
    StageConfig cfg;
    cfg.stage = stage;
    cfg.base_lr = base_lr;
    cfg.group_lr = {{"gen", base_lr}, {"align", base_lr}, {"dit", base_lr}};
    switch (stage) {
        case Stage::pre1:
            cfg.tasks = {Task::t2i};
            cfg.max_resolution = 32;
            cfg.noise.kind = NoiseKind::none;
            cfg.visual_condition = false;
            break;
        case Stage::pre2:
            cfg.tasks = {Task::t2i, Task::edit};
            cfg.max_resolution = 64;
            cfg.noise.kind = NoiseKind::similarity;
            cfg.noise.rate = 0.1;
            cfg.noise.neighbors = 8;
            cfg.visual_condition = true;
            break;
        case Stage::sft:
            cfg.tasks = {Task::t2i, Task::edit, Task::und};
            cfg.max_resolution = 64;
            cfg.noise.kind = NoiseKind::similarity;
            cfg.noise.rate = 0.1;
            cfg.noise.neighbors = 8;
            cfg.visual_condition = true;
            cfg.schedule = LrSchedule::cosine;
            cfg.round_robin = true;
            cfg.group_lr["und"] = base_lr;  // understanding experts unfreeze here
            break;
    }
    return cfg;
}

double lr_at(const StageConfig& cfg, int step) {
    M2_CHECK_CFG(cfg.warmup_steps >= 0 && cfg.total_steps > 0, "stage: bad step counts");
    M2_CHECK(step >= 0, "lr_at: negative step");
    if (cfg.warmup_steps > 0 && step < cfg.warmup_steps)
        return cfg.base_lr * (static_cast<double>(step) + 1.0) / static_cast<double>(cfg.warmup_steps);
    if (cfg.schedule == LrSchedule::constant) return cfg.base_lr;
    double span = static_cast<double>(cfg.total_steps - cfg.warmup_steps);
    if (span <= 0.0) return cfg.base_lr;
    double progress = (static_cast<double>(step) - cfg.warmup_steps) / span;
    if (progress > 1.0) progress = 1.0;
    return cfg.base_lr * 0.5 * (1.0 + std::cos(progress * 3.14159265358979323846));
}

}  // namespace m2::train
