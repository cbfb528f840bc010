#include "mammoth2/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <memory>

#include "mammoth2/numerics/ops.hpp"

namespace m2::train {

using numerics::Array;
using numerics::Rng;
using numerics::Tape;
using numerics::Var;

namespace {

const tok::TokConfig& check_coherent(const tok::TokConfig& tc, const ar::ArConfig& ac,
                                     const align::AlignConfig& gc, const dit::DitConfig& dc) {
    M2_CHECK_CFG(ac.vis_vocab == tc.codebook_size, "backbone visual vocab must equal codebook size");
    M2_CHECK_CFG(gc.d_model == ac.d_model, "aligner input width must match backbone width");
    M2_CHECK_CFG(gc.code_dim == tc.code_dim, "aligner code width must match tokenizer codes");
    M2_CHECK_CFG(gc.d_cond == dc.d, "condition width must match diffusion width");
    M2_CHECK_CFG(dc.latent_dim == tc.patch * tc.patch * 3,
                 "latent width must equal flattened patch pixels");
    for (int l : gc.layer_set)
        M2_CHECK_CFG(l >= 0 && l <= ac.layers, "aggregation layer outside hidden snapshots");
    return tc;
}

}  // namespace

ModelBundle::ModelBundle(const tok::TokConfig& tc, const ar::ArConfig& ac,
                         const align::AlignConfig& gc, const dit::DitConfig& dc, uint64_t seed)
    : tok_cfg(check_coherent(tc, ac, gc, dc)),
      ar_cfg(ac),
      align_cfg(gc),
      dit_cfg(dc),
      init_rng(seed),
      tokenizer(ps, tok_cfg, init_rng),
      backbone(ps, ar_cfg, init_rng),
      aligner(ps, align_cfg, init_rng),
      dit(ps, dit_cfg, init_rng) {}

std::unique_ptr<ModelBundle> ModelBundle::desk(uint64_t seed) {
    return std::make_unique<ModelBundle>(tok::TokConfig{}, ar::ArConfig{}, align::AlignConfig{},
                                         dit::DitConfig{}, seed);
}

tok::TokenGrid ModelBundle::tokenize(const Image& img) {
    Tape t;
    Var z = tokenizer.encode(t, ps, img);
    int hp = img.h / tok_cfg.patch;
    int wp = img.w / tok_cfg.patch;
    return tokenizer.quantize(t, ps, z, hp, wp).grid;
}

Trainer::Trainer(ModelBundle& m, StageConfig stage, uint64_t global_seed)
    : m_(m), stage_(std::move(stage)), seed_(global_seed), opt_(m.ps) {
    M2_CHECK_CFG(!stage_.tasks.empty(), "stage enables no tasks");
    if (stage_.noise.kind == NoiseKind::similarity)
        neighbors_.emplace(m_.ps.value(m_.tokenizer.codebook_param()), stage_.noise.neighbors);
}

align::ConditionSequence Trainer::condition_for(Tape& t, const TaskSample& s, Var aggregated) {
    Var text;
    if (s.text_cond_end > s.text_cond_begin)
        text = numerics::slice_rows(t, aggregated, s.text_cond_begin,
                                    s.text_cond_end - s.text_cond_begin);
    Var vis;
    if (stage_.visual_condition && s.cond_span >= 0) {
        const VisSpan& span = s.vis_spans[static_cast<size_t>(s.cond_span)];
        Var rows = numerics::slice_rows(t, aggregated, span.start, span.grid.size());
        Var kv = m_.aligner.project_hidden(t, m_.ps, rows);
        if (s.task == Task::edit) {
            // editing conditions on codes as well; ids are read back from the
            // (possibly noised) input stream so conditioning sees what the
            // backbone saw
            std::vector<int64_t> ids(static_cast<size_t>(span.grid.size()));
            for (int i = 0; i < span.grid.size(); ++i)
                ids[static_cast<size_t>(i)] = s.stream.tokens[static_cast<size_t>(span.start + i)].id;
            Var codes =
                numerics::gather_rows(t, t.leaf(m_.ps.ptr(m_.tokenizer.codebook_param())), ids);
            Var code_kv = m_.aligner.project_codes(t, m_.ps, codes);
            kv = numerics::concat_rows(t, {kv, code_kv});
        }
        vis = m_.aligner.compress(t, m_.ps, kv);
    }
    return m_.aligner.unified_encode(t, m_.ps, text, vis);
}

StepStats Trainer::joint_step(const std::vector<TaskSample>& batch, int step) {
    M2_CHECK(!batch.empty(), "joint step: empty batch");
    for (const TaskSample& s : batch) {
        bool enabled = std::find(stage_.tasks.begin(), stage_.tasks.end(), s.task) !=
                       stage_.tasks.end();
        M2_CHECK(enabled, "joint step: sample task not enabled for this stage");
        if (s.flow) {
            M2_CHECK(s.flow_target.h <= stage_.max_resolution &&
                         s.flow_target.w <= stage_.max_resolution,
                     "joint step: image exceeds the stage resolution cap");
        }
        for (const VisSpan& span : s.vis_spans)
            M2_CHECK(span.grid.h * m_.tok_cfg.patch <= stage_.max_resolution &&
                         span.grid.w * m_.tok_cfg.patch <= stage_.max_resolution,
                     "joint step: token grid exceeds the stage resolution cap");
    }

    Tape t;
    std::vector<Var> ntp_terms, flow_terms;
    StepStats stats;
    stats.lr = lr_at(stage_, step);

    for (const TaskSample& orig : batch) {
        TaskSample s = orig;
        Rng srng = Rng(seed_).split(static_cast<uint64_t>(step))
                       .split(static_cast<uint64_t>(s.sample_id));
        noise_sample(s, stage_.noise, m_.tok_cfg.codebook_size,
                     neighbors_ ? &*neighbors_ : nullptr, srng);
        stats.tokens += s.stream.size();

        ar::BackboneOutput out = m_.backbone.forward_collect(t, m_.ps, s.stream);
        ntp_terms.push_back(m_.backbone.ntp_loss(t, out.logits, s.targets, s.supervise));

        if (!s.flow || stage_.vp_w == 0.0) continue;
        align::ConditionSequence cond = srng.uniform() < stage_.cond_drop
                                            ? m_.aligner.null_condition(t, m_.ps)
                                            : condition_for(t, s, [&] {
                                                  std::vector<Var> picked;
                                                  for (int l : m_.align_cfg.layer_set)
                                                      picked.push_back(
                                                          out.hidden[static_cast<size_t>(l)]);
                                                  return align::Aligner::aggregate_layers(t, picked);
                                              }());
        Array latents = tok::patchify(s.flow_target, m_.tok_cfg.patch);
        dit::LatentGrid x1 = dit::LatentGrid::raster(s.flow_target.h / m_.tok_cfg.patch,
                                                     s.flow_target.w / m_.tok_cfg.patch,
                                                     std::move(latents));
        double per_elem = 1.0 / static_cast<double>(x1.latents.size());
        flow_terms.push_back(
            dit::flow_loss(t, m_.ps, m_.dit, cond, x1, srng, nullptr, per_elem));
    }

    Var ntp = numerics::mean_vars(t, ntp_terms);
    Var total = numerics::scale(t, ntp, static_cast<real>(stage_.ntp_w));
    Var flow;
    if (!flow_terms.empty()) {
        flow = numerics::mean_vars(t, flow_terms);
        total = numerics::add(t, total, numerics::scale(t, flow, static_cast<real>(stage_.vp_w)));
        stats.flow = t.val(flow)[0];
    }
    stats.ntp = t.val(ntp)[0];
    stats.total = t.val(total)[0];

    t.backward(total);
    std::map<std::string, double> eff;
    double scale = stats.lr / stage_.base_lr;
    for (const auto& [g, rate] : stage_.group_lr) eff[g] = rate * scale;
    opt_.step(m_.ps, t, eff);
    return stats;
}

const std::vector<TaskSample>& TaskPools::of(Task task) const {
    switch (task) {
        case Task::t2i: return t2i;
        case Task::edit: return edit;
        case Task::und: return und;
    }
    throw ValidationError("unknown task");
}

StepStats train_stage(ModelBundle& m, const StageConfig& stage, const TaskPools& pools,
                      int batch_size, uint64_t seed, io::MetricsWriter* metrics) {
    M2_CHECK_CFG(batch_size >= 1, "batch size must be positive");
    for (Task task : stage.tasks)
        M2_CHECK(!pools.of(task).empty(), "stage enables a task with an empty sample pool");

    Trainer trainer(m, stage, seed);
    size_t cursor[3] = {0, 0, 0};
    auto draw = [&](Task task) -> const TaskSample& {
        const auto& pool = pools.of(task);
        return pool[cursor[static_cast<size_t>(task)]++ % pool.size()];
    };

    StepStats last;
    int64_t total_tokens = 0;
    auto started = std::chrono::steady_clock::now();
    for (int step = 0; step < stage.total_steps; ++step) {
        std::vector<TaskSample> batch;
        batch.reserve(static_cast<size_t>(batch_size));
        for (int j = 0; j < batch_size; ++j) {
            // pre stages mix at batch level (whole batch shares one task);
            // sft balances tasks inside each batch
            Task task = stage.round_robin
                            ? stage.tasks[static_cast<size_t>(
                                  (static_cast<int64_t>(step) * batch_size + j) %
                                  static_cast<int64_t>(stage.tasks.size()))]
                            : stage.tasks[static_cast<size_t>(step) % stage.tasks.size()];
            batch.push_back(draw(task));
        }
        last = trainer.joint_step(batch, step);
        total_tokens += last.tokens;
        if (metrics)
            metrics->write({{"step", std::to_string(step)},
                            {"stage", stage_name(stage.stage)},
                            {"ntp_loss", io::fmt_real(last.ntp)},
                            {"flow_loss", io::fmt_real(last.flow)},
                            {"total", io::fmt_real(last.total)},
                            {"lr", io::fmt_real(last.lr)},
                            {"tokens", std::to_string(last.tokens)}});
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (secs > 0)
        std::fprintf(stderr, "[%s] %d steps, %.0f tokens/s\n", stage_name(stage.stage),
                     stage.total_steps, static_cast<double>(total_tokens) / secs);
    return last;
}

}  // namespace m2::train
