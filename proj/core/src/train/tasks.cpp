#include "mammoth2/train/tasks.hpp"

#include "mammoth2/text/vocab.hpp"

namespace m2::train {

namespace {

void push_text(TaskSample& s, const ar::ArConfig& cfg, int32_t id) {
    M2_CHECK(id >= 0 && id < cfg.text_vocab, "task stream: text id outside vocabulary");
    s.stream.push_text(id);
    s.targets.push_back(id);
}

void push_span(TaskSample& s, const ar::ArConfig& cfg, const tok::TokenGrid& grid,
               bool generated) {
    VisSpan span{s.stream.size(), grid, generated};
    for (int32_t id : grid.ids) {
        M2_CHECK(id >= 0 && id < cfg.vis_vocab, "task stream: visual id outside codebook");
        s.stream.push_vis(id, generated);
        s.targets.push_back(cfg.text_vocab + id);
    }
    s.vis_spans.push_back(std::move(span));
}

// supervise predictions of stream positions [begin, end)
void supervise_range(TaskSample& s, int begin, int end) {
    int n = s.stream.size();
    if (s.supervise.size() != static_cast<size_t>(n) - 1)
        s.supervise.assign(static_cast<size_t>(n) - 1, 0);
    for (int pos = begin; pos < end; ++pos)
        if (pos >= 1) s.supervise[static_cast<size_t>(pos) - 1] = 1;
}

}  // namespace

TaskSample build_t2i(const ar::ArConfig& cfg, const std::vector<int32_t>& caption_ids,
                     const tok::TokenGrid& img_tokens, const Image& img) {
    M2_CHECK(!caption_ids.empty(), "t2i: empty caption");
    TaskSample s;
    s.task = Task::t2i;
    push_text(s, cfg, text::kBos);
    push_text(s, cfg, text::kT2i);
    for (int32_t id : caption_ids) push_text(s, cfg, id);
    push_text(s, cfg, text::kImg);
    s.text_cond_begin = 0;
    s.text_cond_end = s.stream.size();
    push_span(s, cfg, img_tokens, /*generated=*/true);
    push_text(s, cfg, text::kEos);
    supervise_range(s, s.vis_spans[0].start, s.stream.size());
    s.cond_span = 0;
    s.flow = true;
    s.flow_target = img;
    return s;
}

TaskSample build_edit(const ar::ArConfig& cfg, const std::vector<int32_t>& instruction_ids,
                      const tok::TokenGrid& src_tokens, const tok::TokenGrid& tgt_tokens,
                      const Image& tgt_img) {
    M2_CHECK(!instruction_ids.empty(), "edit: empty instruction");
    TaskSample s;
    s.task = Task::edit;
    push_text(s, cfg, text::kBos);
    push_text(s, cfg, text::kEdit);
    for (int32_t id : instruction_ids) push_text(s, cfg, id);
    push_text(s, cfg, text::kImg);
    s.text_cond_begin = 0;
    s.text_cond_end = s.stream.size();
    push_span(s, cfg, src_tokens, /*generated=*/false);
    push_text(s, cfg, text::kImgEnd);
    push_text(s, cfg, text::kImg);
    push_span(s, cfg, tgt_tokens, /*generated=*/true);
    push_text(s, cfg, text::kEos);
    supervise_range(s, s.vis_spans[1].start, s.stream.size());
    s.cond_span = 0;  // condition on the source image
    s.flow = true;
    s.flow_target = tgt_img;
    return s;
}

TaskSample build_und(const ar::ArConfig& cfg, const tok::TokenGrid& src_tokens,
                     const std::vector<int32_t>& caption_ids) {
    M2_CHECK(!caption_ids.empty(), "und: empty caption");
    TaskSample s;
    s.task = Task::und;
    push_text(s, cfg, text::kBos);
    push_text(s, cfg, text::kUnd);
    push_text(s, cfg, text::kImg);
    push_span(s, cfg, src_tokens, /*generated=*/false);
    push_text(s, cfg, text::kImgEnd);
    int answer_begin = s.stream.size();
    for (int32_t id : caption_ids) push_text(s, cfg, id);
    push_text(s, cfg, text::kEos);
    supervise_range(s, answer_begin, s.stream.size());
    s.text_cond_begin = 0;
    s.text_cond_end = 0;  // captioning feeds no diffusion decoder
    return s;
}

void noise_sample(TaskSample& s, const NoiseSpec& spec, int codebook_size,
                  const NeighborTable* neighbors, numerics::Rng& rng) {
    if (spec.kind == NoiseKind::none) return;
    for (VisSpan& span : s.vis_spans) {
        NoiseResult r = apply_noise(span.grid, spec, codebook_size, neighbors, rng);
        for (int i = 0; i < r.grid.size(); ++i)
            s.stream.tokens[static_cast<size_t>(span.start + i)].id =
                r.grid.ids[static_cast<size_t>(i)];
    }
}

}  // namespace m2::train
