#pragma once

#include <vector>

#include "mammoth2/ar/backbone.hpp"
#include "mammoth2/image.hpp"
#include "mammoth2/tok/token_grid.hpp"
#include "mammoth2/train/noise.hpp"
#include "mammoth2/train/stage.hpp"

namespace m2::train {

// One image's token block inside a stream. `start` is the stream index of
// the first token; the grid holds the clean ids.
struct VisSpan {
    int start = 0;
    tok::TokenGrid grid;
    bool generated = false;
};

// One training sample: the AR input stream, clean next-token supervision,
// and the conditioning/diffusion hookup for the decoder. Input-side noise
// may rewrite visual ids in `stream`; `targets` always keeps ground truth.
struct TaskSample {
    Task task = Task::t2i;
    int64_t sample_id = 0;  // stable dataset identity, keys per-sample seeds
    ar::TokenStream stream;
    std::vector<int32_t> targets;    // clean unified ids, one per position
    std::vector<uint8_t> supervise;  // stream size - 1 rows
    std::vector<VisSpan> vis_spans;
    int text_cond_begin = 0;  // [begin, end) stream rows fed to the condition
    int text_cond_end = 0;    // encoder as the text segment
    int cond_span = -1;       // vis_spans index for visual conditioning, -1 = none
    bool flow = false;        // sample carries a diffusion target
    Image flow_target;
};

// [bos, t2i, caption, img, tokens..., eos]; supervises the image tokens and
// the closing eos; the diffusion target is the image itself.
TaskSample build_t2i(const ar::ArConfig& cfg, const std::vector<int32_t>& caption_ids,
                     const tok::TokenGrid& img_tokens, const Image& img);

// [bos, edit, instruction, img, source..., img_end, img, target..., eos];
// supervises the target image tokens and eos; conditions on the source span.
TaskSample build_edit(const ar::ArConfig& cfg, const std::vector<int32_t>& instruction_ids,
                      const tok::TokenGrid& src_tokens, const tok::TokenGrid& tgt_tokens,
                      const Image& tgt_img);

// [bos, und, img, source..., img_end, caption, eos]; supervises the caption
// and eos; no diffusion target.
TaskSample build_und(const ar::ArConfig& cfg, const tok::TokenGrid& src_tokens,
                     const std::vector<int32_t>& caption_ids);

// Rewrites the visual ids of every span in the input stream through the
// noise op. Supervision targets are untouched by construction.
void noise_sample(TaskSample& s, const NoiseSpec& spec, int codebook_size,
                  const NeighborTable* neighbors, numerics::Rng& rng);

}  // namespace m2::train
