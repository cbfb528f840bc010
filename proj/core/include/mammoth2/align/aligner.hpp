#pragma once

#include <vector>

#include "mammoth2/nn.hpp"

namespace m2::align {

struct AlignConfig {
    // hidden-snapshot indices to aggregate (0 = embeddings, k = block k output)
    std::vector<int> layer_set = {4, 5, 6, 7};
    int d_model = 64;  // backbone width
    int d_cond = 72;   // conditioning width, matches the diffusion decoder
    int code_dim = 8;  // tokenizer code width, for edit conditioning
    int queries = 8;
    int comp_layers = 2;
    int comp_heads = 4;
    int comp_ffn = 144;
    int enc_layers = 2;
    int enc_heads = 4;
    int enc_ffn = 144;
};

// Conditioning tokens handed to the diffusion decoder, with per-row segment
// tags (0 = text, 1 = visual).
struct ConditionSequence {
    numerics::Var feats;  // {len, d_cond}
    std::vector<int> segments;
};

// Bridges backbone hidden states into diffusion conditioning: multi-layer
// aggregation, a fixed-length learned-query compressor for visual features,
// and a small bidirectional encoder that fuses text and visual segments
// under learned segment-type embeddings.
class Aligner {
public:
    Aligner(ParamSet& ps, const AlignConfig& cfg, numerics::Rng& rng);

    const AlignConfig& config() const { return cfg_; }

    // Mean over the given hidden snapshots; invariant to their order.
    static numerics::Var aggregate_layers(numerics::Tape& t,
                                          const std::vector<numerics::Var>& hidden);

    numerics::Var project_hidden(numerics::Tape& t, ParamSet& ps, numerics::Var feats) const;
    numerics::Var project_codes(numerics::Tape& t, ParamSet& ps, numerics::Var codes) const;

    // Cross-attention of `queries` learned query tokens over kv ({n, d_cond},
    // n >= 1); output length is the query count regardless of n.
    numerics::Var compress(numerics::Tape& t, ParamSet& ps, numerics::Var kv) const;

    // Fuse optional text features ({nt, d_model}) and optional compressed
    // visual tokens ({nv, d_cond}) into one condition sequence. Pass invalid
    // Vars (default Var{}) to omit a segment; at least one is required.
    ConditionSequence unified_encode(numerics::Tape& t, ParamSet& ps, numerics::Var text_feats,
                                     numerics::Var vis_tokens) const;

    // Learned stand-in condition for classifier-free guidance; bypasses the
    // encoder.
    ConditionSequence null_condition(numerics::Tape& t, ParamSet& ps) const;

private:
    AlignConfig cfg_;
    int queries_ = -1;
    nn::LinearParams vis_in_;
    nn::LinearParams code_in_;
    nn::LinearParams text_in_;
    int seg_text_ = -1;
    int seg_vis_ = -1;
    struct Block {
        int attn_norm = -1;
        nn::AttnParams attn;
        int ffn_norm = -1;
        nn::MlpParams ffn;
    };
    std::vector<Block> comp_;
    std::vector<Block> enc_;
    int enc_final_norm_ = -1;
    int null_cond_ = -1;
};

}  // namespace m2::align
