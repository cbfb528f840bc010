#pragma once

#include <vector>

#include "mammoth2/nn.hpp"
#include "mammoth2/tok/token_grid.hpp"

namespace m2::ar {

struct ArConfig {
    int layers = 8;
    int d_model = 64;
    int heads = 4;
    int ffn_hidden = 256;
    int text_vocab = 512;
    int vis_vocab = 256;
    // generation experts replace the understanding FFN on this half-open
    // layer window, for visual-generation tokens only
    int gen_layer_begin = 4;
    int gen_layer_end = 8;
    int max_seq = 256;
    double rope_base = 10000.0;
};

enum class Modality { text, vis_cond, vis_gen };

struct Token {
    int32_t id = 0;  // text id or codebook id, by modality
    Modality mod = Modality::text;
};

struct TokenStream {
    std::vector<Token> tokens;

    int size() const { return static_cast<int>(tokens.size()); }
    void push_text(int32_t id) { tokens.push_back({id, Modality::text}); }
    void push_vis(int32_t id, bool generated) {
        tokens.push_back({id, generated ? Modality::vis_gen : Modality::vis_cond});
    }
};

struct BackboneOutput {
    numerics::Var logits;               // {n, text_vocab + vis_vocab}
    std::vector<numerics::Var> hidden;  // layers+1 entries; [0] = embeddings
};

// Decoder-only transformer over a mixed text/visual stream. Routing is hard:
// a position runs the generation FFN expert iff its modality is vis_gen and
// the layer lies in the expert window; everything else (attention, norms,
// embeddings, heads) is shared. Generation experts start as copies of the
// understanding FFNs they shadow.
class Backbone {
public:
    Backbone(ParamSet& ps, const ArConfig& cfg, numerics::Rng& rng);

    const ArConfig& config() const { return cfg_; }

    // true: the generation expert handles this (modality, layer) pair
    static bool routes_to_gen(Modality mod, int layer, const ArConfig& cfg);

    // position in the shared output vocabulary: text ids first, then visual
    int32_t unified_id(const Token& tok) const;

    BackboneOutput forward_collect(numerics::Tape& t, ParamSet& ps,
                                   const TokenStream& stream) const;

    // Cross-entropy of logits[i] against the unified id of the stream token
    // at i+1, averaged over masked positions (mask has stream-size-1 rows).
    numerics::Var ntp_loss(numerics::Tape& t, numerics::Var logits,
                           const TokenStream& stream,
                           const std::vector<uint8_t>& supervise) const;

    // Same, against explicit unified target ids (one per stream position;
    // entry 0 is ignored). Keeps supervision clean when the input stream
    // carries noised visual tokens.
    numerics::Var ntp_loss(numerics::Tape& t, numerics::Var logits,
                           const std::vector<int32_t>& unified_targets,
                           const std::vector<uint8_t>& supervise) const;

    // Greedy/stochastic raster-scan decoding of h*w visual tokens appended
    // to the prompt. temperature == 0 is argmax (lowest index on ties).
    tok::TokenGrid generate_raster(ParamSet& ps, const TokenStream& prompt, int h, int w,
                                   double temperature, uint64_t seed) const;

private:
    ArConfig cfg_;
    int text_emb_ = -1;
    int vis_emb_ = -1;
    struct Layer {
        int attn_norm = -1;
        nn::AttnParams attn;
        int ffn_norm = -1;
        nn::MlpParams und_ffn;
        nn::MlpParams gen_ffn;  // unused (ids -1) outside the expert window
        bool has_gen = false;
    };
    std::vector<Layer> layers_;
    int final_norm_ = -1;
    nn::LinearParams text_head_;
    nn::LinearParams vis_head_;
};

}  // namespace m2::ar
