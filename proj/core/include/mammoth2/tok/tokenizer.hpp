#pragma once

#include <vector>

#include "mammoth2/image.hpp"
#include "mammoth2/nn.hpp"
#include "mammoth2/tok/token_grid.hpp"

namespace m2::tok {

struct TokConfig {
    int codebook_size = 256;
    int code_dim = 8;
    int patch = 4;
    int enc_hidden = 32;
    int dec_dim = 48;  // must give a head dim divisible into three rope groups
    int dec_blocks = 2;
    int dec_heads = 2;
    int dec_ffn = 192;
    int sem_dim = 16;
    int sem_hidden = 32;
    int align_hidden = 32;
    // 1-based decoder feature tap for semantic alignment: the input
    // projection output is layer 1, each block output adds one.
    int sem_tap = 3;
    double commit_beta = 0.25;
    double sem_weight = 0.1;
    double rope_base = 10000.0;
};

struct Quantized {
    TokenGrid grid;
    numerics::Var z;   // encoder output {n, code_dim}
    numerics::Var zq;  // straight-through codes: value from the codebook,
                       // gradient passes to the encoder unchanged
};

struct VqLosses {
    numerics::Var codebook;  // ||sg(z) - e||^2, updates the codebook only
    numerics::Var commit;    // ||z - sg(e)||^2, updates the encoder only
};

// image -> {n, patch*patch*3} rows in raster patch order, columns (dy, dx, c).
numerics::Array patchify(const Image& img, int patch);
Image unpatchify(const numerics::Array& px, int hp, int wp, int patch);

// Discrete image tokenizer: per-patch MLP encoder, nearest-codebook
// quantization with straight-through gradients, and a small bidirectional
// transformer decoder with (x, y, t=0) rotary positions. A frozen random
// patch encoder stands in as the semantic teacher for the alignment loss.
class Tokenizer {
public:
    Tokenizer(ParamSet& ps, const TokConfig& cfg, numerics::Rng& rng);

    const TokConfig& config() const { return cfg_; }

    numerics::Var encode(numerics::Tape& t, ParamSet& ps, const Image& img) const;

    // Nearest codebook entry per row (L2, lowest index on ties). Bumps the
    // per-entry usage counters.
    Quantized quantize(numerics::Tape& t, ParamSet& ps, numerics::Var z, int hp, int wp);

    // Decoder over code vectors; taps (optional) receives the 1-based
    // intermediate features used by sem_align_loss.
    numerics::Var decode_features(numerics::Tape& t, ParamSet& ps, numerics::Var codes, int hp,
                                  int wp, std::vector<numerics::Var>* taps = nullptr) const;
    // Decoder over hard token ids; differentiable w.r.t. decoder parameters
    // and the codebook entries.
    numerics::Var decode_tokens(numerics::Tape& t, ParamSet& ps, const TokenGrid& grid,
                                std::vector<numerics::Var>* taps = nullptr) const;

    Image to_image(const numerics::Array& pixels, int hp, int wp) const;

    VqLosses vq_losses(numerics::Tape& t, ParamSet& ps, numerics::Var z,
                       const TokenGrid& grid) const;

    // Negated mean cosine between the projected decoder tap and the frozen
    // semantic features of the source image. Positions whose semantic
    // feature has (near-)zero norm are dropped from the mean.
    numerics::Var sem_align_loss(numerics::Tape& t, ParamSet& ps, const Image& img,
                                 numerics::Var dec_tap) const;

    // m nearest codebook entries to entry idx by cosine similarity,
    // descending, ties broken toward the lower index; idx itself excluded.
    std::vector<int32_t> codebook_neighbors(const ParamSet& ps, int idx, int m) const;

    int codebook_param() const { return cb_; }
    const std::vector<int64_t>& usage() const { return usage_; }

private:
    TokConfig cfg_;
    int cb_ = -1;
    nn::MlpParams enc_;
    nn::LinearParams dec_in_;
    struct Block {
        int attn_norm = -1;
        nn::AttnParams attn;
        int ffn_norm = -1;
        nn::MlpParams ffn;
    };
    std::vector<Block> dec_blocks_;
    int dec_final_norm_ = -1;
    nn::LinearParams dec_out_;
    nn::MlpParams sem_enc_;    // group "tok_frozen", never trained
    nn::MlpParams align_head_;
    std::vector<int64_t> usage_;
};

}  // namespace m2::tok
