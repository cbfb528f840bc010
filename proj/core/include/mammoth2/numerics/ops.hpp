#pragma once

#include <vector>

#include "mammoth2/numerics/tape.hpp"

namespace m2::numerics {

// Elementwise (same shape unless noted).
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var div(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, real c);
Var add_const(Tape& t, Var a, real c);
Var silu(Tape& t, Var a);
Var exp_op(Tape& t, Var a);
Var sqrt_op(Tape& t, Var a);

// Linear algebra (2-D).
Var matmul(Tape& t, Var a, Var b);
Var transpose(Tape& t, Var a);

// softmax / log-softmax over the last dimension (1-D vector or 2-D rows).
Var softmax(Tape& t, Var a);
Var log_softmax(Tape& t, Var a);

// y_i = gamma_i * x_i / sqrt(mean(x^2) + eps), applied per row.
Var rms_norm(Tape& t, Var x, Var gamma, real eps);

// Reductions.
Var sum(Tape& t, Var a);       // -> shape {1}
Var mean(Tape& t, Var a);      // -> shape {1}
Var sum_rows(Tape& t, Var a);  // {n,d} -> {n}

// Structure.
Var reshape(Tape& t, Var a, std::vector<int64_t> shape);
Var gather_rows(Tape& t, Var table, std::vector<int64_t> idx);
Var scatter_rows(Tape& t, int64_t n_rows, Var part, std::vector<int64_t> idx);
Var rows_pick(Tape& t, Var x, std::vector<int64_t> idx);  // out[i] = x[i, idx[i]]
Var slice_rows(Tape& t, Var x, int64_t start, int64_t n);
Var slice_cols(Tape& t, Var x, int64_t start, int64_t n);
Var concat_rows(Tape& t, const std::vector<Var>& parts);
Var concat_cols(Tape& t, const std::vector<Var>& parts);
Var add_rowvec(Tape& t, Var x, Var b);        // {n,d} + {d}
Var tile_rows(Tape& t, Var row, int64_t n);   // {d} -> {n,d}
Var mean_vars(Tape& t, const std::vector<Var>& vs);
Var stop_grad(Tape& t, Var a);

// Pairwise rotation: pairs (2j, 2j+1) of each row rotated by the angles whose
// cos/sin are given per row ({n, d/2} tables). Norm-preserving and linear.
Var rope_rotate(Tape& t, Var x, const Array& cos_t, const Array& sin_t);

// Composites (built from the primitives above; backward comes for free).
Var linear(Tape& t, Var x, Var w, Var b);  // {n,d} x {d,m} + {m}
Var attention(Tape& t, Var q, Var k, Var v, const Array* add_mask);
Var mse_sum(Tape& t, Var a, const Array& target);       // sum((a - target)^2)
Var cosine_rows(Tape& t, Var a, Var b, real eps);       // per-row cosine -> {n}
// Mean over masked rows of -log softmax(logits)[target]. Throws on empty mask.
Var cross_entropy_masked(Tape& t, Var logits, const std::vector<int64_t>& targets,
                         const std::vector<uint8_t>& mask);

// Additive causal mask: 0 on/below the diagonal, large negative above.
Array causal_mask(int64_t n);

// cos/sin rotation tables for 1-D rotary position encoding, {n, d_head/2}.
std::pair<Array, Array> rope_tables_1d(const std::vector<int64_t>& positions, int64_t d_head,
                                       double base);

}  // namespace m2::numerics
