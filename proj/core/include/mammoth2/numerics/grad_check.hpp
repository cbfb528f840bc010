#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mammoth2/numerics/ops.hpp"

namespace m2::numerics {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int64_t worst_elem = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Rebuilds the graph on the given tape, binding parameters via tape.leaf().
// Must be pure in the parameter values (fix all RNG draws outside).
using LossFn = std::function<Var(Tape&)>;

// Compares reverse-mode gradients against central finite differences for
// every element of every listed parameter. Parameters absent from the graph
// count as exact-zero gradients.
GradCheckReport grad_check(const LossFn& loss,
                           const std::vector<std::pair<std::string, Array*>>& params,
                           double fd_eps = 1e-5);

}  // namespace m2::numerics
