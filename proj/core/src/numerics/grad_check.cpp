#include "mammoth2/numerics/grad_check.hpp"

#include <cmath>

namespace m2::numerics {

namespace {

double eval(const LossFn& loss, Tape& t) {
    t.clear();
    Var root = loss(t);
    return static_cast<double>(t.scalar(root));
}

}  // namespace

GradCheckReport grad_check(const LossFn& loss,
                           const std::vector<std::pair<std::string, Array*>>& params,
                           double fd_eps) {
    Tape t;
    Var root = loss(t);
    t.backward(root);

    GradCheckReport rep;
    Tape scratch;
    for (const auto& [name, arr] : params) {
        const Array* g = t.grad_for(arr);
        for (int64_t e = 0; e < arr->size(); ++e) {
            double analytic = g ? static_cast<double>((*g)[e]) : 0.0;
            real saved = (*arr)[e];
            (*arr)[e] = saved + static_cast<real>(fd_eps);
            double up = eval(loss, scratch);
            (*arr)[e] = saved - static_cast<real>(fd_eps);
            double down = eval(loss, scratch);
            (*arr)[e] = saved;
            double numeric = (up - down) / (2.0 * fd_eps);
            // The denominator floor absorbs central-difference roundoff
            // (~|loss|*eps/fd_eps) on gradients that are structurally zero,
            // e.g. biases that shift every logit of a softmax row equally.
            double rel = std::fabs(analytic - numeric) /
                         std::max(1e-4, std::max(std::fabs(analytic), std::fabs(numeric)));
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_param = name;
                rep.worst_elem = e;
                rep.analytic = analytic;
                rep.numeric = numeric;
            }
        }
    }
    return rep;
}

}  // namespace m2::numerics
