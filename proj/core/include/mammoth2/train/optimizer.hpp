#pragma once

#include <map>
#include <string>
#include <vector>

#include "mammoth2/numerics/tape.hpp"
#include "mammoth2/params.hpp"

namespace m2::train {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.1;
};

// Adaptive moments with decoupled weight decay. Learning rates are given per
// parameter group; a group absent from the map is skipped entirely — no
// moment update, no decay — so frozen parameters stay bit-identical.
class AdamW {
public:
    AdamW(const ParamSet& ps, AdamWConfig cfg = {});

    // Reads gradients off the tape (a parameter with no gradient in the
    // graph counts as gradient zero) and applies one update.
    void step(ParamSet& ps, numerics::Tape& t, const std::map<std::string, double>& group_lr);

    int64_t steps_taken() const { return steps_; }

private:
    AdamWConfig cfg_;
    std::vector<numerics::Array> m_;
    std::vector<numerics::Array> v_;
    int64_t steps_ = 0;
};

}  // namespace m2::train
