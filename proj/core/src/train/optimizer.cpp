#include "mammoth2/train/optimizer.hpp"

#include <cmath>

namespace m2::train {

using numerics::Array;

AdamW::AdamW(const ParamSet& ps, AdamWConfig cfg) : cfg_(cfg) {
    m_.reserve(static_cast<size_t>(ps.count()));
    v_.reserve(static_cast<size_t>(ps.count()));
    for (int i = 0; i < ps.count(); ++i) {
        m_.emplace_back(ps.value(i).shape());
        v_.emplace_back(ps.value(i).shape());
    }
}

void AdamW::step(ParamSet& ps, numerics::Tape& t, const std::map<std::string, double>& group_lr) {
    M2_CHECK(static_cast<int>(m_.size()) == ps.count(),
             "optimizer was built for a different parameter set");
    ++steps_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (int i = 0; i < ps.count(); ++i) {
        auto it = group_lr.find(ps.group(i));
        if (it == group_lr.end()) continue;  // frozen group: untouched
        const double lr = it->second;
        Array& p = ps.value(i);
        const Array* g = t.grad_for(ps.ptr(i));
        Array& m = m_[static_cast<size_t>(i)];
        Array& v = v_[static_cast<size_t>(i)];
        for (int64_t e = 0; e < p.size(); ++e) {
            double ge = g ? static_cast<double>((*g)[e]) : 0.0;
            double me = cfg_.beta1 * m[e] + (1.0 - cfg_.beta1) * ge;
            double ve = cfg_.beta2 * v[e] + (1.0 - cfg_.beta2) * ge * ge;
            m[e] = static_cast<real>(me);
            v[e] = static_cast<real>(ve);
            double update = (me / bc1) / (std::sqrt(ve / bc2) + cfg_.eps);
            p[e] = static_cast<real>(p[e] - lr * (update + cfg_.weight_decay * p[e]));
        }
    }
}

}  // namespace m2::train
