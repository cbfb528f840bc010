#pragma once

#include <deque>
#include <functional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mammoth2/numerics/array.hpp"

namespace m2::numerics {

struct Var {
    int32_t idx = -1;
    bool valid() const { return idx >= 0; }
};

// Reverse-mode tape. Ops append nodes in evaluation order, so reversing the
// node list is a reverse topological order and the backward pass visits each
// recorded op exactly once. Gradient buffers are allocated lazily; grads are
// accumulated in node order, which fixes the summation order and keeps runs
// bit-reproducible.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, int32_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Non-differentiable value.
    Var constant(Array v) { return push(std::move(v), nullptr); }

    // Differentiable leaf bound to a master array (model parameter or probe
    // input). Binding is cached per master pointer, so the same parameter
    // used twice in one graph accumulates one gradient.
    Var leaf(const Array* master) {
        auto it = leaves_.find(master);
        if (it != leaves_.end()) return it->second;
        Var v = push(Array(*master), nullptr);
        nodes_[static_cast<size_t>(v.idx)].is_leaf = true;
        leaves_.emplace(master, v);
        return v;
    }

    Var push(Array value, BackwardFn fn) {
        nodes_.push_back(Node{std::move(value), Array(), std::move(fn), false, false});
        return Var{static_cast<int32_t>(nodes_.size() - 1)};
    }

    const Array& val(Var v) const { return nodes_[static_cast<size_t>(v.idx)].value; }

    // Scalar convenience for rank-0/size-1 results.
    real scalar(Var v) const {
        const Array& a = val(v);
        M2_CHECK(a.size() == 1, "scalar() on non-scalar var");
        return a[0];
    }

    bool has_grad(Var v) const { return nodes_[static_cast<size_t>(v.idx)].grad_live; }

    // Gradient buffer, allocating zeros on first touch.
    Array& grad(Var v) {
        Node& n = nodes_[static_cast<size_t>(v.idx)];
        if (!n.grad_live) {
            n.grad = Array::zeros(n.value.shape());
            n.grad_live = true;
        }
        return n.grad;
    }

    // Gradient of a bound master array after backward(); nullptr when the
    // parameter never entered the graph or received no gradient.
    const Array* grad_for(const Array* master) const {
        auto it = leaves_.find(master);
        if (it == leaves_.end()) return nullptr;
        const Node& n = nodes_[static_cast<size_t>(it->second.idx)];
        return n.grad_live ? &n.grad : nullptr;
    }

    void backward(Var root) {
        M2_CHECK(val(root).size() == 1, "backward() root must be scalar");
        grad(root).fill(real(1));
        for (int32_t i = root.idx; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (n.grad_live && n.backward) n.backward(*this, i);
        }
    }

    size_t size() const { return nodes_.size(); }

    void clear() {
        nodes_.clear();
        leaves_.clear();
    }

private:
    struct Node {
        Array value;
        Array grad;
        BackwardFn backward;
        bool grad_live = false;
        bool is_leaf = false;
    };

    // Deque so references returned by val()/grad() survive later pushes.
    std::deque<Node> nodes_;
    std::unordered_map<const Array*, Var> leaves_;
};

}  // namespace m2::numerics
