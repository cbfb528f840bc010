#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "mammoth2/errors.hpp"
#include "mammoth2/numerics/real.hpp"
#include "mammoth2/numerics/rng.hpp"

namespace m2::numerics {

// Dense row-major array. Immutable by convention once handed to the tape;
// mutation happens only at construction time and in optimizer updates.
template <typename S>
class BasicArray {
public:
    BasicArray() = default;

    explicit BasicArray(std::vector<int64_t> shape)
        : shape_(std::move(shape)), data_(checked_size(shape_), S(0)) {}

    BasicArray(std::vector<int64_t> shape, std::vector<S> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        M2_CHECK(static_cast<int64_t>(data_.size()) == checked_size(shape_),
                 "array data size does not match shape");
    }

    static BasicArray zeros(std::vector<int64_t> shape) { return BasicArray(std::move(shape)); }

    static BasicArray full(std::vector<int64_t> shape, S v) {
        BasicArray a(std::move(shape));
        for (auto& x : a.data_) x = v;
        return a;
    }

    static BasicArray scalar(S v) { return BasicArray({1}, {v}); }

    // 1D convenience constructor.
    static BasicArray vec(std::initializer_list<S> vals) {
        return BasicArray({static_cast<int64_t>(vals.size())}, std::vector<S>(vals));
    }

    static BasicArray randn(std::vector<int64_t> shape, Rng& rng, double stddev = 1.0) {
        BasicArray a(std::move(shape));
        for (auto& x : a.data_) x = static_cast<S>(rng.normal() * stddev);
        return a;
    }

    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    int rank() const { return static_cast<int>(shape_.size()); }
    int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    const std::vector<int64_t>& shape() const { return shape_; }

    bool same_shape(const BasicArray& o) const { return shape_ == o.shape_; }

    S* data() { return data_.data(); }
    const S* data() const { return data_.data(); }

    S& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    S operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    S& at(int64_t i, int64_t j) { return data_[static_cast<size_t>(i * shape_[1] + j)]; }
    S at(int64_t i, int64_t j) const { return data_[static_cast<size_t>(i * shape_[1] + j)]; }

    int64_t rows() const { return rank() == 1 ? 1 : shape_[0]; }
    int64_t cols() const { return rank() == 1 ? shape_[0] : shape_[rank() - 1]; }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + ")";
    }

    void fill(S v) {
        for (auto& x : data_) x = v;
    }

private:
    static int64_t checked_size(const std::vector<int64_t>& shape) {
        int64_t n = 1;
        for (int64_t d : shape) {
            M2_CHECK(d >= 0, "negative dimension in array shape");
            n *= d;
        }
        return n;
    }

    std::vector<int64_t> shape_;
    std::vector<S> data_;
};

using Array = BasicArray<real>;

}  // namespace m2::numerics
