#pragma once

#include <functional>
#include <vector>

#include "core/tensor/tensor.hpp"

namespace pixelrep {

// Compares tape gradients against central finite differences for every
// coordinate of every leaf (or a seeded subsample via stride). Relative error
// is |fd - g| / max(|fd|, |g|, floor).
template <typename T>
struct GradCheckResult {
    double max_rel_err = 0;
    int64_t checked = 0;
};

template <typename T>
GradCheckResult<T> grad_check(const std::function<Tensor<T>()>& forward,
                              std::vector<Tensor<T>> leaves, T h = T(1e-5),
                              int64_t stride = 1, T floor = T(1e-3)) {
    for (auto& leaf : leaves) leaf.zero_grad();
    Tape<T> tape;
    {
        TapeScope<T> scope(tape);
        Tensor<T> loss = forward();
        tape.backward(loss);
    }
    std::vector<std::vector<T>> analytic;
    analytic.reserve(leaves.size());
    for (auto& leaf : leaves) analytic.push_back(leaf.grad());

    GradCheckResult<T> res;
    for (size_t li = 0; li < leaves.size(); ++li) {
        auto& leaf = leaves[li];
        for (int64_t j = 0; j < leaf.numel(); j += stride) {
            T saved = leaf.data()[j];
            leaf.data()[j] = saved + h;
            T f_plus = forward().item();
            leaf.data()[j] = saved - h;
            T f_minus = forward().item();
            leaf.data()[j] = saved;
            T fd = (f_plus - f_minus) / (T(2) * h);
            T g = analytic[li][size_t(j)];
            T denom = std::max({std::abs(fd), std::abs(g), floor});
            res.max_rel_err = std::max(res.max_rel_err, double(std::abs(fd - g) / denom));
            ++res.checked;
        }
    }
    return res;
}

}  // namespace pixelrep
