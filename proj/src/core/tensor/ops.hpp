#pragma once

#include <cstdint>
#include <vector>

#include "core/tensor/tensor.hpp"
#include "core/util/rng.hpp"

namespace pixelrep {

template <typename T>
struct BatchNormState {
    std::vector<T> running_mean;
    std::vector<T> running_var;

    void init(int64_t channels) {
        running_mean.assign(size_t(channels), T(0));
        running_var.assign(size_t(channels), T(1));
    }
};

namespace ops {

// [..., m, k] x [..., k, n] with identical leading dims; plain GEMM when 2-D
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// same shape, or b broadcast along the last dim (bias), or b scalar
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);  // elementwise

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s);

template <typename T>
Tensor<T> relu(const Tensor<T>& a);

// x [N,C,H,W], w [O,C,kh,kw], bias [O]; valid padding
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int64_t stride_h = 1, int64_t stride_w = 1);

// x [N,C,H,W]; training mode normalizes with batch statistics and updates the
// running ones, eval mode normalizes with the running statistics
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormState<T>& state, bool training, T momentum = T(0.1),
                      T eps = T(1e-5));

template <typename T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    T eps = T(1e-5));

template <typename T>
Tensor<T> softmax(const Tensor<T>& x);  // last dim

// scores [B,H,Tq,Tk]; key_pad (may be null) is [B,Tk] with 1 = masked; causal
// masks keys beyond the query index. Masked entries come out exactly zero.
template <typename T>
Tensor<T> attention_softmax(const Tensor<T>& scores, const uint8_t* key_pad, bool causal);

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng, bool training);

// table [V,d], out [ids.size(), d]
template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<int64_t>& ids);

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int64_t axis);

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int64_t axis, int64_t start, int64_t len);

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x);  // scalar

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, int64_t axis);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape);

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int64_t>& perm);

// logits [N,V], loss = -sum_j q_j log softmax_j averaged over rows whose
// target is not ignore_index, with q = (1-eps) one_hot + eps/V
template <typename T>
Tensor<T> cross_entropy_label_smoothed(const Tensor<T>& logits,
                                       const std::vector<int64_t>& targets, T eps_ls,
                                       int64_t ignore_index = -1);

}  // namespace ops
}  // namespace pixelrep
