#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "core/tensor/tensor.hpp"

namespace pixelrep {

enum class LrDecay { InverseSqrt, Constant };

template <typename T>
struct AdamConfig {
    T beta1 = T(0.9);
    T beta2 = T(0.98);
    T eps = T(1e-9);
    double peak_lr = 5e-4;
    int64_t warmup_steps = 4000;
    LrDecay decay = LrDecay::InverseSqrt;

    // linear warm-up to peak_lr, then inverse-sqrt decay (or constant)
    double lr_at(int64_t t) const {
        if (t <= warmup_steps) return peak_lr * double(t) / double(warmup_steps);
        if (decay == LrDecay::Constant) return peak_lr;
        return peak_lr * std::sqrt(double(warmup_steps) / double(t));
    }
};

template <typename T>
class AdamState {
public:
    AdamConfig<T> config;

    void attach(const std::vector<Tensor<T>>& params) {
        m_.clear();
        v_.clear();
        for (const auto& p : params) {
            m_.emplace_back(size_t(p.numel()), T(0));
            v_.emplace_back(size_t(p.numel()), T(0));
        }
    }

    int64_t step_count() const { return t_; }
    void set_step_count(int64_t t) { t_ = t; }
    size_t slots() const { return m_.size(); }
    std::vector<T>& m(size_t i) { return m_[i]; }
    std::vector<T>& v(size_t i) { return v_[i]; }
    const std::vector<T>& m(size_t i) const { return m_[i]; }
    const std::vector<T>& v(size_t i) const { return v_[i]; }

    // bias-corrected update from the gradients currently on the params
    void step(std::vector<Tensor<T>>& params) {
        require(params.size() == m_.size(), ErrorCode::InvalidArgument,
                "optimizer attached to ", m_.size(), " tensors, got ", params.size());
        ++t_;
        const T lr = T(config.lr_at(t_));
        const T bc1 = T(1) - std::pow(config.beta1, T(t_));
        const T bc2 = T(1) - std::pow(config.beta2, T(t_));
        for (size_t i = 0; i < params.size(); ++i) {
            auto& p = params[i];
            const std::vector<T>& g = p.grad();
            T* pv = p.data();
            for (size_t j = 0; j < g.size(); ++j) {
                m_[i][j] = config.beta1 * m_[i][j] + (T(1) - config.beta1) * g[j];
                v_[i][j] = config.beta2 * v_[i][j] + (T(1) - config.beta2) * g[j] * g[j];
                T mhat = m_[i][j] / bc1;
                T vhat = v_[i][j] / bc2;
                pv[j] -= lr * mhat / (std::sqrt(vhat) + config.eps);
            }
        }
    }

private:
    std::vector<std::vector<T>> m_, v_;
    int64_t t_ = 0;
};

}  // namespace pixelrep
