#include "core/tensor/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace pixelrep {

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

namespace ops {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<MatR<T>>;
template <typename T>
using MapC = Eigen::Map<const MatR<T>>;

template <typename T>
bool recording(std::initializer_list<const Tensor<T>*> ins) {
    if (!Tape<T>::current()) return false;
    for (const Tensor<T>* t : ins)
        if (t->defined() && t->requires_grad()) return true;
    return false;
}

template <typename T>
void mark_and_record(Tensor<T>& out, std::function<void()> fn) {
    out.set_requires_grad(true);
    Tape<T>::current()->record(std::move(fn));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.ndim() >= 2 && b.ndim() == a.ndim(), ErrorCode::InvalidArgument,
            "matmul rank mismatch: ", shape_str(a.shape()), " x ", shape_str(b.shape()));
    int64_t nd = a.ndim();
    int64_t m = a.dim(nd - 2), k = a.dim(nd - 1);
    int64_t kb = b.dim(nd - 2), n = b.dim(nd - 1);
    require(k == kb, ErrorCode::InvalidArgument, "matmul inner dim mismatch: ",
            shape_str(a.shape()), " x ", shape_str(b.shape()));
    int64_t batch = 1;
    Shape out_shape;
    for (int64_t i = 0; i < nd - 2; ++i) {
        require(a.dim(i) == b.dim(i), ErrorCode::InvalidArgument, "matmul batch dim mismatch: ",
                shape_str(a.shape()), " x ", shape_str(b.shape()));
        batch *= a.dim(i);
        out_shape.push_back(a.dim(i));
    }
    out_shape.push_back(m);
    out_shape.push_back(n);

    Tensor<T> out(out_shape);
    for (int64_t i = 0; i < batch; ++i) {
        MapC<T> A(a.data() + i * m * k, m, k);
        MapC<T> B(b.data() + i * k * n, k, n);
        MapM<T> C(out.data() + i * m * n, m, n);
        C.noalias() = A * B;
    }
    if (recording<T>({&a, &b})) {
        mark_and_record(out, [a, b, out, batch, m, k, n]() {
            for (int64_t i = 0; i < batch; ++i) {
                MapC<T> A(a.data() + i * m * k, m, k);
                MapC<T> B(b.data() + i * k * n, k, n);
                MapC<T> dC(out.grad().data() + i * m * n, m, n);
                if (a.requires_grad()) {
                    MapM<T> dA(a.grad().data() + i * m * k, m, k);
                    dA.noalias() += dC * B.transpose();
                }
                if (b.requires_grad()) {
                    MapM<T> dB(b.grad().data() + i * k * n, k, n);
                    dB.noalias() += A.transpose() * dC;
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    const int64_t n = a.numel();
    const int64_t bn = b.numel();
    bool same = a.shape() == b.shape();
    bool bias = !same && a.ndim() >= 1 && bn == a.dim(a.ndim() - 1);
    bool scalar_b = !same && !bias && bn == 1;
    require(same || bias || scalar_b, ErrorCode::InvalidArgument, "add shape mismatch: ",
            shape_str(a.shape()), " + ", shape_str(b.shape()));

    Tensor<T> out(a.shape());
    const T* av = a.data();
    const T* bv = b.data();
    T* ov = out.data();
    if (same) {
        for (int64_t i = 0; i < n; ++i) ov[i] = av[i] + bv[i];
    } else if (bias) {
        for (int64_t i = 0; i < n; ++i) ov[i] = av[i] + bv[i % bn];
    } else {
        for (int64_t i = 0; i < n; ++i) ov[i] = av[i] + bv[0];
    }
    if (recording<T>({&a, &b})) {
        mark_and_record(out, [a, b, out, n, bn, same, bias]() {
            const T* d = out.grad().data();
            if (a.requires_grad()) {
                T* da = a.grad().data();
                for (int64_t i = 0; i < n; ++i) da[i] += d[i];
            }
            if (b.requires_grad()) {
                T* db = b.grad().data();
                if (same)
                    for (int64_t i = 0; i < n; ++i) db[i] += d[i];
                else if (bias)
                    for (int64_t i = 0; i < n; ++i) db[i % bn] += d[i];
                else
                    for (int64_t i = 0; i < n; ++i) db[0] += d[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.shape() == b.shape(), ErrorCode::InvalidArgument, "sub shape mismatch: ",
            shape_str(a.shape()), " - ", shape_str(b.shape()));
    Tensor<T> out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
    if (recording<T>({&a, &b})) {
        mark_and_record(out, [a, b, out]() {
            const T* d = out.grad().data();
            if (a.requires_grad()) {
                T* da = a.grad().data();
                for (int64_t i = 0; i < a.numel(); ++i) da[i] += d[i];
            }
            if (b.requires_grad()) {
                T* db = b.grad().data();
                for (int64_t i = 0; i < b.numel(); ++i) db[i] -= d[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    require(a.shape() == b.shape(), ErrorCode::InvalidArgument, "mul shape mismatch: ",
            shape_str(a.shape()), " * ", shape_str(b.shape()));
    Tensor<T> out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    if (recording<T>({&a, &b})) {
        mark_and_record(out, [a, b, out]() {
            const T* d = out.grad().data();
            if (a.requires_grad()) {
                T* da = a.grad().data();
                for (int64_t i = 0; i < a.numel(); ++i) da[i] += d[i] * b.data()[i];
            }
            if (b.requires_grad()) {
                T* db = b.grad().data();
                for (int64_t i = 0; i < b.numel(); ++i) db[i] += d[i] * a.data()[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    Tensor<T> out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * s;
    if (recording<T>({&a})) {
        mark_and_record(out, [a, out, s]() {
            const T* d = out.grad().data();
            T* da = a.grad().data();
            for (int64_t i = 0; i < a.numel(); ++i) da[i] += d[i] * s;
        });
    }
    return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    Tensor<T> out(a.shape());
    for (int64_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] > T(0) ? a.data()[i] : T(0);
    if (recording<T>({&a})) {
        mark_and_record(out, [a, out]() {
            const T* d = out.grad().data();
            T* da = a.grad().data();
            for (int64_t i = 0; i < a.numel(); ++i)
                if (a.data()[i] > T(0)) da[i] += d[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int64_t stride_h, int64_t stride_w) {
    require(x.ndim() == 4 && w.ndim() == 4, ErrorCode::InvalidArgument,
            "conv2d expects 4-D input and kernel, got ", shape_str(x.shape()), " and ",
            shape_str(w.shape()));
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t O = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    require(w.dim(1) == C, ErrorCode::InvalidArgument, "conv2d channel mismatch: input ",
            shape_str(x.shape()), " kernel ", shape_str(w.shape()));
    require(bias.numel() == O, ErrorCode::InvalidArgument, "conv2d bias size ", bias.numel(),
            " does not match ", O, " output channels");
    require(H >= kh && W >= kw, ErrorCode::InvalidArgument, "conv2d kernel ",
            shape_str(w.shape()), " larger than input ", shape_str(x.shape()));
    int64_t Ho = (H - kh) / stride_h + 1;
    int64_t Wo = (W - kw) / stride_w + 1;

    Tensor<T> out({N, O, Ho, Wo});
    auto xat = [&](int64_t n, int64_t c, int64_t r, int64_t col) {
        return x.data()[((n * C + c) * H + r) * W + col];
    };
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < O; ++o)
            for (int64_t r = 0; r < Ho; ++r)
                for (int64_t col = 0; col < Wo; ++col) {
                    T acc = bias.data()[o];
                    for (int64_t c = 0; c < C; ++c)
                        for (int64_t i = 0; i < kh; ++i)
                            for (int64_t j = 0; j < kw; ++j)
                                acc += w.data()[((o * C + c) * kh + i) * kw + j] *
                                       xat(n, c, r * stride_h + i, col * stride_w + j);
                    out.data()[((n * O + o) * Ho + r) * Wo + col] = acc;
                }

    if (recording<T>({&x, &w, &bias})) {
        mark_and_record(out, [x, w, bias, out, N, C, H, W, O, kh, kw, Ho, Wo, stride_h,
                              stride_w]() {
            const T* d = out.grad().data();
            T* dx = x.requires_grad() ? x.grad().data() : nullptr;
            T* dw = w.requires_grad() ? w.grad().data() : nullptr;
            T* db = bias.requires_grad() ? bias.grad().data() : nullptr;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t o = 0; o < O; ++o)
                    for (int64_t r = 0; r < Ho; ++r)
                        for (int64_t col = 0; col < Wo; ++col) {
                            T g = d[((n * O + o) * Ho + r) * Wo + col];
                            if (g == T(0)) continue;
                            if (db) db[o] += g;
                            for (int64_t c = 0; c < C; ++c)
                                for (int64_t i = 0; i < kh; ++i)
                                    for (int64_t j = 0; j < kw; ++j) {
                                        int64_t xi = ((n * C + c) * H + r * stride_h + i) * W +
                                                     col * stride_w + j;
                                        int64_t wi = ((o * C + c) * kh + i) * kw + j;
                                        if (dw) dw[wi] += g * x.data()[xi];
                                        if (dx) dx[xi] += g * w.data()[wi];
                                    }
                        }
        });
    }
    return out;
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      BatchNormState<T>& state, bool training, T momentum, T eps) {
    require(x.ndim() == 4, ErrorCode::InvalidArgument, "batchnorm2d expects 4-D input, got ",
            shape_str(x.shape()));
    int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    require(gamma.numel() == C && beta.numel() == C, ErrorCode::InvalidArgument,
            "batchnorm2d parameter size mismatch for ", C, " channels");
    require(int64_t(state.running_mean.size()) == C, ErrorCode::InvalidArgument,
            "batchnorm2d state not initialized for ", C, " channels");
    const int64_t m = N * H * W;
    require(m > 0, ErrorCode::InvalidArgument, "batchnorm2d on empty batch");

    std::vector<T> mean(static_cast<size_t>(C)), var(static_cast<size_t>(C));
    if (training) {
        for (int64_t c = 0; c < C; ++c) {
            T s = 0;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t i = 0; i < H * W; ++i) s += x.data()[(n * C + c) * H * W + i];
            mean[size_t(c)] = s / T(m);
            T v = 0;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t i = 0; i < H * W; ++i) {
                    T dxi = x.data()[(n * C + c) * H * W + i] - mean[size_t(c)];
                    v += dxi * dxi;
                }
            var[size_t(c)] = v / T(m);
            T unbiased = m > 1 ? v / T(m - 1) : v;
            state.running_mean[size_t(c)] =
                (T(1) - momentum) * state.running_mean[size_t(c)] + momentum * mean[size_t(c)];
            state.running_var[size_t(c)] =
                (T(1) - momentum) * state.running_var[size_t(c)] + momentum * unbiased;
        }
    } else {
        mean = state.running_mean;
        var = state.running_var;
    }

    Tensor<T> out(x.shape());
    std::vector<T> inv_std(static_cast<size_t>(C));
    for (int64_t c = 0; c < C; ++c) inv_std[size_t(c)] = T(1) / std::sqrt(var[size_t(c)] + eps);
    auto xhat_at = [&](int64_t n, int64_t c, int64_t i) {
        return (x.data()[(n * C + c) * H * W + i] - mean[size_t(c)]) * inv_std[size_t(c)];
    };
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t i = 0; i < H * W; ++i)
                out.data()[(n * C + c) * H * W + i] =
                    gamma.data()[c] * xhat_at(n, c, i) + beta.data()[c];

    if (recording<T>({&x, &gamma, &beta})) {
        mark_and_record(out, [x, gamma, beta, out, mean, inv_std, N, C, H, W, m, training]() {
            const T* d = out.grad().data();
            const int64_t hw = H * W;
            for (int64_t c = 0; c < C; ++c) {
                T sum_dy = 0, sum_dy_xhat = 0;
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t i = 0; i < hw; ++i) {
                        T dy = d[(n * C + c) * hw + i];
                        T xh = (x.data()[(n * C + c) * hw + i] - mean[size_t(c)]) *
                               inv_std[size_t(c)];
                        sum_dy += dy;
                        sum_dy_xhat += dy * xh;
                    }
                if (beta.requires_grad()) beta.grad()[size_t(c)] += sum_dy;
                if (gamma.requires_grad()) gamma.grad()[size_t(c)] += sum_dy_xhat;
                if (x.requires_grad()) {
                    T g = gamma.data()[c];
                    T* dx = x.grad().data();
                    for (int64_t n = 0; n < N; ++n)
                        for (int64_t i = 0; i < hw; ++i) {
                            T dy = d[(n * C + c) * hw + i];
                            T xh = (x.data()[(n * C + c) * hw + i] - mean[size_t(c)]) *
                                   inv_std[size_t(c)];
                            if (training) {
                                dx[(n * C + c) * hw + i] +=
                                    g * inv_std[size_t(c)] *
                                    (dy - sum_dy / T(m) - xh * sum_dy_xhat / T(m));
                            } else {
                                dx[(n * C + c) * hw + i] += g * inv_std[size_t(c)] * dy;
                            }
                        }
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
    require(x.ndim() >= 1, ErrorCode::InvalidArgument, "layernorm on scalar");
    int64_t D = x.dim(x.ndim() - 1);
    require(gamma.numel() == D && beta.numel() == D, ErrorCode::InvalidArgument,
            "layernorm parameter size mismatch: dim ", D);
    int64_t rows = x.numel() / D;
    Tensor<T> out(x.shape());
    std::vector<T> mu(static_cast<size_t>(rows)), istd(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = x.data() + r * D;
        T s = 0;
        for (int64_t i = 0; i < D; ++i) s += xr[i];
        T mean = s / T(D);
        T v = 0;
        for (int64_t i = 0; i < D; ++i) v += (xr[i] - mean) * (xr[i] - mean);
        T inv = T(1) / std::sqrt(v / T(D) + eps);
        mu[size_t(r)] = mean;
        istd[size_t(r)] = inv;
        T* outr = out.data() + r * D;
        for (int64_t i = 0; i < D; ++i)
            outr[i] = gamma.data()[i] * (xr[i] - mean) * inv + beta.data()[i];
    }
    if (recording<T>({&x, &gamma, &beta})) {
        mark_and_record(out, [x, gamma, beta, out, mu, istd, rows, D]() {
            const T* d = out.grad().data();
            for (int64_t r = 0; r < rows; ++r) {
                const T* xr = x.data() + r * D;
                const T* dr = d + r * D;
                T sum_dxhat = 0, sum_dxhat_xhat = 0;
                for (int64_t i = 0; i < D; ++i) {
                    T xh = (xr[i] - mu[size_t(r)]) * istd[size_t(r)];
                    T dxh = dr[i] * gamma.data()[i];
                    sum_dxhat += dxh;
                    sum_dxhat_xhat += dxh * xh;
                }
                if (gamma.requires_grad() || beta.requires_grad()) {
                    for (int64_t i = 0; i < D; ++i) {
                        T xh = (xr[i] - mu[size_t(r)]) * istd[size_t(r)];
                        if (gamma.requires_grad()) gamma.grad()[size_t(i)] += dr[i] * xh;
                        if (beta.requires_grad()) beta.grad()[size_t(i)] += dr[i];
                    }
                }
                if (x.requires_grad()) {
                    T* dx = x.grad().data() + r * D;
                    for (int64_t i = 0; i < D; ++i) {
                        T xh = (xr[i] - mu[size_t(r)]) * istd[size_t(r)];
                        T dxh = dr[i] * gamma.data()[i];
                        dx[i] += istd[size_t(r)] *
                                 (dxh - sum_dxhat / T(D) - xh * sum_dxhat_xhat / T(D));
                    }
                }
            }
        });
    }
    return out;
}

namespace {

template <typename T>
void softmax_rows(const T* in, T* out, int64_t rows, int64_t D) {
    for (int64_t r = 0; r < rows; ++r) {
        const T* xr = in + r * D;
        T* yr = out + r * D;
        T mx = xr[0];
        for (int64_t i = 1; i < D; ++i) mx = std::max(mx, xr[i]);
        T s = 0;
        for (int64_t i = 0; i < D; ++i) {
            yr[i] = std::exp(xr[i] - mx);
            s += yr[i];
        }
        for (int64_t i = 0; i < D; ++i) yr[i] /= s;
    }
}

// dx = y * (dy - sum(dy * y)) per row; zero rows stay zero
template <typename T>
void softmax_backward_rows(const T* y, const T* dy, T* dx, int64_t rows, int64_t D) {
    for (int64_t r = 0; r < rows; ++r) {
        const T* yr = y + r * D;
        const T* dr = dy + r * D;
        T dot = 0;
        for (int64_t i = 0; i < D; ++i) dot += dr[i] * yr[i];
        T* dxr = dx + r * D;
        for (int64_t i = 0; i < D; ++i) dxr[i] += yr[i] * (dr[i] - dot);
    }
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
    require(x.ndim() >= 1, ErrorCode::InvalidArgument, "softmax on scalar");
    int64_t D = x.dim(x.ndim() - 1);
    int64_t rows = x.numel() / D;
    Tensor<T> out(x.shape());
    softmax_rows(x.data(), out.data(), rows, D);
    if (recording<T>({&x})) {
        mark_and_record(out, [x, out, rows, D]() {
            softmax_backward_rows(out.data(), out.grad().data(), x.grad().data(), rows, D);
        });
    }
    return out;
}

template <typename T>
Tensor<T> attention_softmax(const Tensor<T>& scores, const uint8_t* key_pad, bool causal) {
    require(scores.ndim() == 4, ErrorCode::InvalidArgument,
            "attention_softmax expects [B,H,Tq,Tk], got ", shape_str(scores.shape()));
    int64_t B = scores.dim(0), Hh = scores.dim(1), Tq = scores.dim(2), Tk = scores.dim(3);
    Tensor<T> out(scores.shape());
    for (int64_t b = 0; b < B; ++b)
        for (int64_t h = 0; h < Hh; ++h)
            for (int64_t q = 0; q < Tq; ++q) {
                const T* xr = scores.data() + ((b * Hh + h) * Tq + q) * Tk;
                T* yr = out.data() + ((b * Hh + h) * Tq + q) * Tk;
                T mx = -std::numeric_limits<T>::infinity();
                for (int64_t k = 0; k < Tk; ++k) {
                    bool ok = (!key_pad || !key_pad[b * Tk + k]) && (!causal || k <= q);
                    if (ok) mx = std::max(mx, xr[k]);
                }
                T s = 0;
                for (int64_t k = 0; k < Tk; ++k) {
                    bool ok = (!key_pad || !key_pad[b * Tk + k]) && (!causal || k <= q);
                    yr[k] = ok ? std::exp(xr[k] - mx) : T(0);
                    s += yr[k];
                }
                if (s > T(0))
                    for (int64_t k = 0; k < Tk; ++k) yr[k] /= s;
            }
    if (recording<T>({&scores})) {
        mark_and_record(out, [scores, out, B, Hh, Tq, Tk]() {
            softmax_backward_rows(out.data(), out.grad().data(), scores.grad().data(),
                                  B * Hh * Tq, Tk);
        });
    }
    return out;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Rng& rng, bool training) {
    require(p >= 0.0 && p < 1.0, ErrorCode::InvalidArgument, "dropout p must be in [0,1), got ",
            p);
    if (!training || p == 0.0) return x;
    Tensor<T> out(x.shape());
    auto mask = std::make_shared<std::vector<T>>(size_t(x.numel()));
    T keep_scale = T(1.0 / (1.0 - p));
    for (int64_t i = 0; i < x.numel(); ++i) {
        (*mask)[size_t(i)] = rng.uniform() >= p ? keep_scale : T(0);
        out.data()[i] = x.data()[i] * (*mask)[size_t(i)];
    }
    if (recording<T>({&x})) {
        mark_and_record(out, [x, out, mask]() {
            T* dx = x.grad().data();
            const T* d = out.grad().data();
            for (int64_t i = 0; i < x.numel(); ++i) dx[i] += d[i] * (*mask)[size_t(i)];
        });
    }
    return out;
}

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<int64_t>& ids) {
    require(table.ndim() == 2, ErrorCode::InvalidArgument, "embedding table must be 2-D, got ",
            shape_str(table.shape()));
    int64_t V = table.dim(0), D = table.dim(1);
    for (int64_t id : ids)
        require(id >= 0 && id < V, ErrorCode::InvalidArgument, "embedding id ", id,
                " out of range for vocabulary of ", V);
    Tensor<T> out({int64_t(ids.size()), D});
    for (size_t i = 0; i < ids.size(); ++i)
        std::copy_n(table.data() + ids[i] * D, D, out.data() + int64_t(i) * D);
    if (recording<T>({&table})) {
        mark_and_record(out, [table, out, ids, D]() {
            T* dt = table.grad().data();
            const T* d = out.grad().data();
            for (size_t i = 0; i < ids.size(); ++i)
                for (int64_t j = 0; j < D; ++j) dt[ids[i] * D + j] += d[int64_t(i) * D + j];
        });
    }
    return out;
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int64_t axis) {
    require(!parts.empty(), ErrorCode::InvalidArgument, "concat of nothing");
    const Shape& s0 = parts[0].shape();
    require(axis >= 0 && axis < int64_t(s0.size()), ErrorCode::InvalidArgument,
            "concat axis ", axis, " out of range for ", shape_str(s0));
    Shape out_shape = s0;
    int64_t axis_total = 0;
    for (const auto& p : parts) {
        require(p.ndim() == int64_t(s0.size()), ErrorCode::InvalidArgument,
                "concat rank mismatch: ", shape_str(s0), " vs ", shape_str(p.shape()));
        for (int64_t i = 0; i < p.ndim(); ++i)
            require(i == axis || p.dim(i) == s0[size_t(i)], ErrorCode::InvalidArgument,
                    "concat shape mismatch: ", shape_str(s0), " vs ", shape_str(p.shape()));
        axis_total += p.dim(axis);
    }
    out_shape[size_t(axis)] = axis_total;

    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= s0[size_t(i)];
    for (size_t i = size_t(axis) + 1; i < s0.size(); ++i) inner *= s0[i];

    Tensor<T> out(out_shape);
    int64_t offset = 0;
    for (const auto& p : parts) {
        int64_t pa = p.dim(axis);
        for (int64_t o = 0; o < outer; ++o)
            std::copy_n(p.data() + o * pa * inner, pa * inner,
                        out.data() + (o * axis_total + offset) * inner);
        offset += pa;
    }
    bool any_grad = false;
    for (const auto& p : parts) any_grad = any_grad || p.requires_grad();
    if (Tape<T>::current() && any_grad) {
        mark_and_record(out, [parts, out, outer, inner, axis_total, axis]() {
            const T* d = out.grad().data();
            int64_t offset = 0;
            for (const auto& p : parts) {
                int64_t pa = p.dim(axis);
                if (p.requires_grad()) {
                    T* dp = p.grad().data();
                    for (int64_t o = 0; o < outer; ++o)
                        for (int64_t i = 0; i < pa * inner; ++i)
                            dp[o * pa * inner + i] += d[(o * axis_total + offset) * inner + i];
                }
                offset += pa;
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int64_t axis, int64_t start, int64_t len) {
    require(axis >= 0 && axis < x.ndim(), ErrorCode::InvalidArgument, "slice axis ", axis,
            " out of range for ", shape_str(x.shape()));
    require(start >= 0 && len >= 1 && start + len <= x.dim(axis), ErrorCode::InvalidArgument,
            "slice [", start, ", ", start + len, ") out of range for ", shape_str(x.shape()),
            " axis ", axis);
    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int64_t i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
    Shape out_shape = x.shape();
    out_shape[size_t(axis)] = len;
    Tensor<T> out(out_shape);
    int64_t ax = x.dim(axis);
    for (int64_t o = 0; o < outer; ++o)
        std::copy_n(x.data() + (o * ax + start) * inner, len * inner,
                    out.data() + o * len * inner);
    if (recording<T>({&x})) {
        mark_and_record(out, [x, out, outer, inner, ax, start, len]() {
            const T* d = out.grad().data();
            T* dx = x.grad().data();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < len * inner; ++i)
                    dx[(o * ax + start) * inner + i] += d[o * len * inner + i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& x) {
    require(x.numel() > 0, ErrorCode::InvalidArgument, "mean of empty tensor");
    T s = 0;
    for (int64_t i = 0; i < x.numel(); ++i) s += x.data()[i];
    Tensor<T> out = Tensor<T>::scalar(s / T(x.numel()));
    if (recording<T>({&x})) {
        mark_and_record(out, [x, out]() {
            T g = out.grad()[0] / T(x.numel());
            T* dx = x.grad().data();
            for (int64_t i = 0; i < x.numel(); ++i) dx[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& x, int64_t axis) {
    require(axis >= 0 && axis < x.ndim(), ErrorCode::InvalidArgument, "mean axis ", axis,
            " out of range for ", shape_str(x.shape()));
    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int64_t i = axis + 1; i < x.ndim(); ++i) inner *= x.dim(i);
    int64_t ax = x.dim(axis);
    Shape out_shape;
    for (int64_t i = 0; i < x.ndim(); ++i)
        if (i != axis) out_shape.push_back(x.dim(i));
    if (out_shape.empty()) out_shape.push_back(1);
    Tensor<T> out(out_shape);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < inner; ++i) {
            T s = 0;
            for (int64_t a = 0; a < ax; ++a) s += x.data()[(o * ax + a) * inner + i];
            out.data()[o * inner + i] = s / T(ax);
        }
    if (recording<T>({&x})) {
        mark_and_record(out, [x, out, outer, inner, ax]() {
            const T* d = out.grad().data();
            T* dx = x.grad().data();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t i = 0; i < inner; ++i)
                    for (int64_t a = 0; a < ax; ++a)
                        dx[(o * ax + a) * inner + i] += d[o * inner + i] / T(ax);
        });
    }
    return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape new_shape) {
    require(shape_numel(new_shape) == x.numel(), ErrorCode::InvalidArgument, "reshape from ",
            shape_str(x.shape()), " to ", shape_str(new_shape), " changes element count");
    Tensor<T> out = Tensor<T>::from(std::move(new_shape), x.values());
    if (recording<T>({&x})) {
        mark_and_record(out, [x, out]() {
            T* dx = x.grad().data();
            const T* d = out.grad().data();
            for (int64_t i = 0; i < x.numel(); ++i) dx[i] += d[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int64_t>& perm) {
    require(int64_t(perm.size()) == x.ndim(), ErrorCode::InvalidArgument, "permute rank mismatch");
    Shape out_shape(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) out_shape[i] = x.dim(perm[i]);
    std::vector<int64_t> in_strides(size_t(x.ndim()), 1);
    for (int64_t i = x.ndim() - 2; i >= 0; --i)
        in_strides[size_t(i)] = in_strides[size_t(i) + 1] * x.dim(i + 1);
    std::vector<int64_t> out_to_in(perm.size());
    for (size_t i = 0; i < perm.size(); ++i) out_to_in[i] = in_strides[size_t(perm[i])];

    Tensor<T> out(out_shape);
    int64_t n = x.numel();
    std::vector<int64_t> idx(perm.size(), 0);
    for (int64_t flat = 0; flat < n; ++flat) {
        int64_t src = 0;
        for (size_t i = 0; i < perm.size(); ++i) src += idx[i] * out_to_in[i];
        out.data()[flat] = x.data()[src];
        for (int64_t i = int64_t(perm.size()) - 1; i >= 0; --i) {
            if (++idx[size_t(i)] < out_shape[size_t(i)]) break;
            idx[size_t(i)] = 0;
        }
    }
    if (recording<T>({&x})) {
        mark_and_record(out, [x, out, out_shape, out_to_in]() {
            T* dx = x.grad().data();
            const T* d = out.grad().data();
            std::vector<int64_t> idx(out_shape.size(), 0);
            for (int64_t flat = 0; flat < out.numel(); ++flat) {
                int64_t src = 0;
                for (size_t i = 0; i < out_shape.size(); ++i) src += idx[i] * out_to_in[i];
                dx[src] += d[flat];
                for (int64_t i = int64_t(out_shape.size()) - 1; i >= 0; --i) {
                    if (++idx[size_t(i)] < out_shape[size_t(i)]) break;
                    idx[size_t(i)] = 0;
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> cross_entropy_label_smoothed(const Tensor<T>& logits,
                                       const std::vector<int64_t>& targets, T eps_ls,
                                       int64_t ignore_index) {
    require(logits.ndim() == 2, ErrorCode::InvalidArgument, "expected [N,V] logits, got ",
            shape_str(logits.shape()));
    int64_t N = logits.dim(0), V = logits.dim(1);
    require(int64_t(targets.size()) == N, ErrorCode::InvalidArgument, "targets size ",
            targets.size(), " does not match batch ", N);
    require(eps_ls >= T(0) && eps_ls < T(1), ErrorCode::InvalidArgument,
            "label smoothing must be in [0,1)");
    int64_t n_real = 0;
    for (int64_t t : targets) {
        if (t == ignore_index) continue;
        require(t >= 0 && t < V, ErrorCode::InvalidArgument, "target id ", t,
                " out of range for vocabulary of ", V);
        ++n_real;
    }
    require(n_real > 0, ErrorCode::InvalidArgument, "all targets ignored");

    T total = 0;
    for (int64_t r = 0; r < N; ++r) {
        if (targets[size_t(r)] == ignore_index) continue;
        const T* xr = logits.data() + r * V;
        T mx = xr[0];
        for (int64_t j = 1; j < V; ++j) mx = std::max(mx, xr[j]);
        T se = 0, sx = 0;
        for (int64_t j = 0; j < V; ++j) {
            se += std::exp(xr[j] - mx);
            sx += xr[j];
        }
        T lse = mx + std::log(se);
        total += lse - (T(1) - eps_ls) * xr[targets[size_t(r)]] - (eps_ls / T(V)) * sx;
    }
    Tensor<T> out = Tensor<T>::scalar(total / T(n_real));
    if (recording<T>({&logits})) {
        mark_and_record(out, [logits, out, targets, eps_ls, ignore_index, N, V, n_real]() {
            T up = out.grad()[0] / T(n_real);
            T* dx = logits.grad().data();
            for (int64_t r = 0; r < N; ++r) {
                if (targets[size_t(r)] == ignore_index) continue;
                const T* xr = logits.data() + r * V;
                T mx = xr[0];
                for (int64_t j = 1; j < V; ++j) mx = std::max(mx, xr[j]);
                T se = 0;
                for (int64_t j = 0; j < V; ++j) se += std::exp(xr[j] - mx);
                for (int64_t j = 0; j < V; ++j) {
                    T p = std::exp(xr[j] - mx) / se;
                    T q = eps_ls / T(V) + (j == targets[size_t(r)] ? T(1) - eps_ls : T(0));
                    dx[r * V + j] += up * (p - q);
                }
            }
        });
    }
    return out;
}

#define PIXELREP_INSTANTIATE_OPS(T)                                                             \
    template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                           \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                              \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                                           \
    template Tensor<T> relu<T>(const Tensor<T>&);                                               \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int64_t, \
                                 int64_t);                                                      \
    template Tensor<T> batchnorm2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                      BatchNormState<T>&, bool, T, T);                          \
    template Tensor<T> layernorm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);   \
    template Tensor<T> softmax<T>(const Tensor<T>&);                                            \
    template Tensor<T> attention_softmax<T>(const Tensor<T>&, const uint8_t*, bool);            \
    template Tensor<T> dropout<T>(const Tensor<T>&, double, Rng&, bool);                        \
    template Tensor<T> embedding_lookup<T>(const Tensor<T>&, const std::vector<int64_t>&);      \
    template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, int64_t);                       \
    template Tensor<T> slice<T>(const Tensor<T>&, int64_t, int64_t, int64_t);                   \
    template Tensor<T> mean_all<T>(const Tensor<T>&);                                           \
    template Tensor<T> mean_axis<T>(const Tensor<T>&, int64_t);                                 \
    template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                     \
    template Tensor<T> permute<T>(const Tensor<T>&, const std::vector<int64_t>&);               \
    template Tensor<T> cross_entropy_label_smoothed<T>(const Tensor<T>&,                        \
                                                       const std::vector<int64_t>&, T, int64_t);

PIXELREP_INSTANTIATE_OPS(float)
PIXELREP_INSTANTIATE_OPS(double)

#undef PIXELREP_INSTANTIATE_OPS

}  // namespace ops
}  // namespace pixelrep
