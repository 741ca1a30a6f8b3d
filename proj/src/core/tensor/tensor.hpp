#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "core/util/error.hpp"

namespace pixelrep {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s);

template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
};

// Value-semantic handle to a shared node; copies alias the same storage.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T(0), bool requires_grad = false)
        : node_(std::make_shared<TensorNode<T>>()) {
        node_->shape = std::move(shape);
        node_->value.assign(size_t(shape_numel(node_->shape)), fill);
        node_->requires_grad = requires_grad;
    }

    static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false) {
        Tensor t;
        t.node_ = std::make_shared<TensorNode<T>>();
        require(shape_numel(shape) == int64_t(data.size()), ErrorCode::InvalidArgument,
                "data size ", data.size(), " does not match shape ", shape_str(shape));
        t.node_->shape = std::move(shape);
        t.node_->value = std::move(data);
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(T v) { return from({1}, {v}); }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    int64_t ndim() const { return int64_t(node_->shape.size()); }
    int64_t dim(int64_t i) const { return node_->shape[size_t(i)]; }
    int64_t numel() const { return int64_t(node_->value.size()); }

    std::vector<T>& values() { return node_->value; }
    const std::vector<T>& values() const { return node_->value; }
    T* data() { return node_->value.data(); }
    const T* data() const { return node_->value.data(); }

    // grad lives on the shared node, so handles mutate it even when const
    std::vector<T>& grad() const {
        node_->ensure_grad();
        return node_->grad;
    }
    bool has_grad() const { return !node_->grad.empty(); }
    void zero_grad() const {
        if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), T(0));
    }

    bool requires_grad() const { return node_ && node_->requires_grad; }
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    T item() const {
        require(numel() == 1, ErrorCode::InvalidArgument, "item() on non-scalar tensor ",
                shape_str(shape()));
        return node_->value[0];
    }

    std::shared_ptr<TensorNode<T>> node() const { return node_; }

private:
    std::shared_ptr<TensorNode<T>> node_;
};

// Ordered record of executed primitives; replaying it in reverse drives
// gradients from a scalar loss back to every recorded leaf.
template <typename T>
class Tape {
public:
    void record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }

    size_t size() const { return entries_.size(); }
    void clear() { entries_.clear(); }

    void backward(Tensor<T> loss) {
        require(loss.numel() == 1, ErrorCode::InvalidArgument,
                "backward expects a scalar loss, got ", shape_str(loss.shape()));
        loss.grad()[0] = T(1);
        for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
        entries_.clear();
    }

    static Tape*& current() {
        thread_local Tape* cur = nullptr;
        return cur;
    }

private:
    std::vector<std::function<void()>> entries_;
};

// RAII activation of a tape on this thread; ops record only while one is live.
template <typename T>
class TapeScope {
public:
    explicit TapeScope(Tape<T>& tape) : prev_(Tape<T>::current()) { Tape<T>::current() = &tape; }
    ~TapeScope() { Tape<T>::current() = prev_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

private:
    Tape<T>* prev_;
};

}  // namespace pixelrep
