// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

/// Dense float64 tensors with tape-free reverse-mode differentiation.
///
/// Every op returns a fresh Tensor whose node remembers its parents and a
/// backward closure. Calling backward() on a scalar walks the graph in
/// reverse topological order. Leaf tensors created with requires_grad
/// accumulate gradients across calls until zero_grad().
namespace ldr::ad {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) {
            grad.assign(value.size(), 0.0);
        }
    }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor parameter(Shape shape, std::vector<double> values);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor scalar(double value);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t numel() const { return node_->value.size(); }

    std::span<const double> data() const { return node_->value; }
    std::span<double> mutable_data() { return node_->value; }
    /// Empty until a backward pass has reached this tensor.
    std::span<const double> grad() const { return node_->grad; }
    std::span<double> mutable_grad() {
        node_->ensure_grad();
        return node_->grad;
    }
    void zero_grad() { node_->grad.clear(); }

    bool requires_grad() const { return node_->requires_grad; }
    double item() const;

    /// Same values, cut from the graph.
    Tensor detach() const;

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

/// While alive on a thread, ops on that thread record no graph.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

/// Reverse pass from a scalar. Non-leaf gradients are recomputed on every
/// call; leaf gradients accumulate.
void backward(const Tensor& loss);

// Linear algebra. matmul takes [..., n, k] x [k, m] or batched [..., k, m].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

// Elementwise with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor gelu(const Tensor& a);

/// Negative axes count from the back.
Tensor softmax(const Tensor& a, int axis);
/// Softmax over the last axis restricted to allowed entries; disallowed
/// entries get exactly zero weight. `allow` has either a.numel() entries or
/// the size of the last two axes (shared across leading batch axes).
Tensor masked_softmax(const Tensor& a, std::span<const std::uint8_t> allow);
/// Normalizes to zero mean and unit variance along `axis` (no affine).
Tensor layer_norm(const Tensor& a, int axis, double eps);
/// Inverted dropout. Identity when !training or p == 0.
Tensor dropout(const Tensor& a, double p, std::uint64_t seed, bool training);

Tensor concat(std::span<const Tensor> parts, int axis);
Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end);

Tensor sum(const Tensor& a, int axis, bool keepdim = false);
Tensor mean(const Tensor& a, int axis, bool keepdim = false);
/// Ties go to the lowest index, which alone receives the gradient.
Tensor max(const Tensor& a, int axis, bool keepdim = false);
Tensor sum_all(const Tensor& a);

/// Rows of `table` ([V, D]) gathered into [ids.size(), D].
Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);

}  // namespace ldr::ad
