// Copyright (C) 2026 The longdoc-rank Authors
// SPDX-License-Identifier: Apache-2.0

#include "ldr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "ldr/rng.hpp"

namespace ldr::ad {

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? ", " : "") << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

thread_local bool g_grad_enabled = true;

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const std::string& why) {
    throw ShapeError(std::string(op) + ": " + why + " for shape " + shape_str(a));
}

std::size_t resolve_axis(const char* op, const Shape& shape, int axis) {
    const int n = static_cast<int>(shape.size());
    const int resolved = axis < 0 ? axis + n : axis;
    if (resolved < 0 || resolved >= n) {
        shape_fail(op, shape, "axis " + std::to_string(axis) + " out of range");
    }
    return static_cast<std::size_t>(resolved);
}

// outer x len x inner view of a tensor around one axis
struct AxisView {
    std::size_t outer = 1;
    std::size_t len = 1;
    std::size_t inner = 1;
};

AxisView axis_view(const Shape& shape, std::size_t axis) {
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) {
        v.outer *= shape[i];
    }
    v.len = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) {
        v.inner *= shape[i];
    }
    return v;
}

Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    for (const auto& in : inputs) {
        if (g_grad_enabled && in.requires_grad()) {
            node->requires_grad = true;
        }
    }
    if (node->requires_grad) {
        for (const auto& in : inputs) {
            node->parents.push_back(in.node());
        }
        node->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(node));
}

// Maps every output element to the element of an input it reads from.
struct BroadcastPlan {
    Shape out_shape;
    std::vector<std::size_t> index_a;
    std::vector<std::size_t> index_b;
    enum class Kind { same, b_suffix, a_suffix, general } kind = Kind::general;
    std::size_t na = 0;
    std::size_t nb = 0;

    std::size_t ia(std::size_t i) const {
        switch (kind) {
            case Kind::same:
            case Kind::b_suffix: return i;
            case Kind::a_suffix: return i % na;
            default: return index_a[i];
        }
    }
    std::size_t ib(std::size_t i) const {
        switch (kind) {
            case Kind::same:
            case Kind::a_suffix: return i;
            case Kind::b_suffix: return i % nb;
            default: return index_b[i];
        }
    }
};

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) {
        return false;
    }
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

BroadcastPlan plan_broadcast(const char* op, const Shape& a, const Shape& b) {
    BroadcastPlan plan;
    plan.na = shape_numel(a);
    plan.nb = shape_numel(b);
    if (a == b) {
        plan.kind = BroadcastPlan::Kind::same;
        plan.out_shape = a;
        return plan;
    }
    if (is_suffix(b, a)) {
        plan.kind = BroadcastPlan::Kind::b_suffix;
        plan.out_shape = a;
        return plan;
    }
    if (is_suffix(a, b)) {
        plan.kind = BroadcastPlan::Kind::a_suffix;
        plan.out_shape = b;
        return plan;
    }
    const std::size_t nd = std::max(a.size(), b.size());
    Shape pa(nd, 1), pb(nd, 1), out(nd, 1);
    std::copy(a.begin(), a.end(), pa.begin() + static_cast<std::ptrdiff_t>(nd - a.size()));
    std::copy(b.begin(), b.end(), pb.begin() + static_cast<std::ptrdiff_t>(nd - b.size()));
    for (std::size_t d = 0; d < nd; ++d) {
        if (pa[d] != pb[d] && pa[d] != 1 && pb[d] != 1) {
            shape_fail(op, a, b);
        }
        out[d] = std::max(pa[d], pb[d]);
    }
    std::vector<std::size_t> sa(nd, 0), sb(nd, 0);
    std::size_t ra = 1, rb = 1;
    for (std::size_t d = nd; d-- > 0;) {
        sa[d] = pa[d] == 1 ? 0 : ra;
        sb[d] = pb[d] == 1 ? 0 : rb;
        ra *= pa[d];
        rb *= pb[d];
    }
    const std::size_t n = shape_numel(out);
    plan.index_a.resize(n);
    plan.index_b.resize(n);
    std::vector<std::size_t> idx(nd, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t oa = 0, ob = 0;
        for (std::size_t d = 0; d < nd; ++d) {
            oa += idx[d] * sa[d];
            ob += idx[d] * sb[d];
        }
        plan.index_a[i] = oa;
        plan.index_b[i] = ob;
        for (std::size_t d = nd; d-- > 0;) {
            if (++idx[d] < out[d]) {
                break;
            }
            idx[d] = 0;
        }
    }
    plan.out_shape = std::move(out);
    return plan;
}

template <class Fwd, class DA, class DB>
Tensor binary_op(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db) {
    auto plan = std::make_shared<BroadcastPlan>(plan_broadcast(op, a.shape(), b.shape()));
    const std::size_t n = shape_numel(plan->out_shape);
    std::vector<double> out(n);
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = fwd(av[plan->ia(i)], bv[plan->ib(i)]);
    }
    auto an = a.node();
    auto bn = b.node();
    return make_result(plan->out_shape, std::move(out), {a, b}, [plan, an, bn, da, db](Node& self) {
        const std::size_t n = self.value.size();
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t ia = plan->ia(i);
                an->grad[ia] += self.grad[i] * da(an->value[ia], bn->value[plan->ib(i)], self.value[i]);
            }
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t ib = plan->ib(i);
                bn->grad[ib] += self.grad[i] * db(an->value[plan->ia(i)], bn->value[ib], self.value[i]);
            }
        }
    });
}

template <class Fwd, class Deriv>
Tensor unary_op(const Tensor& a, Fwd fwd, Deriv deriv) {
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
        out[i] = fwd(av[i]);
    }
    auto an = a.node();
    return make_result(a.shape(), std::move(out), {a}, [an, deriv](Node& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < self.value.size(); ++i) {
            an->grad[i] += self.grad[i] * deriv(an->value[i], self.value[i]);
        }
    });
}

// c[n x m] += a[n x k] * b[k x m]
void gemm_nn(const double* a, const double* b, double* __restrict c, std::size_t n, std::size_t k, std::size_t m) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        double* __restrict c0 = c + i * m;
        double* __restrict c1 = c0 + m;
        double* __restrict c2 = c1 + m;
        double* __restrict c3 = c2 + m;
        const double* a0 = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double v0 = a0[p];
            const double v1 = a0[k + p];
            const double v2 = a0[2 * k + p];
            const double v3 = a0[3 * k + p];
            const double* __restrict brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                const double bv = brow[j];
                c0[j] += v0 * bv;
                c1[j] += v1 * bv;
                c2[j] += v2 * bv;
                c3[j] += v3 * bv;
            }
        }
    }
    for (; i < n; ++i) {
        double* __restrict crow = c + i * m;
        const double* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* __restrict brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                crow[j] += av * brow[j];
            }
        }
    }
}

// c[n x k] += g[n x m] * b[k x m]^T
void gemm_nt(const double* g, const double* b, double* __restrict c, std::size_t n, std::size_t k, std::size_t m) {
    std::vector<double> bt(m * k);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t j = 0; j < m; ++j) {
            bt[j * k + p] = b[p * m + j];
        }
    }
    gemm_nn(g, bt.data(), c, n, m, k);
}

// c[k x m] += a[n x k]^T * g[n x m]
void gemm_tn(const double* a, const double* g, double* __restrict c, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double* arow = a + i * k;
        const double* __restrict grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = arow[p];
            double* __restrict crow = c + p * m;
            for (std::size_t j = 0; j < m; ++j) {
                crow[j] += av * grow[j];
            }
        }
    }
}

Shape drop_axis(const Shape& shape, std::size_t axis, bool keepdim) {
    Shape out = shape;
    if (keepdim) {
        out[axis] = 1;
    } else {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
    }
    return out;
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool grad_enabled() { return g_grad_enabled; }

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size()) {
        throw ShapeError("constant: shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    return Tensor(std::move(node));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
    Tensor t = constant(std::move(shape), std::move(values));
    t.node_->requires_grad = true;
    return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = shape_numel(shape);
    Tensor t = constant(std::move(shape), std::vector<double>(n, 0.0));
    t.node_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

double Tensor::item() const {
    if (numel() != 1) {
        throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    }
    return node_->value[0];
}

Tensor Tensor::detach() const { return constant(shape(), node_->value); }

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ShapeError("backward: loss must be a scalar, got shape " +
                         (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
    }
    if (!loss.requires_grad()) {
        return;
    }
    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (Node* node : order) {
        if (node->backward_fn) {
            node->grad.assign(node->value.size(), 0.0);
        }
    }
    Node* root = loss.node().get();
    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) {
            (*it)->backward_fn(**it);
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() < 2 || b.ndim() < 2) {
        shape_fail("matmul", a.shape(), b.shape());
    }
    const std::size_t n = a.dim(a.ndim() - 2);
    const std::size_t k = a.dim(a.ndim() - 1);
    const std::size_t m = b.dim(b.ndim() - 1);
    if (b.dim(b.ndim() - 2) != k) {
        shape_fail("matmul", a.shape(), b.shape());
    }
    const bool shared_b = b.ndim() == 2;
    std::size_t batch = a.numel() / (n * k);
    if (!shared_b) {
        const Shape lead_a(a.shape().begin(), a.shape().end() - 2);
        const Shape lead_b(b.shape().begin(), b.shape().end() - 2);
        if (lead_a != lead_b) {
            shape_fail("matmul", a.shape(), b.shape());
        }
    }
    Shape out_shape(a.shape().begin(), a.shape().end() - 1);
    out_shape.push_back(m);
    std::vector<double> out(batch * n * m, 0.0);
    if (shared_b) {
        // fold the batch into rows
        gemm_nn(a.data().data(), b.data().data(), out.data(), batch * n, k, m);
    } else {
        for (std::size_t s = 0; s < batch; ++s) {
            gemm_nn(a.data().data() + s * n * k, b.data().data() + s * k * m, out.data() + s * n * m, n, k, m);
        }
    }
    auto an = a.node();
    auto bn = b.node();
    return make_result(std::move(out_shape), std::move(out), {a, b},
                       [an, bn, batch, n, k, m, shared_b](Node& self) {
                           const std::size_t rows = shared_b ? batch * n : n;
                           const std::size_t reps = shared_b ? 1 : batch;
                           if (an->requires_grad) {
                               an->ensure_grad();
                               for (std::size_t s = 0; s < reps; ++s) {
                                   gemm_nt(self.grad.data() + s * n * m,
                                           bn->value.data() + (shared_b ? 0 : s * k * m),
                                           an->grad.data() + s * n * k, rows, k, m);
                               }
                           }
                           if (bn->requires_grad) {
                               bn->ensure_grad();
                               for (std::size_t s = 0; s < reps; ++s) {
                                   gemm_tn(an->value.data() + s * n * k, self.grad.data() + s * n * m,
                                           bn->grad.data() + (shared_b ? 0 : s * k * m), rows, k, m);
                               }
                           }
                       });
}

Tensor transpose(const Tensor& a) {
    if (a.ndim() < 2) {
        shape_fail("transpose", a.shape(), "need at least 2 axes");
    }
    const std::size_t r = a.dim(a.ndim() - 2);
    const std::size_t c = a.dim(a.ndim() - 1);
    const std::size_t batch = a.numel() / (r * c);
    Shape out_shape = a.shape();
    std::swap(out_shape[out_shape.size() - 1], out_shape[out_shape.size() - 2]);
    std::vector<double> out(a.numel());
    const auto av = a.data();
    for (std::size_t s = 0; s < batch; ++s) {
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                out[s * r * c + j * r + i] = av[s * r * c + i * c + j];
            }
        }
    }
    auto an = a.node();
    return make_result(std::move(out_shape), std::move(out), {a}, [an, batch, r, c](Node& self) {
        an->ensure_grad();
        for (std::size_t s = 0; s < batch; ++s) {
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    an->grad[s * r * c + i * c + j] += self.grad[s * r * c + j * r + i];
                }
            }
        }
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        shape_fail("reshape", a.shape(), "cannot reshape to " + shape_str(shape));
    }
    auto an = a.node();
    return make_result(std::move(shape), a.node()->value, {a}, [an](Node& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            an->grad[i] += self.grad[i];
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op(
        "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op(
        "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_op(
        "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
        [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary_op(
        "div", a, b, [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
        [](double, double y, double out) { return -out / y; });
}

Tensor scale(const Tensor& a, double factor) {
    return unary_op(
        a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
    return unary_op(
        a, [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor relu(const Tensor& a) {
    return unary_op(
        a, [](double x) { return x <= 0.0 ? 0.0 : x; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
    return unary_op(
        a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& a) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt2pi = 0.39894228040143267794;
    return unary_op(
        a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
        [](double x, double) { return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt2pi * std::exp(-0.5 * x * x); });
}

Tensor softmax(const Tensor& a, int axis) {
    const std::size_t ax = resolve_axis("softmax", a.shape(), axis);
    const AxisView v = axis_view(a.shape(), ax);
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t in = 0; in < v.inner; ++in) {
            const std::size_t base = o * v.len * v.inner + in;
            double mx = -INFINITY;
            for (std::size_t l = 0; l < v.len; ++l) {
                mx = std::max(mx, av[base + l * v.inner]);
            }
            double total = 0.0;
            for (std::size_t l = 0; l < v.len; ++l) {
                const double e = std::exp(av[base + l * v.inner] - mx);
                out[base + l * v.inner] = e;
                total += e;
            }
            for (std::size_t l = 0; l < v.len; ++l) {
                out[base + l * v.inner] /= total;
            }
        }
    }
    auto an = a.node();
    return make_result(a.shape(), std::move(out), {a}, [an, v](Node& self) {
        an->ensure_grad();
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                const std::size_t base = o * v.len * v.inner + in;
                double dot = 0.0;
                for (std::size_t l = 0; l < v.len; ++l) {
                    const std::size_t i = base + l * v.inner;
                    dot += self.grad[i] * self.value[i];
                }
                for (std::size_t l = 0; l < v.len; ++l) {
                    const std::size_t i = base + l * v.inner;
                    an->grad[i] += self.value[i] * (self.grad[i] - dot);
                }
            }
        }
    });
}

Tensor masked_softmax(const Tensor& a, std::span<const std::uint8_t> allow) {
    if (a.ndim() < 1) {
        shape_fail("masked_softmax", a.shape(), "need at least 1 axis");
    }
    const std::size_t len = a.dim(a.ndim() - 1);
    const std::size_t rows = a.numel() / std::max<std::size_t>(len, 1);
    const std::size_t mask_period = allow.size();
    if (mask_period == 0 || a.numel() % mask_period != 0 || mask_period % std::max<std::size_t>(len, 1) != 0) {
        shape_fail("masked_softmax", a.shape(), "mask of " + std::to_string(allow.size()) + " entries does not tile");
    }
    auto mask = std::make_shared<std::vector<std::uint8_t>>(allow.begin(), allow.end());
    const auto av = a.data();
    std::vector<double> out(av.size(), 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t base = r * len;
        const std::size_t mbase = base % mask_period;
        double mx = -INFINITY;
        for (std::size_t l = 0; l < len; ++l) {
            if ((*mask)[mbase + l]) {
                mx = std::max(mx, av[base + l]);
            }
        }
        if (mx == -INFINITY) {
            continue;  // fully masked row stays zero
        }
        double total = 0.0;
        for (std::size_t l = 0; l < len; ++l) {
            if ((*mask)[mbase + l]) {
                const double e = std::exp(av[base + l] - mx);
                out[base + l] = e;
                total += e;
            }
        }
        for (std::size_t l = 0; l < len; ++l) {
            out[base + l] /= total;
        }
    }
    auto an = a.node();
    return make_result(a.shape(), std::move(out), {a}, [an, rows, len](Node& self) {
        an->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const std::size_t base = r * len;
            double dot = 0.0;
            for (std::size_t l = 0; l < len; ++l) {
                dot += self.grad[base + l] * self.value[base + l];
            }
            for (std::size_t l = 0; l < len; ++l) {
                an->grad[base + l] += self.value[base + l] * (self.grad[base + l] - dot);
            }
        }
    });
}

Tensor layer_norm(const Tensor& a, int axis, double eps) {
    const std::size_t ax = resolve_axis("layer_norm", a.shape(), axis);
    const AxisView v = axis_view(a.shape(), ax);
    const auto av = a.data();
    std::vector<double> out(av.size());
    auto inv_std = std::make_shared<std::vector<double>>(v.outer * v.inner);
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t in = 0; in < v.inner; ++in) {
            const std::size_t base = o * v.len * v.inner + in;
            double mu = 0.0;
            for (std::size_t l = 0; l < v.len; ++l) {
                mu += av[base + l * v.inner];
            }
            mu /= static_cast<double>(v.len);
            double var = 0.0;
            for (std::size_t l = 0; l < v.len; ++l) {
                const double d = av[base + l * v.inner] - mu;
                var += d * d;
            }
            var /= static_cast<double>(v.len);
            const double is = 1.0 / std::sqrt(var + eps);
            (*inv_std)[o * v.inner + in] = is;
            for (std::size_t l = 0; l < v.len; ++l) {
                out[base + l * v.inner] = (av[base + l * v.inner] - mu) * is;
            }
        }
    }
    auto an = a.node();
    return make_result(a.shape(), std::move(out), {a}, [an, v, inv_std](Node& self) {
        an->ensure_grad();
        const double n = static_cast<double>(v.len);
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                const std::size_t base = o * v.len * v.inner + in;
                double mean_g = 0.0;
                double mean_gy = 0.0;
                for (std::size_t l = 0; l < v.len; ++l) {
                    const std::size_t i = base + l * v.inner;
                    mean_g += self.grad[i];
                    mean_gy += self.grad[i] * self.value[i];
                }
                mean_g /= n;
                mean_gy /= n;
                const double is = (*inv_std)[o * v.inner + in];
                for (std::size_t l = 0; l < v.len; ++l) {
                    const std::size_t i = base + l * v.inner;
                    an->grad[i] += is * (self.grad[i] - mean_g - self.value[i] * mean_gy);
                }
            }
        }
    });
}

Tensor dropout(const Tensor& a, double p, std::uint64_t seed, bool training) {
    if (p < 0.0 || p >= 1.0) {
        throw std::invalid_argument("dropout: probability must be in [0, 1)");
    }
    if (!training || p == 0.0) {
        return a;
    }
    Rng rng(seed);
    auto keep = std::make_shared<std::vector<double>>(a.numel());
    const double kept_scale = 1.0 / (1.0 - p);
    for (double& k : *keep) {
        k = rng.uniform() >= p ? kept_scale : 0.0;
    }
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
        out[i] = av[i] * (*keep)[i];
    }
    auto an = a.node();
    return make_result(a.shape(), std::move(out), {a}, [an, keep](Node& self) {
        an->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            an->grad[i] += self.grad[i] * (*keep)[i];
        }
    });
}

Tensor concat(std::span<const Tensor> parts, int axis) {
    if (parts.empty()) {
        throw ShapeError("concat: no inputs");
    }
    const Shape& first = parts.front().shape();
    const std::size_t ax = resolve_axis("concat", first, axis);
    Shape out_shape = first;
    out_shape[ax] = 0;
    for (const auto& p : parts) {
        if (p.ndim() != first.size()) {
            shape_fail("concat", first, p.shape());
        }
        for (std::size_t d = 0; d < first.size(); ++d) {
            if (d != ax && p.dim(d) != first[d]) {
                shape_fail("concat", first, p.shape());
            }
        }
        out_shape[ax] += p.dim(ax);
    }
    const AxisView ov = axis_view(out_shape, ax);
    std::vector<double> out(shape_numel(out_shape));
    std::vector<std::size_t> offsets;
    std::size_t offset = 0;
    for (const auto& p : parts) {
        offsets.push_back(offset);
        const std::size_t block = p.dim(ax) * ov.inner;
        const auto pv = p.data();
        for (std::size_t o = 0; o < ov.outer; ++o) {
            std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * block), block,
                        out.begin() + static_cast<std::ptrdiff_t>(o * ov.len * ov.inner + offset * ov.inner));
        }
        offset += p.dim(ax);
    }
    auto node = std::make_shared<Node>();
    node->shape = out_shape;
    node->value = std::move(out);
    for (const auto& p : parts) {
        node->requires_grad = node->requires_grad || (g_grad_enabled && p.requires_grad());
    }
    if (node->requires_grad) {
        for (const auto& p : parts) {
            node->parents.push_back(p.node());
        }
        node->backward_fn = [ov, offsets](Node& self) {
            for (std::size_t k = 0; k < self.parents.size(); ++k) {
                Node& parent = *self.parents[k];
                if (!parent.requires_grad) {
                    continue;
                }
                parent.ensure_grad();
                const std::size_t plen = parent.value.size() / (ov.outer * ov.inner);
                const std::size_t block = plen * ov.inner;
                for (std::size_t o = 0; o < ov.outer; ++o) {
                    const double* src = self.grad.data() + o * ov.len * ov.inner + offsets[k] * ov.inner;
                    double* dst = parent.grad.data() + o * block;
                    for (std::size_t i = 0; i < block; ++i) {
                        dst[i] += src[i];
                    }
                }
            }
        };
    }
    return Tensor(std::move(node));
}

Tensor slice(const Tensor& a, int axis, std::size_t begin, std::size_t end) {
    const std::size_t ax = resolve_axis("slice", a.shape(), axis);
    if (begin > end || end > a.dim(ax)) {
        shape_fail("slice", a.shape(),
                   "range [" + std::to_string(begin) + "," + std::to_string(end) + ") out of bounds");
    }
    const AxisView v = axis_view(a.shape(), ax);
    Shape out_shape = a.shape();
    out_shape[ax] = end - begin;
    const std::size_t block = (end - begin) * v.inner;
    std::vector<double> out(v.outer * block);
    const auto av = a.data();
    for (std::size_t o = 0; o < v.outer; ++o) {
        std::copy_n(av.begin() + static_cast<std::ptrdiff_t>(o * v.len * v.inner + begin * v.inner), block,
                    out.begin() + static_cast<std::ptrdiff_t>(o * block));
    }
    auto an = a.node();
    return make_result(std::move(out_shape), std::move(out), {a}, [an, v, begin, block](Node& self) {
        an->ensure_grad();
        for (std::size_t o = 0; o < v.outer; ++o) {
            double* dst = an->grad.data() + o * v.len * v.inner + begin * v.inner;
            const double* src = self.grad.data() + o * block;
            for (std::size_t i = 0; i < block; ++i) {
                dst[i] += src[i];
            }
        }
    });
}

Tensor sum(const Tensor& a, int axis, bool keepdim) {
    const std::size_t ax = resolve_axis("sum", a.shape(), axis);
    const AxisView v = axis_view(a.shape(), ax);
    const auto av = a.data();
    std::vector<double> out(v.outer * v.inner, 0.0);
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t l = 0; l < v.len; ++l) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                out[o * v.inner + in] += av[(o * v.len + l) * v.inner + in];
            }
        }
    }
    auto an = a.node();
    return make_result(drop_axis(a.shape(), ax, keepdim), std::move(out), {a}, [an, v](Node& self) {
        an->ensure_grad();
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t l = 0; l < v.len; ++l) {
                for (std::size_t in = 0; in < v.inner; ++in) {
                    an->grad[(o * v.len + l) * v.inner + in] += self.grad[o * v.inner + in];
                }
            }
        }
    });
}

Tensor mean(const Tensor& a, int axis, bool keepdim) {
    const std::size_t ax = resolve_axis("mean", a.shape(), axis);
    if (a.dim(ax) == 0) {
        shape_fail("mean", a.shape(), "empty axis");
    }
    return scale(sum(a, axis, keepdim), 1.0 / static_cast<double>(a.dim(ax)));
}

Tensor max(const Tensor& a, int axis, bool keepdim) {
    const std::size_t ax = resolve_axis("max", a.shape(), axis);
    const AxisView v = axis_view(a.shape(), ax);
    if (v.len == 0) {
        shape_fail("max", a.shape(), "empty axis");
    }
    const auto av = a.data();
    std::vector<double> out(v.outer * v.inner);
    auto arg = std::make_shared<std::vector<std::size_t>>(v.outer * v.inner);
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t in = 0; in < v.inner; ++in) {
            std::size_t best = 0;
            double best_v = av[o * v.len * v.inner + in];
            for (std::size_t l = 1; l < v.len; ++l) {
                const double x = av[(o * v.len + l) * v.inner + in];
                if (x > best_v) {
                    best_v = x;
                    best = l;
                }
            }
            out[o * v.inner + in] = best_v;
            (*arg)[o * v.inner + in] = best;
        }
    }
    auto an = a.node();
    return make_result(drop_axis(a.shape(), ax, keepdim), std::move(out), {a}, [an, v, arg](Node& self) {
        an->ensure_grad();
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t in = 0; in < v.inner; ++in) {
                const std::size_t l = (*arg)[o * v.inner + in];
                an->grad[(o * v.len + l) * v.inner + in] += self.grad[o * v.inner + in];
            }
        }
    });
}

Tensor sum_all(const Tensor& a) {
    double total = 0.0;
    for (double x : a.data()) {
        total += x;
    }
    auto an = a.node();
    return make_result({}, {total}, {a}, [an](Node& self) {
        an->ensure_grad();
        for (double& g : an->grad) {
            g += self.grad[0];
        }
    });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
    if (table.ndim() != 2) {
        shape_fail("embedding_lookup", table.shape(), "table must be 2-D");
    }
    const std::size_t vocab = table.dim(0);
    const std::size_t width = table.dim(1);
    auto rows = std::make_shared<std::vector<int>>(ids.begin(), ids.end());
    std::vector<double> out(rows->size() * width);
    const auto tv = table.data();
    for (std::size_t r = 0; r < rows->size(); ++r) {
        const int id = (*rows)[r];
        if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
            shape_fail("embedding_lookup", table.shape(), "id " + std::to_string(id) + " out of range");
        }
        std::copy_n(tv.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(id) * width), width,
                    out.begin() + static_cast<std::ptrdiff_t>(r * width));
    }
    auto tn = table.node();
    return make_result({rows->size(), width}, std::move(out), {table}, [tn, rows, width](Node& self) {
        tn->ensure_grad();
        for (std::size_t r = 0; r < rows->size(); ++r) {
            double* dst = tn->grad.data() + static_cast<std::size_t>((*rows)[r]) * width;
            const double* src = self.grad.data() + r * width;
            for (std::size_t j = 0; j < width; ++j) {
                dst[j] += src[j];
            }
        }
    });
}

}  // namespace ldr::ad
