// SPDX-License-Identifier: Apache-2.0
//
// passim — pinching-antenna system simulation and channel estimation toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PASSIM_DIFF_TENSOR_HPP
#define PASSIM_DIFF_TENSOR_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <unordered_set>
#include <vector>

#include "../common.hpp"

// Reverse-mode automatic differentiation over dense double-precision arrays.
// Define-by-run: every operation records its parents and a backward closure;
// backward() replays the tape in reverse topological order. Matrix products
// are delegated to Eigen; everything else is plain loops.

namespace passim::diff {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape &s) {
    std::size_t n = 1;
    for (std::size_t d : s)
        n *= d;
    return n;
}

inline std::string shape_str(const Shape &s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i)
        out += (i ? "," : "") + std::to_string(s[i]);
    return out + ")";
}

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad; // allocated on demand during backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node &)> backward_fn; // reads this node's grad, accumulates into parents
    const char *op = "leaf";

    std::vector<double> &ensure_grad() {
        if (grad.empty())
            grad.assign(value.size(), 0.0);
        return grad;
    }
};

class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false) {
        if (shape_numel(shape) != values.size())
            throw ShapeError("Tensor: shape " + shape_str(shape) + " needs " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(values.size()));
        node_ = std::make_shared<Node>();
        node_->shape = std::move(shape);
        node_->value = std::move(values);
        node_->requires_grad = requires_grad;
    }

    static Tensor zeros(const Shape &shape, bool requires_grad = false) {
        return Tensor(shape, std::vector<double>(shape_numel(shape), 0.0), requires_grad);
    }

    static Tensor scalar(double v) { return Tensor(Shape{1}, {v}); }

    bool defined() const { return node_ != nullptr; }
    const Shape &shape() const { return node_->shape; }
    std::size_t ndim() const { return node_->shape.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t numel() const { return node_->value.size(); }
    const std::vector<double> &value() const { return node_->value; }
    std::vector<double> &mutable_value() { return node_->value; }
    const std::vector<double> &grad() const { return node_->grad; }
    bool has_grad() const { return !node_->grad.empty(); }
    bool requires_grad() const { return node_->requires_grad; }

    double item() const {
        if (numel() != 1)
            throw ShapeError("Tensor::item: tensor has shape " + shape_str(shape()) + ", expected one element");
        return node_->value[0];
    }

    const std::shared_ptr<Node> &node() const { return node_; }

  private:
    std::shared_ptr<Node> node_;
};

namespace detail {

inline std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value,
                                       std::vector<std::shared_ptr<Node>> parents, const char *op) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->parents = std::move(parents);
    n->op = op;
    for (const auto &p : n->parents)
        n->requires_grad = n->requires_grad || p->requires_grad;
    return n;
}

inline void require_same_shape(const char *op, const Tensor &a, const Tensor &b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " do not match");
}

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

} // namespace detail

// --- elementwise arithmetic --------------------------------------------------

inline Tensor add(const Tensor &a, const Tensor &b) {
    detail::require_same_shape("add", a, b);
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = a.value()[i] + b.value()[i];
    auto n = detail::make_node(a.shape(), std::move(v), {a.node(), b.node()}, "add");
    n->backward_fn = [](Node &out) {
        for (int k = 0; k < 2; ++k)
            if (out.parents[static_cast<std::size_t>(k)]->requires_grad) {
                auto &g = out.parents[static_cast<std::size_t>(k)]->ensure_grad();
                for (std::size_t i = 0; i < g.size(); ++i)
                    g[i] += out.grad[i];
            }
    };
    return Tensor(n);
}

inline Tensor sub(const Tensor &a, const Tensor &b) {
    detail::require_same_shape("sub", a, b);
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = a.value()[i] - b.value()[i];
    auto n = detail::make_node(a.shape(), std::move(v), {a.node(), b.node()}, "sub");
    n->backward_fn = [](Node &out) {
        if (out.parents[0]->requires_grad) {
            auto &g = out.parents[0]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += out.grad[i];
        }
        if (out.parents[1]->requires_grad) {
            auto &g = out.parents[1]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] -= out.grad[i];
        }
    };
    return Tensor(n);
}

inline Tensor mul(const Tensor &a, const Tensor &b) {
    detail::require_same_shape("multiply", a, b);
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = a.value()[i] * b.value()[i];
    auto n = detail::make_node(a.shape(), std::move(v), {a.node(), b.node()}, "multiply");
    n->backward_fn = [](Node &out) {
        auto &pa = *out.parents[0];
        auto &pb = *out.parents[1];
        if (pa.requires_grad) {
            auto &g = pa.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += out.grad[i] * pb.value[i];
        }
        if (pb.requires_grad) {
            auto &g = pb.ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i)
                g[i] += out.grad[i] * pa.value[i];
        }
    };
    return Tensor(n);
}

inline Tensor mul_scalar(const Tensor &a, double c) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = a.value()[i] * c;
    auto n = detail::make_node(a.shape(), std::move(v), {a.node()}, "mul_scalar");
    n->backward_fn = [c](Node &out) {
        if (!out.parents[0]->requires_grad)
            return;
        auto &g = out.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += out.grad[i] * c;
    };
    return Tensor(n);
}

inline Tensor add_scalar(const Tensor &a, double c) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = a.value()[i] + c;
    auto n = detail::make_node(a.shape(), std::move(v), {a.node()}, "add_scalar");
    n->backward_fn = [](Node &out) {
        if (!out.parents[0]->requires_grad)
            return;
        auto &g = out.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += out.grad[i];
    };
    return Tensor(n);
}

inline Tensor neg(const Tensor &a) { return mul_scalar(a, -1.0); }

// --- unary maps --------------------------------------------------------------

namespace detail {

template <typename F, typename DF>
Tensor unary_op(const Tensor &a, const char *op, F f, DF df) {
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = f(a.value()[i]);
    auto n = make_node(a.shape(), std::move(v), {a.node()}, op);
    n->backward_fn = [df](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += out.grad[i] * df(p.value[i], out.value[i]);
    };
    return Tensor(n);
}

} // namespace detail

inline Tensor sin(const Tensor &a) {
    return detail::unary_op(
        a, "sin", [](double x) { return std::sin(x); },
        [](double x, double) { return std::cos(x); });
}

inline Tensor cos(const Tensor &a) {
    return detail::unary_op(
        a, "cos", [](double x) { return std::cos(x); },
        [](double x, double) { return -std::sin(x); });
}

inline Tensor exp(const Tensor &a) {
    return detail::unary_op(
        a, "exponential", [](double x) { return std::exp(x); },
        [](double, double y) { return y; });
}

inline Tensor sigmoid(const Tensor &a) {
    return detail::unary_op(
        a, "sigmoid",
        [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
        [](double, double y) { return y * (1.0 - y); });
}

inline Tensor relu(const Tensor &a) {
    return detail::unary_op(
        a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor gelu(const Tensor &a) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    return detail::unary_op(
        a, "gelu", [=](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
        [=](double x, double) {
            return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt2pi * std::exp(-0.5 * x * x);
        });
}

// --- matrix product ----------------------------------------------------------
//
// Supported operand ranks: (m,k)x(k,n); batched (b,m,k)x(b,k,n); and the
// broadcast form (b,m,k)x(k,n) used by token-wise linear layers.

inline Tensor matmul(const Tensor &a, const Tensor &b) {
    const Shape &sa = a.shape(), &sb = b.shape();
    const bool a3 = sa.size() == 3, b3 = sb.size() == 3;
    if (!((sa.size() == 2 && sb.size() == 2) || (a3 && sb.size() == 2) || (a3 && b3)))
        throw ShapeError("matmul: unsupported ranks for shapes " + shape_str(sa) + " and " + shape_str(sb));
    const std::size_t batch = a3 ? sa[0] : 1;
    const std::size_t m = a3 ? sa[1] : sa[0];
    const std::size_t k = a3 ? sa[2] : sa[1];
    const std::size_t kb = b3 ? sb[1] : sb[0];
    const std::size_t n = b3 ? sb[2] : sb[1];
    if (k != kb || (b3 && sb[0] != batch))
        throw ShapeError("matmul: shapes " + shape_str(sa) + " and " + shape_str(sb) + " are incompatible");

    Shape out_shape = a3 ? Shape{batch, m, n} : Shape{m, n};
    std::vector<double> v(shape_numel(out_shape));
    using detail::CMapMat;
    using detail::MapMat;
    for (std::size_t i = 0; i < batch; ++i) {
        CMapMat ma(a.value().data() + i * m * k, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
        CMapMat mb(b.value().data() + (b3 ? i * k * n : 0), static_cast<Eigen::Index>(k),
                   static_cast<Eigen::Index>(n));
        MapMat mo(v.data() + i * m * n, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        mo.noalias() = ma * mb;
    }

    auto node = detail::make_node(std::move(out_shape), std::move(v), {a.node(), b.node()}, "matmul");
    node->backward_fn = [batch, m, k, n, b3](Node &out) {
        using detail::CMapMat;
        using detail::MapMat;
        auto &pa = *out.parents[0];
        auto &pb = *out.parents[1];
        if (pa.requires_grad) {
            auto &ga = pa.ensure_grad();
            for (std::size_t i = 0; i < batch; ++i) {
                CMapMat go(out.grad.data() + i * m * n, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
                CMapMat mb(pb.value.data() + (b3 ? i * k * n : 0), static_cast<Eigen::Index>(k),
                           static_cast<Eigen::Index>(n));
                MapMat mga(ga.data() + i * m * k, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
                mga.noalias() += go * mb.transpose();
            }
        }
        if (pb.requires_grad) {
            auto &gb = pb.ensure_grad();
            for (std::size_t i = 0; i < batch; ++i) {
                CMapMat go(out.grad.data() + i * m * n, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
                CMapMat ma(pa.value.data() + i * m * k, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
                MapMat mgb(gb.data() + (b3 ? i * k * n : 0), static_cast<Eigen::Index>(k),
                           static_cast<Eigen::Index>(n));
                mgb.noalias() += ma.transpose() * go;
            }
        }
    };
    return Tensor(node);
}

/// Swap the last two axes (rank 2 or 3).
inline Tensor transpose(const Tensor &a) {
    const Shape &s = a.shape();
    if (s.size() != 2 && s.size() != 3)
        throw ShapeError("transpose: rank must be 2 or 3, got shape " + shape_str(s));
    const std::size_t batch = s.size() == 3 ? s[0] : 1;
    const std::size_t r = s[s.size() - 2], c = s[s.size() - 1];
    Shape out_shape = s;
    std::swap(out_shape[out_shape.size() - 2], out_shape[out_shape.size() - 1]);
    std::vector<double> v(a.numel());
    for (std::size_t i = 0; i < batch; ++i) {
        const double *src = a.value().data() + i * r * c;
        double *dst = v.data() + i * r * c;
        for (std::size_t p = 0; p < r; ++p)
            for (std::size_t q = 0; q < c; ++q)
                dst[q * r + p] = src[p * c + q];
    }
    auto node = detail::make_node(std::move(out_shape), std::move(v), {a.node()}, "transpose");
    node->backward_fn = [batch, r, c](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        for (std::size_t i = 0; i < batch; ++i) {
            const double *src = out.grad.data() + i * r * c;
            double *dst = g.data() + i * r * c;
            for (std::size_t q = 0; q < c; ++q)
                for (std::size_t pp = 0; pp < r; ++pp)
                    dst[pp * c + q] += src[q * r + pp];
        }
    };
    return Tensor(node);
}

// --- shape manipulation ------------------------------------------------------

inline Tensor reshape(const Tensor &a, Shape new_shape) {
    if (shape_numel(new_shape) != a.numel())
        throw ShapeError("reshape: cannot view shape " + shape_str(a.shape()) + " as " + shape_str(new_shape));
    auto n = detail::make_node(std::move(new_shape), a.value(), {a.node()}, "reshape");
    n->backward_fn = [](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] += out.grad[i];
    };
    return Tensor(n);
}

inline Tensor concat(const std::vector<Tensor> &parts, std::size_t axis) {
    if (parts.empty())
        throw ShapeError("concat: no inputs");
    const Shape &s0 = parts[0].shape();
    if (axis >= s0.size())
        throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for shape " + shape_str(s0));
    Shape out_shape = s0;
    out_shape[axis] = 0;
    for (const auto &p : parts) {
        const Shape &s = p.shape();
        if (s.size() != s0.size())
            throw ShapeError("concat: ranks differ, " + shape_str(s0) + " vs " + shape_str(s));
        for (std::size_t i = 0; i < s.size(); ++i)
            if (i != axis && s[i] != s0[i])
                throw ShapeError("concat: shapes " + shape_str(s0) + " and " + shape_str(s) +
                                 " differ off the concat axis");
        out_shape[axis] += s[axis];
    }

    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i)
        outer *= s0[i];
    for (std::size_t i = axis + 1; i < s0.size(); ++i)
        inner *= s0[i];

    std::vector<double> v(shape_numel(out_shape));
    const std::size_t out_stride = out_shape[axis] * inner;
    std::size_t offset = 0;
    std::vector<std::shared_ptr<Node>> parent_nodes;
    for (const auto &p : parts) {
        const std::size_t len = p.shape()[axis] * inner;
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(p.value().data() + o * len, len, v.data() + o * out_stride + offset);
        offset += len;
        parent_nodes.push_back(p.node());
    }

    auto node = detail::make_node(std::move(out_shape), std::move(v), std::move(parent_nodes), "concat");
    node->backward_fn = [outer, inner, out_stride, axis](Node &out) {
        std::size_t off = 0;
        for (auto &pp : out.parents) {
            const std::size_t len = pp->shape[axis] * inner;
            if (pp->requires_grad) {
                auto &g = pp->ensure_grad();
                for (std::size_t o = 0; o < outer; ++o) {
                    const double *src = out.grad.data() + o * out_stride + off;
                    double *dst = g.data() + o * len;
                    for (std::size_t i = 0; i < len; ++i)
                        dst[i] += src[i];
                }
            }
            off += len;
        }
    };
    return Tensor(node);
}

inline Tensor slice(const Tensor &a, std::size_t axis, std::size_t start, std::size_t len) {
    const Shape &s = a.shape();
    if (axis >= s.size())
        throw ShapeError("slice: axis " + std::to_string(axis) + " out of range for shape " + shape_str(s));
    if (start + len > s[axis])
        throw ShapeError("slice: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
                         ") exceeds axis length " + std::to_string(s[axis]) + " in shape " + shape_str(s));
    Shape out_shape = s;
    out_shape[axis] = len;

    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i)
        outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i)
        inner *= s[i];
    const std::size_t in_stride = s[axis] * inner;
    const std::size_t out_stride = len * inner;

    std::vector<double> v(shape_numel(out_shape));
    for (std::size_t o = 0; o < outer; ++o)
        std::copy_n(a.value().data() + o * in_stride + start * inner, out_stride, v.data() + o * out_stride);

    auto node = detail::make_node(std::move(out_shape), std::move(v), {a.node()}, "slice");
    node->backward_fn = [outer, inner, in_stride, out_stride, start](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        for (std::size_t o = 0; o < outer; ++o) {
            const double *src = out.grad.data() + o * out_stride;
            double *dst = g.data() + o * in_stride + start * inner;
            for (std::size_t i = 0; i < out_stride; ++i)
                dst[i] += src[i];
        }
    };
    return Tensor(node);
}

/// NumPy-style broadcast: align trailing axes; size-1 axes repeat.
inline Tensor broadcast_to(const Tensor &a, const Shape &target) {
    const Shape &s = a.shape();
    if (target.size() < s.size())
        throw ShapeError("broadcast: cannot broadcast shape " + shape_str(s) + " to lower-rank " +
                         shape_str(target));
    const std::size_t pad = target.size() - s.size();
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] != 1 && s[i] != target[i + pad])
            throw ShapeError("broadcast: shape " + shape_str(s) + " is incompatible with " + shape_str(target));

    // Source strides laid over the target shape (0 where broadcast).
    std::vector<std::size_t> src_stride(target.size(), 0);
    {
        std::size_t stride = 1;
        for (std::size_t i = s.size(); i-- > 0;) {
            src_stride[i + pad] = (s[i] == 1 && target[i + pad] != 1) ? 0 : stride;
            stride *= s[i];
        }
    }

    const std::size_t out_n = shape_numel(target);
    std::vector<double> v(out_n);
    std::vector<std::size_t> idx(target.size(), 0);
    std::size_t src_pos = 0;
    for (std::size_t o = 0; o < out_n; ++o) {
        v[o] = a.value()[src_pos];
        for (std::size_t ax = target.size(); ax-- > 0;) {
            ++idx[ax];
            src_pos += src_stride[ax];
            if (idx[ax] < target[ax])
                break;
            src_pos -= src_stride[ax] * target[ax];
            idx[ax] = 0;
        }
    }

    auto node = detail::make_node(target, std::move(v), {a.node()}, "broadcast");
    node->backward_fn = [src_stride, target](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        std::vector<std::size_t> idx(target.size(), 0);
        std::size_t src_pos = 0;
        for (std::size_t o = 0; o < out.grad.size(); ++o) {
            g[src_pos] += out.grad[o];
            for (std::size_t ax = target.size(); ax-- > 0;) {
                ++idx[ax];
                src_pos += src_stride[ax];
                if (idx[ax] < target[ax])
                    break;
                src_pos -= src_stride[ax] * target[ax];
                idx[ax] = 0;
            }
        }
    };
    return Tensor(node);
}

// --- reductions --------------------------------------------------------------

namespace detail {

inline Tensor reduce_axis(const Tensor &a, std::size_t axis, bool mean, const char *op) {
    const Shape &s = a.shape();
    if (axis >= s.size())
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s));
    Shape out_shape;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (i != axis)
            out_shape.push_back(s[i]);
    if (out_shape.empty())
        out_shape.push_back(1);

    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i)
        outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i)
        inner *= s[i];
    const std::size_t len = s[axis];
    const double scale = mean ? 1.0 / static_cast<double>(len) : 1.0;

    std::vector<double> v(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t l = 0; l < len; ++l) {
            const double *src = a.value().data() + (o * len + l) * inner;
            double *dst = v.data() + o * inner;
            for (std::size_t i = 0; i < inner; ++i)
                dst[i] += src[i];
        }
    if (mean)
        for (auto &x : v)
            x *= scale;

    auto node = make_node(std::move(out_shape), std::move(v), {a.node()}, op);
    node->backward_fn = [outer, inner, len, scale](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t l = 0; l < len; ++l) {
                double *dst = g.data() + (o * len + l) * inner;
                const double *src = out.grad.data() + o * inner;
                for (std::size_t i = 0; i < inner; ++i)
                    dst[i] += src[i] * scale;
            }
    };
    return Tensor(node);
}

} // namespace detail

inline Tensor sum_axis(const Tensor &a, std::size_t axis) { return detail::reduce_axis(a, axis, false, "sum"); }
inline Tensor mean_axis(const Tensor &a, std::size_t axis) { return detail::reduce_axis(a, axis, true, "mean"); }

inline Tensor sum_all(const Tensor &a) {
    double acc = 0.0;
    for (double x : a.value())
        acc += x;
    auto node = detail::make_node(Shape{1}, {acc}, {a.node()}, "sum_all");
    node->backward_fn = [](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        for (auto &x : g)
            x += out.grad[0];
    };
    return Tensor(node);
}

inline Tensor mean_all(const Tensor &a) { return mul_scalar(sum_all(a), 1.0 / static_cast<double>(a.numel())); }

// --- normalized maps ---------------------------------------------------------

/// Numerically stable softmax over the last axis; rows sum to one.
inline Tensor softmax(const Tensor &a) {
    const Shape &s = a.shape();
    if (s.empty())
        throw ShapeError("softmax: scalar input");
    const std::size_t w = s.back();
    const std::size_t rows = a.numel() / w;
    std::vector<double> v(a.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double *x = a.value().data() + r * w;
        double *y = v.data() + r * w;
        double mx = x[0];
        for (std::size_t i = 1; i < w; ++i)
            mx = std::max(mx, x[i]);
        double z = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
            y[i] = std::exp(x[i] - mx);
            z += y[i];
        }
        for (std::size_t i = 0; i < w; ++i)
            y[i] /= z;
    }
    auto node = detail::make_node(s, std::move(v), {a.node()}, "softmax");
    node->backward_fn = [w, rows](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double *y = out.value.data() + r * w;
            const double *go = out.grad.data() + r * w;
            double dot = 0.0;
            for (std::size_t i = 0; i < w; ++i)
                dot += go[i] * y[i];
            double *dst = g.data() + r * w;
            for (std::size_t i = 0; i < w; ++i)
                dst[i] += y[i] * (go[i] - dot);
        }
    };
    return Tensor(node);
}

/// Layer normalization over the last axis (no affine part): per-row zero mean
/// and unit variance up to eps.
inline Tensor layernorm(const Tensor &a, double eps = 1e-5) {
    const Shape &s = a.shape();
    if (s.empty())
        throw ShapeError("layernorm: scalar input");
    const std::size_t w = s.back();
    const std::size_t rows = a.numel() / w;
    std::vector<double> v(a.numel());
    std::vector<double> inv_std(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double *x = a.value().data() + r * w;
        double mu = 0.0;
        for (std::size_t i = 0; i < w; ++i)
            mu += x[i];
        mu /= static_cast<double>(w);
        double var = 0.0;
        for (std::size_t i = 0; i < w; ++i)
            var += (x[i] - mu) * (x[i] - mu);
        var /= static_cast<double>(w);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        double *y = v.data() + r * w;
        for (std::size_t i = 0; i < w; ++i)
            y[i] = (x[i] - mu) * is;
    }
    auto node = detail::make_node(s, std::move(v), {a.node()}, "layernorm");
    node->backward_fn = [w, rows, inv_std = std::move(inv_std)](Node &out) {
        auto &p = *out.parents[0];
        if (!p.requires_grad)
            return;
        auto &g = p.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double *y = out.value.data() + r * w;
            const double *go = out.grad.data() + r * w;
            double mean_g = 0.0, mean_gy = 0.0;
            for (std::size_t i = 0; i < w; ++i) {
                mean_g += go[i];
                mean_gy += go[i] * y[i];
            }
            mean_g /= static_cast<double>(w);
            mean_gy /= static_cast<double>(w);
            double *dst = g.data() + r * w;
            for (std::size_t i = 0; i < w; ++i)
                dst[i] += inv_std[r] * (go[i] - mean_g - y[i] * mean_gy);
        }
    };
    return Tensor(node);
}

// --- composite helpers -------------------------------------------------------

/// Token-wise affine map: matmul(x, W) + b broadcast over leading axes.
inline Tensor linear(const Tensor &x, const Tensor &w, const Tensor &b) {
    Tensor y = matmul(x, w);
    return add(y, broadcast_to(b, y.shape()));
}

/// Elementwise |x| composed from relu(x) + relu(-x); subgradient 0 at ties.
inline Tensor abs_val(const Tensor &x) { return add(relu(x), relu(neg(x))); }

// --- backward ----------------------------------------------------------------

/// Reverse-mode sweep from a scalar loss. Populates grad on every tensor that
/// requires grad and is reachable from the loss; others are left untouched.
inline void backward(const Tensor &loss) {
    if (loss.numel() != 1)
        throw ShapeError("backward: loss must be scalar, got shape " + shape_str(loss.shape()));
    if (!loss.node()->requires_grad)
        return;

    // Iterative post-order DFS over grad-requiring parents.
    std::vector<Node *> order;
    std::unordered_set<Node *> visited;
    std::vector<std::pair<Node *, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto &[node, next] = stack.back();
        if (next < node->parents.size()) {
            Node *parent = node->parents[next].get();
            ++next;
            if (parent->requires_grad && !visited.count(parent)) {
                visited.insert(parent);
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss.node()->ensure_grad();
    loss.node()->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node *node = *it;
        if (node->backward_fn && !node->grad.empty())
            node->backward_fn(*node);
    }
}

} // namespace passim::diff

#endif // PASSIM_DIFF_TENSOR_HPP
