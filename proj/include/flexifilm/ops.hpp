#ifndef FLEXIFILM_OPS_HPP
#define FLEXIFILM_OPS_HPP

#include <cblas.h>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "flexifilm/tensor.hpp"

// Differentiable tensor operations. Every op checks extents and refuses to
// broadcast; the only broadcasting ops are the scalar ones (scale,
// add_scalar), add_rowvec (bias over the last axis) and matmul with a rank-2
// right operand (shared weights).

namespace flexifilm {

namespace detail {

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
                 const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans, m, n, k,
                alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
                 const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans, m, n, k,
                alpha, a, lda, b, ldb, beta, c, ldc);
}

template <class T>
using NodeOf = typename BasicTensor<T>::NodeType;

template <class T>
void accumulate(NodeOf<T>& target, std::span<const T> g) {
    T* dst = target.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

inline std::size_t product(const Shape& s, std::size_t begin, std::size_t end) {
    std::size_t p = 1;
    for (std::size_t i = begin; i < end; ++i) p *= s[i];
    return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise

template <class T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same_shape(a, b, "add");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.raw()[i] + b.raw()[i];
    auto an = a.node_ptr(), bn = b.node_ptr();
    return detail::make_result<T>(a.shape(), std::move(out), {a, b}, [an, bn](detail::NodeOf<T>& self) {
        if (an->requires_grad) detail::accumulate<T>(*an, self.grad);
        if (bn->requires_grad) detail::accumulate<T>(*bn, self.grad);
    });
}

template <class T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same_shape(a, b, "sub");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.raw()[i] - b.raw()[i];
    auto an = a.node_ptr(), bn = b.node_ptr();
    return detail::make_result<T>(a.shape(), std::move(out), {a, b}, [an, bn](detail::NodeOf<T>& self) {
        if (an->requires_grad) detail::accumulate<T>(*an, self.grad);
        if (bn->requires_grad) {
            T* g = bn->grad_buffer();
            for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

template <class T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same_shape(a, b, "mul");
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.raw()[i] * b.raw()[i];
    auto an = a.node_ptr(), bn = b.node_ptr();
    return detail::make_result<T>(a.shape(), std::move(out), {a, b}, [an, bn](detail::NodeOf<T>& self) {
        const std::size_t n = self.grad.size();
        if (an->requires_grad) {
            T* g = an->grad_buffer();
            for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i] * bn->data[i];
        }
        if (bn->requires_grad) {
            T* g = bn->grad_buffer();
            for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[i] * an->data[i];
        }
    });
}

template <class T>
BasicTensor<T> scale(const BasicTensor<T>& a, T s) {
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.raw()[i] * s;
    auto an = a.node_ptr();
    return detail::make_result<T>(a.shape(), std::move(out), {a}, [an, s](detail::NodeOf<T>& self) {
        T* g = an->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * s;
    });
}

template <class T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, T s) {
    std::vector<T> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.raw()[i] + s;
    auto an = a.node_ptr();
    return detail::make_result<T>(a.shape(), std::move(out), {a},
                                  [an](detail::NodeOf<T>& self) { detail::accumulate<T>(*an, self.grad); });
}

// x[..., n] + bias[n]
template <class T>
BasicTensor<T> add_rowvec(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
    if (bias.rank() != 1 || x.rank() == 0 || x.shape().back() != bias.extent(0)) {
        throw ShapeError("add_rowvec: bias " + to_string(bias.shape()) + " does not match last axis of " +
                         to_string(x.shape()));
    }
    const std::size_t n = bias.extent(0);
    const std::size_t rows = x.numel() / n;
    std::vector<T> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) out[r * n + j] = x.raw()[r * n + j] + bias.raw()[j];
    auto xn = x.node_ptr(), bn = bias.node_ptr();
    return detail::make_result<T>(x.shape(), std::move(out), {x, bias}, [xn, bn, rows, n](detail::NodeOf<T>& self) {
        if (xn->requires_grad) detail::accumulate<T>(*xn, self.grad);
        if (bn->requires_grad) {
            T* g = bn->grad_buffer();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[r * n + j];
        }
    });
}

// tanh-approximated GELU
template <class T>
BasicTensor<T> gelu(const BasicTensor<T>& x) {
    constexpr T k = T(0.7978845608028654);  // sqrt(2/pi)
    constexpr T c = T(0.044715);
    std::vector<T> out(x.numel());
    // tanh through exp: libm's tanhf dominates the profile otherwise
    auto th = std::make_shared<std::vector<T>>(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const T v = x.raw()[i];
        const T t = T(1) - T(2) / (std::exp(T(2) * k * (v + c * v * v * v)) + T(1));
        (*th)[i] = t;
        out[i] = T(0.5) * v * (T(1) + t);
    }
    auto xn = x.node_ptr();
    return detail::make_result<T>(x.shape(), std::move(out), {x}, [xn, th](detail::NodeOf<T>& self) {
        T* g = xn->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const T v = xn->data[i];
            const T t = (*th)[i];
            const T du = k * (T(1) + T(3) * c * v * v);
            g[i] += self.grad[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * du);
        }
    });
}

// ---------------------------------------------------------------------------
// reductions

template <class T>
BasicTensor<T> sum(const BasicTensor<T>& x) {
    T s{0};
    for (T v : x.data()) s += v;
    auto xn = x.node_ptr();
    return detail::make_result<T>(Shape{}, {s}, {x}, [xn](detail::NodeOf<T>& self) {
        T* g = xn->grad_buffer();
        for (std::size_t i = 0; i < xn->data.size(); ++i) g[i] += self.grad[0];
    });
}

template <class T>
BasicTensor<T> mean(const BasicTensor<T>& x) {
    return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

// mean((a - b)^2)
template <class T>
BasicTensor<T> mse(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    require_same_shape(a, b, "mse");
    const std::size_t n = a.numel();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = double(a.raw()[i]) - double(b.raw()[i]);
        acc += d * d;
    }
    auto an = a.node_ptr(), bn = b.node_ptr();
    return detail::make_result<T>(Shape{}, {static_cast<T>(acc / double(n))}, {a, b},
                                  [an, bn, n](detail::NodeOf<T>& self) {
                                      const T k = T(2) * self.grad[0] / static_cast<T>(n);
                                      if (an->requires_grad) {
                                          T* g = an->grad_buffer();
                                          for (std::size_t i = 0; i < n; ++i) g[i] += k * (an->data[i] - bn->data[i]);
                                      }
                                      if (bn->requires_grad) {
                                          T* g = bn->grad_buffer();
                                          for (std::size_t i = 0; i < n; ++i) g[i] -= k * (an->data[i] - bn->data[i]);
                                      }
                                  });
}

// ---------------------------------------------------------------------------
// matrix products

/// a[..., m, k] · b[..., k, n]. Leading axes must match exactly, or `b` may
/// be rank 2, in which case it is shared across every leading index of `a`.
template <class T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.rank() < 2 || b.rank() < 2) throw ShapeError("matmul: operands need rank >= 2");
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    const std::size_t k = as[as.size() - 1];
    if (bs[bs.size() - 2] != k) {
        throw ShapeError("matmul: inner extents differ " + to_string(as) + " x " + to_string(bs));
    }
    const std::size_t n = bs.back();
    Shape out_shape(as.begin(), as.end() - 1);
    out_shape.push_back(n);

    if (b.rank() == 2) {
        // shared right operand: flatten a's leading axes into rows
        const int rows = static_cast<int>(a.numel() / k);
        std::vector<T> out(static_cast<std::size_t>(rows) * n);
        detail::gemm(false, false, rows, int(n), int(k), T(1), a.raw(), int(k), b.raw(), int(n), T(0), out.data(),
                     int(n));
        auto an = a.node_ptr(), bn = b.node_ptr();
        return detail::make_result<T>(std::move(out_shape), std::move(out), {a, b},
                                      [an, bn, rows, n, k](detail::NodeOf<T>& self) {
                                          if (an->requires_grad)
                                              detail::gemm(false, true, rows, int(k), int(n), T(1), self.grad.data(),
                                                           int(n), bn->data.data(), int(n), T(1), an->grad_buffer(),
                                                           int(k));
                                          if (bn->requires_grad)
                                              detail::gemm(true, false, int(k), int(n), rows, T(1), an->data.data(),
                                                           int(k), self.grad.data(), int(n), T(1), bn->grad_buffer(),
                                                           int(n));
                                      });
    }

    if (a.rank() != b.rank() || !std::equal(as.begin(), as.end() - 2, bs.begin())) {
        throw ShapeError("matmul: leading extents differ " + to_string(as) + " x " + to_string(bs));
    }
    const std::size_t m = as[as.size() - 2];
    const std::size_t batch = detail::product(as, 0, as.size() - 2);
    std::vector<T> out(batch * m * n);
    for (std::size_t i = 0; i < batch; ++i) {
        detail::gemm(false, false, int(m), int(n), int(k), T(1), a.raw() + i * m * k, int(k), b.raw() + i * k * n,
                     int(n), T(0), out.data() + i * m * n, int(n));
    }
    auto an = a.node_ptr(), bn = b.node_ptr();
    return detail::make_result<T>(
        std::move(out_shape), std::move(out), {a, b}, [an, bn, batch, m, n, k](detail::NodeOf<T>& self) {
            for (std::size_t i = 0; i < batch; ++i) {
                const T* dc = self.grad.data() + i * m * n;
                if (an->requires_grad)
                    detail::gemm(false, true, int(m), int(k), int(n), T(1), dc, int(n), bn->data.data() + i * k * n,
                                 int(n), T(1), an->grad_buffer() + i * m * k, int(k));
                if (bn->requires_grad)
                    detail::gemm(true, false, int(k), int(n), int(m), T(1), an->data.data() + i * m * k, int(k), dc,
                                 int(n), T(1), bn->grad_buffer() + i * k * n, int(n));
            }
        });
}

/// a[..., m, k] · b[..., n, k]ᵀ with identical leading axes.
template <class T>
BasicTensor<T> matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
    if (a.rank() < 2 || a.rank() != b.rank()) throw ShapeError("matmul_nt: rank mismatch");
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    const std::size_t k = as.back();
    if (bs.back() != k || !std::equal(as.begin(), as.end() - 2, bs.begin())) {
        throw ShapeError("matmul_nt: extents differ " + to_string(as) + " x " + to_string(bs));
    }
    const std::size_t m = as[as.size() - 2];
    const std::size_t n = bs[bs.size() - 2];
    const std::size_t batch = detail::product(as, 0, as.size() - 2);
    Shape out_shape(as.begin(), as.end() - 1);
    out_shape.push_back(n);
    std::vector<T> out(batch * m * n);
    for (std::size_t i = 0; i < batch; ++i) {
        detail::gemm(false, true, int(m), int(n), int(k), T(1), a.raw() + i * m * k, int(k), b.raw() + i * n * k,
                     int(k), T(0), out.data() + i * m * n, int(n));
    }
    auto an = a.node_ptr(), bn = b.node_ptr();
    return detail::make_result<T>(
        std::move(out_shape), std::move(out), {a, b}, [an, bn, batch, m, n, k](detail::NodeOf<T>& self) {
            for (std::size_t i = 0; i < batch; ++i) {
                const T* dc = self.grad.data() + i * m * n;
                if (an->requires_grad)
                    detail::gemm(false, false, int(m), int(k), int(n), T(1), dc, int(n), bn->data.data() + i * n * k,
                                 int(k), T(1), an->grad_buffer() + i * m * k, int(k));
                if (bn->requires_grad)
                    detail::gemm(true, false, int(n), int(k), int(m), T(1), dc, int(n), an->data.data() + i * m * k,
                                 int(k), T(1), bn->grad_buffer() + i * n * k, int(k));
            }
        });
}

// x[..., in] · weight[in, out] + bias[out]
template <class T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
    return add_rowvec(matmul(x, weight), bias);
}

// ---------------------------------------------------------------------------
// layout

template <class T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Shape shape) {
    if (flexifilm::numel(shape) != x.numel()) {
        throw ShapeError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
    }
    std::vector<T> out(x.data().begin(), x.data().end());
    auto xn = x.node_ptr();
    return detail::make_result<T>(std::move(shape), std::move(out), {x},
                                  [xn](detail::NodeOf<T>& self) { detail::accumulate<T>(*xn, self.grad); });
}

// [a, b, rest...] -> [b, a, rest...]
template <class T>
BasicTensor<T> swap_leading_axes(const BasicTensor<T>& x) {
    if (x.rank() < 2) throw ShapeError("swap_leading_axes: rank < 2");
    const std::size_t a = x.extent(0), b = x.extent(1);
    const std::size_t inner = x.numel() / (a * b);
    Shape shape = x.shape();
    std::swap(shape[0], shape[1]);
    std::vector<T> out(x.numel());
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j)
            std::copy_n(x.raw() + (i * b + j) * inner, inner, out.data() + (j * a + i) * inner);
    auto xn = x.node_ptr();
    return detail::make_result<T>(std::move(shape), std::move(out), {x}, [xn, a, b, inner](detail::NodeOf<T>& self) {
        T* g = xn->grad_buffer();
        for (std::size_t i = 0; i < a; ++i)
            for (std::size_t j = 0; j < b; ++j) {
                const T* src = self.grad.data() + (j * a + i) * inner;
                T* dst = g + (i * b + j) * inner;
                for (std::size_t e = 0; e < inner; ++e) dst[e] += src[e];
            }
    });
}

template <class T>
BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b, std::size_t axis) {
    if (a.rank() != b.rank() || axis >= a.rank()) throw ShapeError("concat: rank/axis mismatch");
    for (std::size_t i = 0; i < a.rank(); ++i) {
        if (i != axis && a.extent(i) != b.extent(i)) {
            throw ShapeError("concat: extents differ " + to_string(a.shape()) + " vs " + to_string(b.shape()));
        }
    }
    const std::size_t outer = detail::product(a.shape(), 0, axis);
    const std::size_t inner = detail::product(a.shape(), axis + 1, a.rank());
    const std::size_t ca = a.extent(axis) * inner, cb = b.extent(axis) * inner;
    Shape shape = a.shape();
    shape[axis] += b.extent(axis);
    std::vector<T> out(a.numel() + b.numel());
    for (std::size_t o = 0; o < outer; ++o) {
        std::copy_n(a.raw() + o * ca, ca, out.data() + o * (ca + cb));
        std::copy_n(b.raw() + o * cb, cb, out.data() + o * (ca + cb) + ca);
    }
    auto an = a.node_ptr(), bn = b.node_ptr();
    return detail::make_result<T>(std::move(shape), std::move(out), {a, b},
                                  [an, bn, outer, ca, cb](detail::NodeOf<T>& self) {
                                      for (std::size_t o = 0; o < outer; ++o) {
                                          const T* src = self.grad.data() + o * (ca + cb);
                                          if (an->requires_grad) {
                                              T* g = an->grad_buffer() + o * ca;
                                              for (std::size_t e = 0; e < ca; ++e) g[e] += src[e];
                                          }
                                          if (bn->requires_grad) {
                                              T* g = bn->grad_buffer() + o * cb;
                                              for (std::size_t e = 0; e < cb; ++e) g[e] += src[ca + e];
                                          }
                                      }
                                  });
}

/// out[i] = x[indices[i]] along axis 0; repeated indices accumulate in backward.
template <class T>
BasicTensor<T> gather_rows(const BasicTensor<T>& x, const std::vector<std::size_t>& indices) {
    if (x.rank() == 0) throw ShapeError("gather_rows: scalar input");
    if (indices.empty()) throw ShapeError("gather_rows: empty index list");
    const std::size_t rows = x.extent(0);
    const std::size_t row = x.numel() / rows;
    for (auto i : indices) {
        if (i >= rows) throw ContractError("gather_rows: index " + std::to_string(i) + " out of range");
    }
    Shape shape = x.shape();
    shape[0] = indices.size();
    std::vector<T> out(indices.size() * row);
    for (std::size_t r = 0; r < indices.size(); ++r) std::copy_n(x.raw() + indices[r] * row, row, out.data() + r * row);
    auto xn = x.node_ptr();
    return detail::make_result<T>(std::move(shape), std::move(out), {x}, [xn, indices, row](detail::NodeOf<T>& self) {
        T* g = xn->grad_buffer();
        for (std::size_t r = 0; r < indices.size(); ++r) {
            const T* src = self.grad.data() + r * row;
            T* dst = g + indices[r] * row;
            for (std::size_t e = 0; e < row; ++e) dst[e] += src[e];
        }
    });
}

// x[n...] -> [copies, n...]
template <class T>
BasicTensor<T> repeat_leading(const BasicTensor<T>& x, std::size_t copies) {
    Shape one = x.shape();
    one.insert(one.begin(), 1);
    return gather_rows(reshape(x, one), std::vector<std::size_t>(copies, 0));
}

// ---------------------------------------------------------------------------
// normalisation / attention

template <class T>
BasicTensor<T> softmax_lastdim(const BasicTensor<T>& x) {
    if (x.rank() == 0 || x.shape().back() == 0) throw ShapeError("softmax_lastdim: empty last axis");
    const std::size_t n = x.shape().back();
    const std::size_t rows = x.numel() / n;
    std::vector<T> out(x.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = x.raw() + r * n;
        T* o = out.data() + r * n;
        T mx = -std::numeric_limits<T>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(in[j])) throw NumericError("softmax_lastdim: non-finite input");
            mx = std::max(mx, in[j]);
        }
        T total{0};
        for (std::size_t j = 0; j < n; ++j) {
            o[j] = std::exp(in[j] - mx);
            total += o[j];
        }
        for (std::size_t j = 0; j < n; ++j) o[j] /= total;
    }
    auto xn = x.node_ptr();
    return detail::make_result<T>(x.shape(), std::move(out), {x}, [xn, rows, n](detail::NodeOf<T>& self) {
        T* g = xn->grad_buffer();
        for (std::size_t r = 0; r < rows; ++r) {
            const T* y = self.data.data() + r * n;
            const T* dy = self.grad.data() + r * n;
            T dot{0};
            for (std::size_t j = 0; j < n; ++j) dot += y[j] * dy[j];
            for (std::size_t j = 0; j < n; ++j) g[r * n + j] += y[j] * (dy[j] - dot);
        }
    });
}

inline constexpr double kLayerNormEps = 1e-5;

template <class T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain, const BasicTensor<T>& bias) {
    if (x.rank() == 0 || gain.rank() != 1 || bias.rank() != 1 || gain.extent(0) != x.shape().back() ||
        bias.extent(0) != x.shape().back()) {
        throw ShapeError("layer_norm: gain/bias must match last axis of " + to_string(x.shape()));
    }
    const std::size_t n = x.shape().back();
    const std::size_t rows = x.numel() / n;
    std::vector<T> out(x.numel());
    std::vector<T> xhat(x.numel());
    std::vector<T> rstd(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = x.raw() + r * n;
        T mu{0};
        for (std::size_t j = 0; j < n; ++j) mu += in[j];
        mu /= T(n);
        T var{0};
        for (std::size_t j = 0; j < n; ++j) var += (in[j] - mu) * (in[j] - mu);
        var /= T(n);
        rstd[r] = T(1) / std::sqrt(var + T(kLayerNormEps));
        for (std::size_t j = 0; j < n; ++j) {
            const T h = (in[j] - mu) * rstd[r];
            xhat[r * n + j] = h;
            out[r * n + j] = h * gain.raw()[j] + bias.raw()[j];
        }
    }
    auto xn = x.node_ptr(), gn = gain.node_ptr(), bn = bias.node_ptr();
    return detail::make_result<T>(
        x.shape(), std::move(out), {x, gain, bias},
        [xn, gn, bn, rows, n, xhat = std::move(xhat), rstd = std::move(rstd)](detail::NodeOf<T>& self) {
            for (std::size_t r = 0; r < rows; ++r) {
                const T* dy = self.grad.data() + r * n;
                const T* h = xhat.data() + r * n;
                if (gn->requires_grad) {
                    T* g = gn->grad_buffer();
                    for (std::size_t j = 0; j < n; ++j) g[j] += dy[j] * h[j];
                }
                if (bn->requires_grad) {
                    T* g = bn->grad_buffer();
                    for (std::size_t j = 0; j < n; ++j) g[j] += dy[j];
                }
                if (xn->requires_grad) {
                    T mean_d{0}, mean_dh{0};
                    for (std::size_t j = 0; j < n; ++j) {
                        const T d = dy[j] * gn->data[j];
                        mean_d += d;
                        mean_dh += d * h[j];
                    }
                    mean_d /= T(n);
                    mean_dh /= T(n);
                    T* g = xn->grad_buffer() + r * n;
                    for (std::size_t j = 0; j < n; ++j) {
                        g[j] += rstd[r] * (dy[j] * gn->data[j] - mean_d - h[j] * mean_dh);
                    }
                }
            }
        });
}

/// softmax(q·kᵀ/√d)·v over the trailing two axes; leading axes are batch.
template <class T>
BasicTensor<T> scaled_dot_attention(const BasicTensor<T>& q, const BasicTensor<T>& k, const BasicTensor<T>& v) {
    if (q.rank() < 2 || k.rank() != q.rank() || v.rank() != q.rank()) {
        throw ShapeError("attention: q, k, v need equal rank >= 2");
    }
    if (q.shape().back() != k.shape().back()) throw ShapeError("attention: q and k key extents differ");
    if (k.extent(k.rank() - 2) != v.extent(v.rank() - 2)) {
        throw ShapeError("attention: k and v sequence extents differ");
    }
    const T inv = T(1) / std::sqrt(static_cast<T>(q.shape().back()));
    return matmul(softmax_lastdim(scale(matmul_nt(q, k), inv)), v);
}

}  // namespace flexifilm

#endif
