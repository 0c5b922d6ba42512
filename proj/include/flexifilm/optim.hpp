#ifndef FLEXIFILM_OPTIM_HPP
#define FLEXIFILM_OPTIM_HPP

#include <cmath>
#include <vector>

#include "flexifilm/tensor.hpp"

namespace flexifilm {

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;

    void init(const std::vector<Tensor>& params) {
        step = 0;
        m.clear();
        v.clear();
        for (const auto& p : params) {
            m.emplace_back(p.numel(), 0.0f);
            v.emplace_back(p.numel(), 0.0f);
        }
    }
};

/// One Adam update. A parameter without a gradient buffer is treated as
/// having a zero gradient, so its moments decay but the step is zero only
/// while both moments are zero.
inline void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
    if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state not initialised for params");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (state.m[i].size() != p.numel()) throw ShapeError("adam_step: state/param size mismatch");
        if (!p.has_grad()) {
            bool moments_zero = true;
            for (float x : state.m[i]) moments_zero = moments_zero && x == 0.0f;
            if (moments_zero) continue;
        }
        auto data = p.mutable_data();
        auto grad = p.grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double g = grad.empty() ? 0.0 : grad[j];
            m[j] = float(state.beta1 * m[j] + (1.0 - state.beta1) * g);
            v[j] = float(state.beta2 * v[j] + (1.0 - state.beta2) * g * g);
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            data[j] = float(data[j] - lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

inline double global_grad_norm(const std::vector<Tensor>& params) {
    double acc = 0.0;
    for (const auto& p : params)
        for (float g : p.grad()) acc += double(g) * g;
    return std::sqrt(acc);
}

// Rescales all grads so their joint L2 norm is at most max_norm. Returns the pre-clip norm.
inline double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
    const double norm = global_grad_norm(params);
    if (norm > max_norm && norm > 0.0) {
        const float k = float(max_norm / norm);
        for (auto& p : params) {
            if (!p.has_grad()) continue;
            for (auto& g : p.mutable_grad()) g *= k;
        }
    }
    return norm;
}

}  // namespace flexifilm

#endif
