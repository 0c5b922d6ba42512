#ifndef FLEXIFILM_TESTS_GRADCHECK_HPP
#define FLEXIFILM_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "flexifilm/tensor.hpp"

namespace flexifilm::testing {

using DTensor = BasicTensor<double>;

struct GradcheckResult {
    double worst_relative_error = 0.0;
    std::size_t worst_input = 0;
};

/// Compares tape gradients of `loss(inputs)` with central differences of
/// step h, per input, as ||analytic - numeric|| / max(||analytic||, ||numeric||).
/// Finite differences only evaluate the forward pass; they never touch the tape.
inline GradcheckResult gradcheck(const std::function<DTensor(const std::vector<DTensor>&)>& loss,
                                 std::vector<DTensor> inputs, double h = 1e-3) {
    for (auto& in : inputs) {
        in.zero_grad();
        in.set_requires_grad(true);
    }
    backward(loss(inputs));

    GradcheckResult result;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        std::vector<double> analytic(inputs[k].numel(), 0.0);
        if (inputs[k].has_grad()) std::copy(inputs[k].grad().begin(), inputs[k].grad().end(), analytic.begin());
        std::vector<double> numeric(inputs[k].numel());
        NoGradGuard no_grad;
        for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
            double& x = inputs[k].mutable_data()[i];
            const double saved = x;
            x = saved + h;
            const double up = loss(inputs).item();
            x = saved - h;
            const double down = loss(inputs).item();
            x = saved;
            numeric[i] = (up - down) / (2.0 * h);
        }
        double diff = 0.0, na = 0.0, nn = 0.0;
        for (std::size_t i = 0; i < numeric.size(); ++i) {
            diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
            na += analytic[i] * analytic[i];
            nn += numeric[i] * numeric[i];
        }
        const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
        const double rel = std::sqrt(diff) / denom;
        if (rel > result.worst_relative_error) {
            result.worst_relative_error = rel;
            result.worst_input = k;
        }
    }
    return result;
}

}  // namespace flexifilm::testing

#endif
