#ifndef FLEXIFILM_TESTS_STUB_MODEL_HPP
#define FLEXIFILM_TESTS_STUB_MODEL_HPP

#include "flexifilm/condition.hpp"
#include "flexifilm/tensor.hpp"

namespace flexifilm::testing {

// Cheap stand-in for the sampler: identity codec on a tiny latent and an
// eps prediction that depends on the condition frames when present.
struct StubModel {
    Shape frame{2, 4, 4};
    bool uses_condition = true;

    Shape latent_frame_shape() const { return frame; }
    Tensor encode(const Tensor& x) const { return x.clone(); }
    Tensor decode(const Tensor& z) const { return z.clone(); }

    Tensor predict_eps(const Tensor& z, int t, const ConditionBundle& c) const {
        double bias = 0.0;
        if (uses_condition && !c.is_null) {
            for (float v : c.frames.data()) bias += v;
            bias = 0.05 * bias / double(c.frames.numel()) + 0.02;
        }
        Tensor out = z.clone();
        const float k = 0.5f + 0.0002f * float(t);
        for (auto& v : out.mutable_data()) v = k * v + float(bias);
        return out;
    }
};

}  // namespace flexifilm::testing

#endif
