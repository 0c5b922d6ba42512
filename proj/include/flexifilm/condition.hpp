#ifndef FLEXIFILM_CONDITION_HPP
#define FLEXIFILM_CONDITION_HPP

#include <cstdint>
#include <vector>

#include "flexifilm/tensor.hpp"

namespace flexifilm {

using TokenId = std::uint32_t;

/// What a generation is conditioned on: n_c latent frames plus a caption,
/// or nothing at all (the null condition used for classifier-free guidance).
struct ConditionBundle {
    Tensor frames;  // [n_c, C, h, w] latent; undefined when is_null
    std::vector<TokenId> text;
    std::size_t n_c = 0;
    bool is_null = false;

    static ConditionBundle null() {
        ConditionBundle b;
        b.is_null = true;
        return b;
    }

    static ConditionBundle from(Tensor frames, std::vector<TokenId> text) {
        if (!frames.defined() || frames.rank() != 4 || frames.extent(0) == 0) {
            throw ShapeError("ConditionBundle: frames must be a non-empty [n_c,C,h,w] latent");
        }
        ConditionBundle b;
        b.n_c = frames.extent(0);
        b.frames = std::move(frames);
        b.text = std::move(text);
        return b;
    }

    void validate() const {
        if (is_null) {
            if (frames.defined() || !text.empty() || n_c != 0) {
                throw ContractError("ConditionBundle: null condition carries frames or text");
            }
            return;
        }
        if (!frames.defined() || frames.rank() != 4 || frames.extent(0) != n_c || n_c == 0) {
            throw ContractError("ConditionBundle: frames do not match n_c");
        }
    }
};

}  // namespace flexifilm

#endif
