#pragma once

#include <cstdint>
#include <vector>

#include "freqseg/tensor/tensor.hpp"

namespace freqseg {

/// Adam hyper-parameters and moment buffers. The moment vectors are
/// allocated on the first step and are parallel to the parameter list.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step_count = 0;
    std::vector<NdArray> m;
    std::vector<NdArray> v;
};

/// One bias-corrected Adam update over `params`, then clears their
/// gradients. Every parameter must carry a gradient from a completed
/// backward pass; the parameter list must be the same on every call.
void adam_step(const std::vector<Tensor>& params, AdamState& state);

}  // namespace freqseg
