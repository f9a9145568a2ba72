#pragma once

#include <cstdint>
#include <vector>

#include "hypobench/autodiff/tensor.hpp"

namespace hypobench::ad {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Moment accumulators for a fixed, ordered parameter list. The learning
/// rate is constant; there is no schedule.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

/// One bias-corrected Adam update using the gradients stored on `params`.
/// Parameters that never received a gradient are treated as having zero
/// gradient. Moments are allocated on the first call.
void adam_step(std::vector<Tensor>& params, AdamState& state);

void zero_grads(std::vector<Tensor>& params);

}  // namespace hypobench::ad
