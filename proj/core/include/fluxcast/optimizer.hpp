#pragma once

#include <cstdint>
#include <vector>

#include "fluxcast/params.hpp"

namespace fluxcast::num {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment accumulators, one matrix pair per parameter.
struct OptimizerState {
    std::uint64_t step = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    AdamConfig config;

    static OptimizerState init(const ParamSet& params, AdamConfig cfg = {});
};

// Bias-corrected adaptive-moment update, in place.
void opt_step(ParamSet& params, const ParamSet& grads, OptimizerState& state);

} // namespace fluxcast::num
