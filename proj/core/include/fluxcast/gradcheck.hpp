#pragma once

#include <string>

#include "fluxcast/tape.hpp"

namespace fluxcast::num {

struct CheckReport {
    bool passed = false;
    double max_rel_error = 0.0;
    std::string worst_param; // "name[index]" of the worst entry
    double tolerance = 0.0;
};

// Central-difference check of every parameter entry against the analytic
// gradient from grad_eval. Relative error is |a-n| / (|a|+|n|+1e-8).
CheckReport grad_check(const Program& f, const ParamSet& params,
                       double epsilon, double tolerance);

} // namespace fluxcast::num
