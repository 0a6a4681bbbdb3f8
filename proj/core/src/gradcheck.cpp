#include "fluxcast/gradcheck.hpp"

#include <cmath>

namespace fluxcast::num {

namespace {

double eval_value(const Program& f, const ParamSet& params) {
    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(params.count());
    for (const auto& [_, m] : params) leaves.push_back(tape.leaf(m));
    Value root = f(tape, leaves);
    return tape.value(root).at(0);
}

} // namespace

CheckReport grad_check(const Program& f, const ParamSet& params,
                       double epsilon, double tolerance) {
    if (epsilon <= 0.0 || tolerance <= 0.0)
        throw ConfigError("grad_check: epsilon and tolerance must be positive");

    EvalResult analytic = grad_eval(f, params);

    CheckReport report;
    report.tolerance = tolerance;
    ParamSet probe = params;
    for (std::size_t pi = 0; pi < params.count(); ++pi) {
        Matrix& pm = probe.value(pi);
        for (std::size_t j = 0; j < pm.size(); ++j) {
            double orig = pm.at(j);
            pm.at(j) = orig + epsilon;
            double fp = eval_value(f, probe);
            pm.at(j) = orig - epsilon;
            double fm = eval_value(f, probe);
            pm.at(j) = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw NumericError("grad_check: non-finite probe value");
            double numeric = (fp - fm) / (2.0 * epsilon);
            double a = analytic.grads.value(pi).at(j);
            double rel = std::fabs(a - numeric) / (std::fabs(a) + std::fabs(numeric) + 1e-8);
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = params.name(pi) + "[" + std::to_string(j) + "]";
            }
        }
    }
    report.passed = report.max_rel_error < tolerance;
    return report;
}

} // namespace fluxcast::num
