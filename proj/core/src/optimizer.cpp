#include "fluxcast/optimizer.hpp"

#include <cmath>

namespace fluxcast::num {

OptimizerState OptimizerState::init(const ParamSet& params, AdamConfig cfg) {
    OptimizerState st;
    st.config = cfg;
    for (const auto& [_, p] : params) {
        st.m.emplace_back(p.rows(), p.cols());
        st.v.emplace_back(p.rows(), p.cols());
    }
    return st;
}

void opt_step(ParamSet& params, const ParamSet& grads, OptimizerState& state) {
    if (!params.same_shapes(grads))
        throw ShapeError("opt_step: gradient shapes do not match parameters");
    if (!grads.all_finite())
        throw NumericError("opt_step: non-finite gradient");

    const AdamConfig& c = state.config;
    state.step += 1;
    double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.count(); ++i) {
        Matrix& p = params.value(i);
        const Matrix& g = grads.value(i);
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m.at(j) = c.beta1 * m.at(j) + (1.0 - c.beta1) * g.at(j);
            v.at(j) = c.beta2 * v.at(j) + (1.0 - c.beta2) * g.at(j) * g.at(j);
            double mhat = m.at(j) / bc1;
            double vhat = v.at(j) / bc2;
            p.at(j) -= c.lr * mhat / (std::sqrt(vhat) + c.epsilon);
        }
    }
}

} // namespace fluxcast::num
