#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fluxcast/matrix.hpp"
#include "fluxcast/params.hpp"

namespace fluxcast::num {

class Tape;

// Handle to a tape node.
struct Value {
    std::uint32_t id = 0;
};

// Reverse-mode gradient tape over the dense matrix kernels. Forward values
// are computed eagerly through the same kernels the inference path uses;
// backward replays the recorded adjoints in reverse order. Every op checks
// its output for NaN/Inf and raises NumericError naming the op.
class Tape {
public:
    // Gradient-tracked leaf (a parameter).
    Value leaf(Matrix m);
    // Untracked input (data); backward never visits it.
    Value constant(Matrix m);

    Value matmul(Value a, Value b);
    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value hadamard(Value a, Value b);
    Value sigmoid(Value x);
    Value tanh(Value x);
    Value relu(Value x);
    Value add_rowvec(Value m, Value row);
    Value scale_rows(Value m, Value col);
    // 1 - x elementwise.
    Value one_minus(Value x);
    // w * v + b elementwise, with w and b 1x1 parameters and v constant data.
    Value affine_scalar(const Matrix& v, Value w, Value b);
    Value hconcat(const std::vector<Value>& parts);
    Value rowsum(Value m);
    Value scale(Value x, double c);
    // sum_i w_i * x_i^2 over all entries, w a constant weight mask; 1x1 out.
    Value weighted_sq_sum(Value x, const Matrix& w);

    const Matrix& value(Value v) const { return nodes_[v.id].val; }
    const Matrix& grad(Value v) const { return nodes_[v.id].grad; }

    // Seeds d(root)=1 and accumulates gradients into every tracked node.
    // root must be 1x1.
    void backward(Value root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix val;
        Matrix grad;
        bool tracked = false;
        std::function<void(Tape&, const Matrix&)> adjoint; // empty for leaves
    };

    Value push(Matrix val, bool tracked, const char* op,
               std::function<void(Tape&, const Matrix&)> adjoint);
    void accumulate(Value v, const Matrix& g);

    std::vector<Node> nodes_;
    std::uint32_t last_out_ = 0; // node whose adjoint is currently running
};

// A scalar-valued differentiable program over a parameter set. Receives one
// tape leaf per parameter, in ParamSet order, and returns a 1x1 value.
using Program = std::function<Value(Tape&, const std::vector<Value>&)>;

struct EvalResult {
    double value = 0.0;
    ParamSet grads; // same names/shapes as the input parameters
};

// Runs f forward, then backward; returns the scalar and all gradients.
EvalResult grad_eval(const Program& f, const ParamSet& params);

} // namespace fluxcast::num
