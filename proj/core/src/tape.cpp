#include "fluxcast/tape.hpp"

#include <cmath>

namespace fluxcast::num {

Value Tape::push(Matrix val, bool tracked, const char* op,
                 std::function<void(Tape&, const Matrix&)> adjoint) {
    if (!val.all_finite())
        throw NumericError(std::string("non-finite value in op '") + op + "'");
    Node n;
    n.grad = Matrix(val.rows(), val.cols());
    n.val = std::move(val);
    n.tracked = tracked;
    n.adjoint = std::move(adjoint);
    nodes_.push_back(std::move(n));
    return Value{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::accumulate(Value v, const Matrix& g) {
    Matrix& dst = nodes_[v.id].grad;
    for (std::size_t i = 0; i < dst.size(); ++i) dst.at(i) += g.at(i);
}

Value Tape::leaf(Matrix m) {
    return push(std::move(m), true, "leaf", nullptr);
}

Value Tape::constant(Matrix m) {
    return push(std::move(m), false, "constant", nullptr);
}

Value Tape::matmul(Value a, Value b) {
    Matrix out = num::matmul(nodes_[a.id].val, nodes_[b.id].val);
    bool tracked = nodes_[a.id].tracked || nodes_[b.id].tracked;
    return push(std::move(out), tracked, "matmul",
                [a, b](Tape& t, const Matrix& g) {
                    if (t.nodes_[a.id].tracked)
                        t.accumulate(a, num::matmul(g, transpose(t.nodes_[b.id].val)));
                    if (t.nodes_[b.id].tracked)
                        t.accumulate(b, num::matmul(transpose(t.nodes_[a.id].val), g));
                });
}

Value Tape::add(Value a, Value b) {
    Matrix out = num::add(nodes_[a.id].val, nodes_[b.id].val);
    bool tracked = nodes_[a.id].tracked || nodes_[b.id].tracked;
    return push(std::move(out), tracked, "add",
                [a, b](Tape& t, const Matrix& g) {
                    if (t.nodes_[a.id].tracked) t.accumulate(a, g);
                    if (t.nodes_[b.id].tracked) t.accumulate(b, g);
                });
}

Value Tape::sub(Value a, Value b) {
    Matrix out = num::sub(nodes_[a.id].val, nodes_[b.id].val);
    bool tracked = nodes_[a.id].tracked || nodes_[b.id].tracked;
    return push(std::move(out), tracked, "sub",
                [a, b](Tape& t, const Matrix& g) {
                    if (t.nodes_[a.id].tracked) t.accumulate(a, g);
                    if (t.nodes_[b.id].tracked) t.accumulate(b, num::scale(g, -1.0));
                });
}

Value Tape::hadamard(Value a, Value b) {
    Matrix out = num::hadamard(nodes_[a.id].val, nodes_[b.id].val);
    bool tracked = nodes_[a.id].tracked || nodes_[b.id].tracked;
    return push(std::move(out), tracked, "hadamard",
                [a, b](Tape& t, const Matrix& g) {
                    if (t.nodes_[a.id].tracked)
                        t.accumulate(a, num::hadamard(g, t.nodes_[b.id].val));
                    if (t.nodes_[b.id].tracked)
                        t.accumulate(b, num::hadamard(g, t.nodes_[a.id].val));
                });
}

Value Tape::sigmoid(Value x) {
    Matrix out = num::sigmoid(nodes_[x.id].val);
    bool tracked = nodes_[x.id].tracked;
    Value v = push(std::move(out), tracked, "sigmoid",
                   [x](Tape& t, const Matrix& g) {
                       if (!t.nodes_[x.id].tracked) return;
                       // s'(x) = s (1 - s), read from the cached output.
                       const Matrix& s = t.nodes_[t.last_out_].val;
                       Matrix d(g.rows(), g.cols());
                       for (std::size_t i = 0; i < g.size(); ++i)
                           d.at(i) = g.at(i) * s.at(i) * (1.0 - s.at(i));
                       t.accumulate(x, d);
                   });
    return v;
}

Value Tape::tanh(Value x) {
    Matrix out = tanh_m(nodes_[x.id].val);
    bool tracked = nodes_[x.id].tracked;
    return push(std::move(out), tracked, "tanh",
                [x](Tape& t, const Matrix& g) {
                    if (!t.nodes_[x.id].tracked) return;
                    const Matrix& y = t.nodes_[t.last_out_].val;
                    Matrix d(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        d.at(i) = g.at(i) * (1.0 - y.at(i) * y.at(i));
                    t.accumulate(x, d);
                });
}

Value Tape::relu(Value x) {
    Matrix out = num::relu(nodes_[x.id].val);
    bool tracked = nodes_[x.id].tracked;
    return push(std::move(out), tracked, "relu",
                [x](Tape& t, const Matrix& g) {
                    if (!t.nodes_[x.id].tracked) return;
                    const Matrix& in = t.nodes_[x.id].val;
                    Matrix d(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        d.at(i) = in.at(i) > 0.0 ? g.at(i) : 0.0;
                    t.accumulate(x, d);
                });
}

Value Tape::add_rowvec(Value m, Value row) {
    Matrix out = num::add_rowvec(nodes_[m.id].val, nodes_[row.id].val);
    bool tracked = nodes_[m.id].tracked || nodes_[row.id].tracked;
    return push(std::move(out), tracked, "add_rowvec",
                [m, row](Tape& t, const Matrix& g) {
                    if (t.nodes_[m.id].tracked) t.accumulate(m, g);
                    if (t.nodes_[row.id].tracked) {
                        Matrix d(1, g.cols());
                        for (std::size_t i = 0; i < g.rows(); ++i)
                            for (std::size_t j = 0; j < g.cols(); ++j)
                                d(0, j) += g(i, j);
                        t.accumulate(row, d);
                    }
                });
}

Value Tape::scale_rows(Value m, Value col) {
    Matrix out = num::scale_rows(nodes_[m.id].val, nodes_[col.id].val);
    bool tracked = nodes_[m.id].tracked || nodes_[col.id].tracked;
    return push(std::move(out), tracked, "scale_rows",
                [m, col](Tape& t, const Matrix& g) {
                    if (t.nodes_[m.id].tracked)
                        t.accumulate(m, num::scale_rows(g, t.nodes_[col.id].val));
                    if (t.nodes_[col.id].tracked)
                        t.accumulate(col, num::rowsum(num::hadamard(g, t.nodes_[m.id].val)));
                });
}

Value Tape::one_minus(Value x) {
    const Matrix& in = nodes_[x.id].val;
    Matrix out(in.rows(), in.cols());
    for (std::size_t i = 0; i < in.size(); ++i) out.at(i) = 1.0 - in.at(i);
    bool tracked = nodes_[x.id].tracked;
    return push(std::move(out), tracked, "one_minus",
                [x](Tape& t, const Matrix& g) {
                    if (t.nodes_[x.id].tracked) t.accumulate(x, num::scale(g, -1.0));
                });
}

Value Tape::affine_scalar(const Matrix& v, Value w, Value b) {
    const Matrix& wm = nodes_[w.id].val;
    const Matrix& bm = nodes_[b.id].val;
    if (wm.size() != 1 || bm.size() != 1)
        throw ShapeError("affine_scalar: w and b must be 1x1");
    Matrix out(v.rows(), v.cols());
    for (std::size_t i = 0; i < v.size(); ++i) out.at(i) = wm.at(0) * v.at(i) + bm.at(0);
    bool tracked = nodes_[w.id].tracked || nodes_[b.id].tracked;
    Matrix vc = v;
    return push(std::move(out), tracked, "affine_scalar",
                [vc, w, b](Tape& t, const Matrix& g) {
                    double dw = 0.0, db = 0.0;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        dw += g.at(i) * vc.at(i);
                        db += g.at(i);
                    }
                    if (t.nodes_[w.id].tracked) t.accumulate(w, Matrix::scalar(dw));
                    if (t.nodes_[b.id].tracked) t.accumulate(b, Matrix::scalar(db));
                });
}

Value Tape::hconcat(const std::vector<Value>& parts) {
    std::vector<Matrix> mats;
    mats.reserve(parts.size());
    bool tracked = false;
    for (Value p : parts) {
        mats.push_back(nodes_[p.id].val);
        tracked = tracked || nodes_[p.id].tracked;
    }
    Matrix out = num::hconcat(mats);
    std::vector<Value> ps = parts;
    return push(std::move(out), tracked, "hconcat",
                [ps](Tape& t, const Matrix& g) {
                    std::size_t off = 0;
                    for (Value p : ps) {
                        const Matrix& pv = t.nodes_[p.id].val;
                        if (t.nodes_[p.id].tracked) {
                            Matrix d(pv.rows(), pv.cols());
                            for (std::size_t i = 0; i < pv.rows(); ++i)
                                for (std::size_t j = 0; j < pv.cols(); ++j)
                                    d(i, j) = g(i, off + j);
                            t.accumulate(p, d);
                        }
                        off += pv.cols();
                    }
                });
}

Value Tape::rowsum(Value m) {
    Matrix out = num::rowsum(nodes_[m.id].val);
    bool tracked = nodes_[m.id].tracked;
    return push(std::move(out), tracked, "rowsum",
                [m](Tape& t, const Matrix& g) {
                    if (!t.nodes_[m.id].tracked) return;
                    const Matrix& in = t.nodes_[m.id].val;
                    Matrix d(in.rows(), in.cols());
                    for (std::size_t i = 0; i < in.rows(); ++i)
                        for (std::size_t j = 0; j < in.cols(); ++j)
                            d(i, j) = g(i, 0);
                    t.accumulate(m, d);
                });
}

Value Tape::scale(Value x, double c) {
    Matrix out = num::scale(nodes_[x.id].val, c);
    bool tracked = nodes_[x.id].tracked;
    return push(std::move(out), tracked, "scale",
                [x, c](Tape& t, const Matrix& g) {
                    if (t.nodes_[x.id].tracked) t.accumulate(x, num::scale(g, c));
                });
}

Value Tape::weighted_sq_sum(Value x, const Matrix& w) {
    const Matrix& in = nodes_[x.id].val;
    if (!in.same_shape(w)) throw ShapeError("weighted_sq_sum: weight shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) s += w.at(i) * in.at(i) * in.at(i);
    bool tracked = nodes_[x.id].tracked;
    Matrix wc = w;
    return push(Matrix::scalar(s), tracked, "weighted_sq_sum",
                [x, wc](Tape& t, const Matrix& g) {
                    if (!t.nodes_[x.id].tracked) return;
                    const Matrix& in = t.nodes_[x.id].val;
                    Matrix d(in.rows(), in.cols());
                    for (std::size_t i = 0; i < in.size(); ++i)
                        d.at(i) = g.at(0) * 2.0 * wc.at(i) * in.at(i);
                    t.accumulate(x, d);
                });
}

void Tape::backward(Value root) {
    if (nodes_[root.id].val.size() != 1)
        throw ShapeError("backward: root must be 1x1");
    nodes_[root.id].grad = Matrix::scalar(1.0);
    for (std::uint32_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.tracked || !n.adjoint) continue;
        last_out_ = i;
        n.adjoint(*this, n.grad);
    }
}

EvalResult grad_eval(const Program& f, const ParamSet& params) {
    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(params.count());
    for (const auto& [_, m] : params) leaves.push_back(tape.leaf(m));
    Value root = f(tape, leaves);
    if (tape.value(root).size() != 1)
        throw ShapeError("grad_eval: program must return a scalar");
    tape.backward(root);
    EvalResult res;
    res.value = tape.value(root).at(0);
    for (std::size_t i = 0; i < params.count(); ++i)
        res.grads.add(params.name(i), tape.grad(leaves[i]));
    if (!res.grads.all_finite())
        throw NumericError("non-finite gradient in grad_eval backward pass");
    return res;
}

} // namespace fluxcast::num
