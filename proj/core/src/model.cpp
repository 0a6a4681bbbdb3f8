#include "fluxcast/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fluxcast/jsonio.hpp"

namespace fluxcast::model {

using num::Matrix;
using num::hconcat;

namespace {

// ParamSet indices; must match the add order in ModelParams::init.
enum ParamIndex : std::size_t {
    kEncW, kEncB, kFuseW, kFuseB, kPropW, kGateW, kGateB,
    kDynU, kDynC, kDecW, kDecB, kHeadW, kHeadB, kParamCount
};

struct ParamSpec {
    const char* name;
    std::size_t rows, cols, fan_in;
};

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
    std::size_t dd = cfg.dec_width();
    return {
        {"enc.W", cfg.f, cfg.d, cfg.f},
        {"enc.b", 1, cfg.d, cfg.f},
        {"fuse.w", 2 * cfg.d, 1, 2 * cfg.d},
        {"fuse.b", 1, 1, 2 * cfg.d},
        {"prop.W", cfg.d, cfg.d, cfg.d},
        {"gate.w", 1, 1, 1},
        {"gate.b", 1, 1, 1},
        {"dyn.u", 1, 1, 1},
        {"dyn.c", 1, 1, 1},
        {"dec.W", cfg.m * cfg.d, dd, cfg.m * cfg.d},
        {"dec.b", 1, dd, cfg.m * cfg.d},
        {"head.W", cfg.k, dd, dd},
        {"head.b", cfg.k, 1, dd},
    };
}

// Euclidean norm of each row of (x - prev); K x 1.
Matrix input_delta_norm(const Matrix& x, const Matrix& prev) {
    Matrix out(x.rows(), 1);
    for (std::size_t k = 0; k < x.rows(); ++k) {
        double s = 0.0;
        for (std::size_t f = 0; f < x.cols(); ++f) {
            double d = x(k, f) - prev(k, f);
            s += d * d;
        }
        out(k, 0) = std::sqrt(s);
    }
    return out;
}

void check_finite(const Matrix& m, const char* op) {
    if (!m.all_finite()) throw NumericError(std::string("non-finite value in op '") + op + "'");
}

} // namespace

void ModelConfig::finalize() {
    if (k < 1 || f < 1 || d < 1 || m < 1 || tau < 1 || L < 1)
        throw ConfigError("model config: all dimensions must be >= 1");
    if (L < m) throw ConfigError("model config: L must be >= m");
    if (task_weights.empty()) task_weights.assign(k, 1.0);
    if (task_weights.size() != k)
        throw ConfigError("model config: task_weights size must equal k");
    double sum = 0.0;
    for (double w : task_weights) {
        if (w <= 0.0) throw ConfigError("model config: task weights must be positive");
        sum += w;
    }
    // normalize to sum k
    for (double& w : task_weights) w *= static_cast<double>(k) / sum;
}

ModelParams ModelParams::init(const ModelConfig& cfg, num::RandomSource rng) {
    ModelParams p;
    for (const auto& spec : param_specs(cfg)) {
        double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
        Matrix m(spec.rows, spec.cols);
        for (std::size_t i = 0; i < m.size(); ++i) m.at(i) = rng.uniform(-bound, bound);
        p.set.add(spec.name, std::move(m));
    }
    return p;
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
    ModelParams p;
    for (const auto& spec : param_specs(cfg))
        p.set.add(spec.name, Matrix(spec.rows, spec.cols));
    return p;
}

HiddenState HiddenState::initial(const ModelConfig& cfg) {
    HiddenState st;
    st.fused = Matrix(cfg.k, cfg.d);
    st.prev_input = Matrix(cfg.k, cfg.f);
    st.s_ewma.assign(cfg.k, 0.0);
    return st;
}

Matrix encode(const Matrix& x, const ModelParams& p, const ModelConfig& cfg) {
    if (x.rows() != cfg.k || x.cols() != cfg.f)
        throw ShapeError("encode: input must be K x F");
    check_finite(x, "encode");
    return tanh_m(add_rowvec(matmul(x, p.set.value(kEncW)), p.set.value(kEncB)));
}

std::pair<Matrix, Matrix> fuse_state(const Matrix& h, const HiddenState& state,
                                     const ModelParams& p, const ModelConfig& cfg) {
    check_finite(h, "fuse_state");
    if (!cfg.use_fusion) return {h, Matrix(cfg.k, 1, 1.0)};
    Matrix cat = hconcat({h, state.fused});
    Matrix alpha = sigmoid(add_rowvec(matmul(cat, p.set.value(kFuseW)), p.set.value(kFuseB)));
    Matrix fused = add(scale_rows(h, alpha),
                       scale_rows(state.fused, sub(Matrix(cfg.k, 1, 1.0), alpha)));
    return {std::move(fused), std::move(alpha)};
}

Matrix propagate(const Matrix& fused, const graph::AdjacencyMatrix& adj,
                 const ModelParams& p, const ModelConfig& cfg) {
    const Matrix& a = cfg.use_graph ? adj.weights : Matrix::identity(cfg.k);
    if (a.rows() != cfg.k || a.cols() != cfg.k)
        throw ShapeError("propagate: adjacency must be K x K");
    if (fused.rows() != cfg.k || fused.cols() != cfg.d)
        throw ShapeError("propagate: state must be K x d");
    return sigmoid(matmul(matmul(a, fused), p.set.value(kPropW)));
}

std::pair<Matrix, Matrix> gate_fuse(const Matrix& z, const Matrix& fused,
                                    const Matrix& x, const HiddenState& state,
                                    const ModelParams& p, const ModelConfig& cfg) {
    check_finite(z, "gate_fuse");
    Matrix v = input_delta_norm(x, state.prev_input);
    double w = p.set.value(kGateW).at(0);
    double b = p.set.value(kGateB).at(0);
    Matrix lambda(cfg.k, 1);
    for (std::size_t k = 0; k < cfg.k; ++k)
        lambda(k, 0) = num::scalar_sigmoid(w * v(k, 0) + b);
    Matrix g = add(scale_rows(z, lambda),
                   scale_rows(fused, sub(Matrix(cfg.k, 1, 1.0), lambda)));
    return {std::move(g), std::move(lambda)};
}

DynamicOut dynamic_adjust(const Matrix& g, const Matrix& x, const HiddenState& state,
                          const ModelParams& p, const ModelConfig& cfg) {
    check_finite(g, "dynamic_adjust");
    Matrix v = input_delta_norm(x, state.prev_input);
    DynamicOut out;
    out.s_ewma.resize(cfg.k);
    for (std::size_t k = 0; k < cfg.k; ++k)
        out.s_ewma[k] = kFluctuationDecay * state.s_ewma[k] +
                        (1.0 - kFluctuationDecay) * v(k, 0);
    if (!cfg.use_dynamic) {
        out.g = g;
        out.gamma = Matrix(cfg.k, 1, 1.0);
        return out;
    }
    double u = p.set.value(kDynU).at(0);
    double c = p.set.value(kDynC).at(0);
    out.gamma = Matrix(cfg.k, 1);
    for (std::size_t k = 0; k < cfg.k; ++k)
        out.gamma(k, 0) = num::scalar_sigmoid(u * out.s_ewma[k] + c);
    out.g = scale_rows(g, out.gamma);
    return out;
}

Matrix decode(const std::vector<Matrix>& g_buffer, const ModelParams& p,
              const ModelConfig& cfg) {
    if (g_buffer.size() != cfg.m)
        throw ShapeError("decode: buffer must hold exactly m matrices");
    // context is newest-first: g_t, g_{t-1}, ..., g_{t-m+1}
    std::vector<Matrix> parts;
    parts.reserve(cfg.m);
    for (auto it = g_buffer.rbegin(); it != g_buffer.rend(); ++it) {
        if (it->rows() != cfg.k || it->cols() != cfg.d)
            throw ShapeError("decode: buffer entry must be K x d");
        parts.push_back(*it);
    }
    Matrix context = hconcat(parts);
    Matrix trunk = relu(add_rowvec(matmul(context, p.set.value(kDecW)), p.set.value(kDecB)));
    return add(rowsum(hadamard(trunk, p.set.value(kHeadW))), p.set.value(kHeadB));
}

double loss(const Matrix& preds, const Matrix& targets, const Matrix& mask,
            const std::vector<double>& weights) {
    if (!preds.same_shape(targets) || !preds.same_shape(mask))
        throw ShapeError("loss: prediction/target/mask shapes disagree");
    if (weights.size() != preds.cols())
        throw ShapeError("loss: weight count must equal task count");
    // per-row subtotals and a final reciprocal multiply, in exactly the
    // order the tape program accumulates, so both paths agree bit for bit
    double sum = 0.0;
    std::size_t n_valid = 0;
    for (std::size_t pidx = 0; pidx < preds.rows(); ++pidx) {
        double row_sum = 0.0;
        for (std::size_t k = 0; k < preds.cols(); ++k) {
            if (mask(pidx, k) == 0.0) continue;
            double e = preds(pidx, k) - targets(pidx, k);
            row_sum += weights[k] * e * e;
            ++n_valid;
        }
        sum += row_sum;
    }
    if (n_valid == 0) throw DataError("loss: zero valid targets");
    return sum * (1.0 / static_cast<double>(n_valid));
}

namespace {

ForwardResult run_forward(const std::vector<Matrix>& inputs,
                          const graph::AdjacencyMatrix& adj, const ModelParams& p,
                          const ModelConfig& cfg) {
    std::size_t steps = inputs.size();
    if (steps < cfg.m) throw DataError("forward: fewer steps than decoder context");
    HiddenState state = HiddenState::initial(cfg);
    ForwardResult res;
    res.predictions = Matrix(steps - cfg.m + 1, cfg.k);
    for (std::size_t t = 0; t < steps; ++t) {
        const Matrix& x = inputs[t];
        StepTrace tr;
        tr.h = encode(x, p, cfg);
        auto [fused, alpha] = fuse_state(tr.h, state, p, cfg);
        tr.fused = fused;
        tr.alpha = std::move(alpha);
        tr.z = propagate(tr.fused, adj, p, cfg);
        auto [g, lambda] = gate_fuse(tr.z, tr.fused, x, state, p, cfg);
        tr.lambda = std::move(lambda);
        DynamicOut dyn = dynamic_adjust(g, x, state, p, cfg);
        tr.gamma = std::move(dyn.gamma);
        tr.g = dyn.g;

        state.fused = tr.fused;
        state.prev_input = x;
        state.s_ewma = std::move(dyn.s_ewma);
        state.g_buffer.push_back(dyn.g);
        if (state.g_buffer.size() > cfg.m) state.g_buffer.erase(state.g_buffer.begin());

        if (t + 1 >= cfg.m) {
            tr.prediction = decode(state.g_buffer, p, cfg);
            tr.has_prediction = true;
            std::size_t row = t + 1 - cfg.m;
            for (std::size_t k = 0; k < cfg.k; ++k)
                res.predictions(row, k) = tr.prediction(k, 0);
        }
        res.trace.steps.push_back(std::move(tr));
    }
    return res;
}

} // namespace

ForwardResult forward_window(const data::Window& window,
                             const graph::AdjacencyMatrix& adj, const ModelParams& p,
                             const ModelConfig& cfg) {
    if (window.inputs.size() != cfg.L)
        throw ShapeError("forward_window: window length must equal L");
    return run_forward(window.inputs, adj, p, cfg);
}

num::Value window_loss_program(num::Tape& tape, const std::vector<num::Value>& leaves,
                               const data::Window& window,
                               const graph::AdjacencyMatrix& adj,
                               const ModelConfig& cfg) {
    using num::Value;
    if (leaves.size() != kParamCount)
        throw ShapeError("window_loss_program: wrong leaf count");

    const Matrix& a_mat = cfg.use_graph ? adj.weights : Matrix::identity(cfg.k);
    Value a = tape.constant(a_mat);
    Value ones_k = tape.constant(Matrix(cfg.k, 1, 1.0));

    Value fused_prev = tape.constant(Matrix(cfg.k, cfg.d));
    Matrix prev_input(cfg.k, cfg.f);
    std::vector<double> s_ewma(cfg.k, 0.0);
    std::vector<Value> g_buffer;

    std::size_t n_valid = 0;
    for (std::size_t i = 0; i < window.target_mask.size(); ++i)
        if (window.target_mask.at(i) != 0.0) ++n_valid;
    if (n_valid == 0) throw DataError("window_loss_program: zero valid targets");

    Value total = tape.constant(Matrix::scalar(0.0));
    std::size_t steps = window.inputs.size();
    for (std::size_t t = 0; t < steps; ++t) {
        const Matrix& x_mat = window.inputs[t];
        Value x = tape.constant(x_mat);

        // encode
        Value h = tape.tanh(tape.add_rowvec(tape.matmul(x, leaves[kEncW]), leaves[kEncB]));

        // state fusion
        Value fused;
        if (cfg.use_fusion) {
            Value cat = tape.hconcat({h, fused_prev});
            Value alpha = tape.sigmoid(
                tape.add_rowvec(tape.matmul(cat, leaves[kFuseW]), leaves[kFuseB]));
            fused = tape.add(tape.scale_rows(h, alpha),
                             tape.scale_rows(fused_prev, tape.sub(ones_k, alpha)));
        } else {
            fused = h;
        }

        // graph propagation
        Value z = tape.sigmoid(tape.matmul(tape.matmul(a, fused), leaves[kPropW]));

        // fluctuation gate
        Matrix v = input_delta_norm(x_mat, prev_input);
        Value lambda = tape.sigmoid(tape.affine_scalar(v, leaves[kGateW], leaves[kGateB]));
        Value g = tape.add(tape.scale_rows(z, lambda),
                           tape.scale_rows(fused, tape.sub(ones_k, lambda)));

        // dynamic adjustment
        for (std::size_t k = 0; k < cfg.k; ++k)
            s_ewma[k] = kFluctuationDecay * s_ewma[k] +
                        (1.0 - kFluctuationDecay) * v(k, 0);
        if (cfg.use_dynamic) {
            Matrix s_mat(cfg.k, 1);
            for (std::size_t k = 0; k < cfg.k; ++k) s_mat(k, 0) = s_ewma[k];
            Value gamma = tape.sigmoid(tape.affine_scalar(s_mat, leaves[kDynU], leaves[kDynC]));
            g = tape.scale_rows(g, gamma);
        }

        fused_prev = fused;
        prev_input = x_mat;
        g_buffer.push_back(g);
        if (g_buffer.size() > cfg.m) g_buffer.erase(g_buffer.begin());

        // decode + loss contribution
        if (t + 1 >= cfg.m) {
            std::vector<Value> parts(g_buffer.rbegin(), g_buffer.rend());
            Value context = tape.hconcat(parts);
            Value trunk = tape.relu(
                tape.add_rowvec(tape.matmul(context, leaves[kDecW]), leaves[kDecB]));
            Value pred = tape.add(tape.rowsum(tape.hadamard(trunk, leaves[kHeadW])),
                                  leaves[kHeadB]);

            std::size_t row = t + 1 - cfg.m;
            Matrix target(cfg.k, 1), wmask(cfg.k, 1);
            for (std::size_t k = 0; k < cfg.k; ++k) {
                target(k, 0) = window.targets(row, k);
                wmask(k, 0) = cfg.task_weights[k] * window.target_mask(row, k);
            }
            Value err = tape.sub(pred, tape.constant(target));
            total = tape.add(total, tape.weighted_sq_sum(err, wmask));
        }
    }
    return tape.scale(total, 1.0 / static_cast<double>(n_valid));
}

TrainResult train(const data::WindowBatch& train_windows,
                  const data::WindowBatch& val_windows,
                  const graph::AdjacencyMatrix& adj, const ModelConfig& cfg,
                  const TrainConfig& tc) {
    if (train_windows.empty()) throw DataError("train: no training windows");

    num::RandomSource root(cfg.seed);
    ModelParams params = ModelParams::init(cfg, root.split(1));
    num::RandomSource shuffle_rng = root.split(2);

    num::OptimizerState opt = num::OptimizerState::init(params.set, tc.adam);

    auto val_loss = [&](const ModelParams& p) -> double {
        if (val_windows.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& w : val_windows) {
            ForwardResult fr = forward_window(w, adj, p, cfg);
            sum += loss(fr.predictions, w.targets, w.target_mask, cfg.task_weights);
        }
        return sum / static_cast<double>(val_windows.size());
    };

    TrainResult result;
    double best_val = std::numeric_limits<double>::infinity();
    ModelParams best_params = params;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train_windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
        try {
            if (tc.shuffle) {
                num::RandomSource r = shuffle_rng.split(epoch);
                for (std::size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[r.next_u64() % i]);
            }
            std::size_t n_use = order.size();
            if (tc.max_windows_per_epoch > 0)
                n_use = std::min(n_use, tc.max_windows_per_epoch);

            double epoch_loss = 0.0;
            std::size_t batch_n = std::max<std::size_t>(1, tc.batch);
            for (std::size_t start = 0; start < n_use; start += batch_n) {
                std::size_t end = std::min(start + batch_n, n_use);
                num::ParamSet grads;
                for (std::size_t i = 0; i < params.set.count(); ++i)
                    grads.add(params.set.name(i),
                              Matrix(params.set.value(i).rows(), params.set.value(i).cols()));
                for (std::size_t i = start; i < end; ++i) {
                    const data::Window& w = train_windows[order[i]];
                    num::EvalResult er = num::grad_eval(
                        [&](num::Tape& t, const std::vector<num::Value>& lv) {
                            return window_loss_program(t, lv, w, adj, cfg);
                        },
                        params.set);
                    epoch_loss += er.value;
                    for (std::size_t pi = 0; pi < grads.count(); ++pi) {
                        Matrix& dst = grads.value(pi);
                        const Matrix& src = er.grads.value(pi);
                        for (std::size_t j = 0; j < dst.size(); ++j) dst.at(j) += src.at(j);
                    }
                }
                double inv = 1.0 / static_cast<double>(end - start);
                for (std::size_t pi = 0; pi < grads.count(); ++pi)
                    for (std::size_t j = 0; j < grads.value(pi).size(); ++j)
                        grads.value(pi).at(j) *= inv;
                num::opt_step(params.set, grads, opt);
            }
            epoch_loss /= static_cast<double>(n_use);

            EpochLog log;
            log.epoch = epoch;
            log.train_loss = epoch_loss;
            log.val_loss = val_loss(params);
            result.log.push_back(log);

            if (!val_windows.empty() && tc.patience > 0) {
                if (log.val_loss < best_val) {
                    best_val = log.val_loss;
                    best_params = params;
                    since_best = 0;
                } else if (++since_best >= tc.patience) {
                    result.early_stopped = true;
                    params = best_params;
                    break;
                }
            }
        } catch (const NumericError& e) {
            throw NumericError("epoch " + std::to_string(epoch) + ": " + e.what());
        }
    }

    result.params = std::move(params);
    return result;
}

std::vector<double> predict(const data::AlignedSeries& series, std::size_t t,
                            const graph::AdjacencyMatrix& adj, const ModelParams& p,
                            const ModelConfig& cfg) {
    if (t < cfg.m || t > series.steps())
        throw DataError("predict: step index out of range");
    std::size_t start = t >= cfg.L ? t - cfg.L + 1 : 1; // 1-based
    std::vector<Matrix> inputs;
    for (std::size_t s = start; s <= t; ++s) {
        if (!series.step_valid(s - 1)) throw DataError("predict: invalid step in input range");
        inputs.push_back(series.step_matrix(s - 1));
    }
    ForwardResult fr = run_forward(inputs, adj, p, cfg);
    std::vector<double> out(cfg.k);
    std::size_t last = fr.predictions.rows() - 1;
    for (std::size_t k = 0; k < cfg.k; ++k) out[k] = fr.predictions(last, k);
    return out;
}

// --- persistence ---

namespace {

nlohmann::json config_to_json(const ModelConfig& cfg) {
    return nlohmann::json{
        {"k", cfg.k},           {"f", cfg.f},
        {"d", cfg.d},           {"m", cfg.m},
        {"tau", cfg.tau},       {"L", cfg.L},
        {"d_dec", cfg.d_dec},   {"use_graph", cfg.use_graph},
        {"use_fusion", cfg.use_fusion}, {"use_dynamic", cfg.use_dynamic},
        {"task_weights", cfg.task_weights}, {"seed", cfg.seed},
    };
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    cfg.k = j.at("k").get<std::size_t>();
    cfg.f = j.at("f").get<std::size_t>();
    cfg.d = j.at("d").get<std::size_t>();
    cfg.m = j.at("m").get<std::size_t>();
    cfg.tau = j.at("tau").get<std::size_t>();
    cfg.L = j.at("L").get<std::size_t>();
    cfg.d_dec = j.at("d_dec").get<std::size_t>();
    cfg.use_graph = j.at("use_graph").get<bool>();
    cfg.use_fusion = j.at("use_fusion").get<bool>();
    cfg.use_dynamic = j.at("use_dynamic").get<bool>();
    cfg.task_weights = j.at("task_weights").get<std::vector<double>>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.finalize();
    return cfg;
}

} // namespace

void save_model(const std::string& path, const ModelConfig& cfg, const ModelParams& p) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = config_to_json(cfg);
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [name, m] : p.set) {
        params[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
    }
    j["params"] = params;
    io::atomic_write_text(path, j.dump(2) + "\n");
}

std::pair<ModelConfig, ModelParams> load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad model file '" + path + "': " + e.what());
    }
    if (j.at("format_version").get<int>() != 1)
        throw DataError("unsupported model format version");
    ModelConfig cfg = config_from_json(j.at("config"));
    ModelParams p = ModelParams::zeros(cfg);
    for (const auto& spec : param_specs(cfg)) {
        const auto& pj = j.at("params").at(spec.name);
        if (pj.at("rows").get<std::size_t>() != spec.rows ||
            pj.at("cols").get<std::size_t>() != spec.cols)
            throw DataError(std::string("model file: shape mismatch for ") + spec.name);
        auto data = pj.at("data").get<std::vector<double>>();
        p.set[spec.name] = Matrix(spec.rows, spec.cols, std::move(data));
    }
    return {cfg, std::move(p)};
}

} // namespace fluxcast::model
