#include "fluxcast/evaluate.hpp"

#include <chrono>
#include <cmath>

#include "fluxcast/gradcheck.hpp"

namespace fluxcast::eval {

using num::Matrix;

namespace {

// Stacks per-window prediction rows into one (pred, target, mask) triple.
struct Stacked {
    Matrix preds, targets, mask;
};

Stacked stack_windows(const data::WindowBatch& windows, std::size_t k) {
    std::size_t rows = 0;
    for (const auto& w : windows) rows += w.targets.rows();
    Stacked st{Matrix(rows, k), Matrix(rows, k), Matrix(rows, k)};
    return st;
}

void maybe_denormalize(Matrix& preds, Matrix& targets, const EvalOptions& opts,
                       std::size_t target_feature) {
    if (!opts.denormalize) return;
    if (opts.stats == nullptr)
        throw ConfigError("evaluate: denormalize requires stats");
    for (std::size_t i = 0; i < preds.rows(); ++i)
        for (std::size_t kk = 0; kk < preds.cols(); ++kk) {
            double mean = opts.stats->mean_at(kk, target_feature);
            double sd = opts.stats->std_at(kk, target_feature);
            preds(i, kk) = preds(i, kk) * sd + mean;
            targets(i, kk) = targets(i, kk) * sd + mean;
        }
}

} // namespace

MetricsReport evaluate(const model::ModelParams& params, const model::ModelConfig& cfg,
                       const graph::AdjacencyMatrix& adj,
                       const data::WindowBatch& test_windows,
                       const EvalOptions& opts) {
    if (test_windows.empty()) throw DataError("evaluate: no test windows");
    auto t0 = std::chrono::steady_clock::now();

    Stacked st = stack_windows(test_windows, cfg.k);
    std::size_t row = 0;
    for (const auto& w : test_windows) {
        model::ForwardResult fr = model::forward_window(w, adj, params, cfg);
        for (std::size_t p = 0; p < w.targets.rows(); ++p, ++row) {
            for (std::size_t k = 0; k < cfg.k; ++k) {
                st.preds(row, k) = fr.predictions(p, k);
                st.targets(row, k) = w.targets(p, k);
                st.mask(row, k) = w.target_mask(p, k);
            }
        }
    }
    maybe_denormalize(st.preds, st.targets, opts, 0);

    MetricsReport report = build_report(st.preds, st.targets, st.mask);
    report.seed = cfg.seed;
    report.normalized_scale = !opts.denormalize;
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

MetricsReport baseline_persistence(const data::WindowBatch& windows,
                                   std::size_t target_feature, std::size_t m) {
    if (windows.empty()) throw DataError("baseline_persistence: no windows");
    std::size_t k = windows.front().targets.cols();
    Stacked st = stack_windows(windows, k);
    std::size_t row = 0;
    for (const auto& w : windows) {
        for (std::size_t p = 0; p < w.targets.rows(); ++p, ++row) {
            // prediction position p corresponds to input step index p+m-1
            const Matrix& x = w.inputs[p + m - 1];
            for (std::size_t kk = 0; kk < k; ++kk) {
                st.preds(row, kk) = x(kk, target_feature);
                st.targets(row, kk) = w.targets(p, kk);
                st.mask(row, kk) = w.target_mask(p, kk);
            }
        }
    }
    return build_report(st.preds, st.targets, st.mask);
}

std::vector<double> persistence_forecast(const data::AlignedSeries& series, std::size_t t) {
    if (t < 1 || t > series.steps()) throw DataError("persistence_forecast: step out of range");
    std::vector<double> out(series.nodes());
    for (std::size_t k = 0; k < series.nodes(); ++k)
        out[k] = series.value(t - 1, k, series.target_feature);
    return out;
}

namespace {

// Tape program: squared error of one task's MLP on one sample.
num::Value mlp_sample_loss(num::Tape& tape, const std::vector<num::Value>& leaves,
                           const Matrix& input_row, double target) {
    num::Value x = tape.constant(input_row); // 1 x (L*F)
    num::Value hidden = tape.relu(tape.add_rowvec(tape.matmul(x, leaves[0]), leaves[1]));
    num::Value out = tape.add(tape.matmul(hidden, leaves[2]), leaves[3]); // 1 x 1
    num::Value err = tape.sub(out, tape.constant(Matrix::scalar(target)));
    return tape.weighted_sq_sum(err, Matrix::scalar(1.0));
}

} // namespace

MetricsReport baseline_mlp(const data::WindowBatch& train_windows,
                           const data::WindowBatch& test_windows,
                           const MlpBaselineConfig& cfg) {
    if (train_windows.empty() || test_windows.empty())
        throw DataError("baseline_mlp: empty window set");
    std::size_t k = train_windows.front().targets.cols();
    std::size_t L = train_windows.front().inputs.size();
    std::size_t f = train_windows.front().inputs.front().cols();
    std::size_t in_dim = L * f;

    Matrix preds(test_windows.size(), k);
    Matrix targets(test_windows.size(), k);
    Matrix mask(test_windows.size(), k);

    num::RandomSource root(cfg.seed);
    for (std::size_t task = 0; task < k; ++task) {
        num::RandomSource rng = root.split(task + 1);
        num::ParamSet params;
        double b1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
        double b2 = 1.0 / std::sqrt(static_cast<double>(cfg.hidden));
        Matrix w1(in_dim, cfg.hidden), bias1(1, cfg.hidden), w2(cfg.hidden, 1),
            bias2(1, 1);
        for (std::size_t i = 0; i < w1.size(); ++i) w1.at(i) = rng.uniform(-b1, b1);
        for (std::size_t i = 0; i < bias1.size(); ++i) bias1.at(i) = rng.uniform(-b1, b1);
        for (std::size_t i = 0; i < w2.size(); ++i) w2.at(i) = rng.uniform(-b2, b2);
        bias2.at(0) = rng.uniform(-b2, b2);
        params.add("w1", std::move(w1));
        params.add("b1", std::move(bias1));
        params.add("w2", std::move(w2));
        params.add("b2", std::move(bias2));

        auto flatten = [&](const data::Window& w) {
            Matrix row(1, in_dim);
            for (std::size_t t = 0; t < L; ++t)
                for (std::size_t ff = 0; ff < f; ++ff)
                    row(0, t * f + ff) = w.inputs[t](task, ff);
            return row;
        };
        auto last_target = [&](const data::Window& w, double& target, bool& valid) {
            std::size_t p = w.targets.rows() - 1;
            target = w.targets(p, task);
            valid = w.target_mask(p, task) != 0.0;
        };

        num::OptimizerState opt = num::OptimizerState::init(params, cfg.adam);
        num::RandomSource shuffle_rng = rng.split(0x5175);
        std::vector<std::size_t> order(train_windows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            num::RandomSource r = shuffle_rng.split(epoch);
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[r.next_u64() % i]);
            std::size_t n_use = order.size();
            if (cfg.max_windows_per_epoch > 0)
                n_use = std::min(n_use, cfg.max_windows_per_epoch);
            std::size_t batch_n = std::max<std::size_t>(1, cfg.batch);
            for (std::size_t start = 0; start < n_use; start += batch_n) {
                std::size_t end = std::min(start + batch_n, n_use);
                num::ParamSet grads;
                for (std::size_t i = 0; i < params.count(); ++i)
                    grads.add(params.name(i),
                              Matrix(params.value(i).rows(), params.value(i).cols()));
                std::size_t used = 0;
                for (std::size_t i = start; i < end; ++i) {
                    const data::Window& w = train_windows[order[i]];
                    double target;
                    bool valid;
                    last_target(w, target, valid);
                    if (!valid) continue;
                    Matrix input_row = flatten(w);
                    num::EvalResult er = num::grad_eval(
                        [&](num::Tape& t, const std::vector<num::Value>& lv) {
                            return mlp_sample_loss(t, lv, input_row, target);
                        },
                        params);
                    for (std::size_t pi = 0; pi < grads.count(); ++pi)
                        for (std::size_t j = 0; j < grads.value(pi).size(); ++j)
                            grads.value(pi).at(j) += er.grads.value(pi).at(j);
                    ++used;
                }
                if (used == 0) continue;
                for (std::size_t pi = 0; pi < grads.count(); ++pi)
                    for (std::size_t j = 0; j < grads.value(pi).size(); ++j)
                        grads.value(pi).at(j) /= static_cast<double>(used);
                num::opt_step(params, grads, opt);
            }
        }

        // inference on test windows
        for (std::size_t i = 0; i < test_windows.size(); ++i) {
            const data::Window& w = test_windows[i];
            Matrix input_row = flatten(w);
            Matrix hidden = num::relu(num::add_rowvec(num::matmul(input_row, params["w1"]),
                                                      params["b1"]));
            Matrix out = num::add(num::matmul(hidden, params["w2"]), params["b2"]);
            double target;
            bool valid;
            last_target(w, target, valid);
            preds(i, task) = out.at(0);
            targets(i, task) = target;
            mask(i, task) = valid ? 1.0 : 0.0;
        }
    }

    MetricsReport report = build_report(preds, targets, mask);
    report.seed = cfg.seed;
    return report;
}

} // namespace fluxcast::eval
