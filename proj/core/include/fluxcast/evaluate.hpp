#pragma once

#include "fluxcast/metrics.hpp"
#include "fluxcast/model.hpp"

namespace fluxcast::eval {

// Deterministic pass over test windows; metrics on the normalized scale by
// default. When denormalize is set, predictions and targets are mapped back
// through the per-task stats before scoring.
struct EvalOptions {
    bool denormalize = false;
    const data::NormStats* stats = nullptr; // required when denormalize
};

MetricsReport evaluate(const model::ModelParams& params, const model::ModelConfig& cfg,
                       const graph::AdjacencyMatrix& adj,
                       const data::WindowBatch& test_windows,
                       const EvalOptions& opts = {});

// Persistence forecast over the same windows: prediction at position p is
// the target feature observed at the corresponding input step.
MetricsReport baseline_persistence(const data::WindowBatch& windows,
                                   std::size_t target_feature, std::size_t m);

// Point forecast y_hat(t+tau) = y(t); t is 1-based.
std::vector<double> persistence_forecast(const data::AlignedSeries& series, std::size_t t);

struct MlpBaselineConfig {
    std::size_t hidden = 16;
    std::size_t epochs = 100;
    std::size_t batch = 8;
    std::size_t max_windows_per_epoch = 0;
    num::AdamConfig adam{};
    std::uint64_t seed = 1;
};

// Per-task feed-forward straw baseline: one hidden layer over the flattened
// L x F inputs of node k only, one sample per window (targets the window's
// last prediction position). No cross-node terms, no recurrence.
MetricsReport baseline_mlp(const data::WindowBatch& train_windows,
                           const data::WindowBatch& test_windows,
                           const MlpBaselineConfig& cfg);

} // namespace fluxcast::eval
