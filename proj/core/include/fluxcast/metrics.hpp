#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluxcast/matrix.hpp"

namespace fluxcast::eval {

// Guard for MAPE denominators; targets are normalized and cross zero.
inline constexpr double kMapeEpsilon = 1e-3;

// Scalar metrics over paired vectors (valid pairs only).
double mse(const std::vector<double>& preds, const std::vector<double>& targets);
double mae(const std::vector<double>& preds, const std::vector<double>& targets);
// 100 * mean(|e| / max(|y|, kMapeEpsilon)).
double mape(const std::vector<double>& preds, const std::vector<double>& targets);
// MAE / mean(|y|): relative MAE.
double rmae(const std::vector<double>& preds, const std::vector<double>& targets);

// Masked matrix forms; preds/targets/mask share one shape, column = task.
double mse(const num::Matrix& preds, const num::Matrix& targets, const num::Matrix& mask);
double mae(const num::Matrix& preds, const num::Matrix& targets, const num::Matrix& mask);
double mape(const num::Matrix& preds, const num::Matrix& targets, const num::Matrix& mask);
double rmae(const num::Matrix& preds, const num::Matrix& targets, const num::Matrix& mask);

struct TaskMetrics {
    std::size_t count = 0;
    double mse = 0.0;
    double mae = 0.0;
    double mape = 0.0;
    double rmae = 0.0;
};

struct MetricsReport {
    std::vector<TaskMetrics> per_task;
    TaskMetrics aggregate; // count-weighted mean of per-task values
    std::string config_fingerprint;
    std::uint64_t seed = 0;
    bool normalized_scale = true;
    std::string rmae_definition = "mae/mean|y|";
    double mape_epsilon = kMapeEpsilon;
    // Measured, never serialized into canonical artifacts; re-runs must be
    // byte-identical.
    double wall_clock_seconds = 0.0;
};

// Builds per-task metrics from stacked (pred, target, mask) rows and the
// count-weighted aggregate.
MetricsReport build_report(const num::Matrix& preds, const num::Matrix& targets,
                           const num::Matrix& mask);

std::string report_to_json(const MetricsReport& report);
// One row per task plus an "aggregate" row.
std::string report_to_csv(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

} // namespace fluxcast::eval
