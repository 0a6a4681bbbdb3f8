#pragma once

#include "fluxcast/evaluate.hpp"

namespace fluxcast::eval {

// Shared input for sensitivity sweeps: normalized chronological splits plus
// the base model/training configuration. Cells derive their RNG sub-stream
// from (master_seed, grid point, seed index), so results do not depend on
// execution order.
struct SweepInput {
    data::AlignedSeries train, val, test;
    graph::AdjacencyMatrix adj;
    model::ModelConfig base;
    model::TrainConfig tc;
    std::uint64_t master_seed = 1;
    std::size_t n_seeds = 3;
    bool parallel = false;
};

struct SweepCell {
    double axis_value = 0.0;    // hidden dim, horizon, or ablation index
    std::string label;          // "d=32", "tau=4", "no_graph", ...
    std::string variant = "model"; // "model" or "persistence"
    std::size_t seed_index = 0;
    std::uint64_t seed = 0;     // derived model seed
    MetricsReport report;
};

struct SweepTable {
    std::string axis_name; // "hidden" | "horizon" | "ablation"
    std::vector<SweepCell> cells;
};

SweepTable sweep_hidden(const std::vector<std::size_t>& dims, const SweepInput& in);

// One model per (tau, seed); a deterministic persistence cell is emitted
// alongside each tau.
SweepTable sweep_horizon(const std::vector<std::size_t>& taus, const SweepInput& in);

// Runs {full, no_graph, no_fusion, no_dynamic} with shared per-seed RNG
// streams so ablations are paired.
SweepTable ablation_suite(const SweepInput& in);

std::string sweep_to_json(const SweepTable& table);
std::string sweep_to_csv(const SweepTable& table);

// Median of the aggregate MSE over cells matching (label, variant).
double median_mse(const SweepTable& table, const std::string& label,
                  const std::string& variant = "model");

} // namespace fluxcast::eval
