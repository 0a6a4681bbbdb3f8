#pragma once

#include <cstdint>
#include <vector>

#include "fluxcast/adjacency.hpp"
#include "fluxcast/series.hpp"

namespace fluxcast::data {

// Coupled-workload generator: a VAR(1) recurrence over a random graph,
//   x_t = rho * A_hat * x_{t-1} + (1 - rho) * mu_t + burst_t + eps_t
// per feature, with Poisson-timed bursts that decay geometrically and
// optional resampling of a fraction of edges at the drift steps.
struct SynthConfig {
    std::size_t k = 8;
    std::size_t f = 2;
    std::size_t t = 5000;
    double coupling = 0.6;          // rho in [0, 1)
    double graph_density = 0.3;     // probability of each directed edge
    double noise_scale = 0.1;
    double burst_rate = 5.0;        // expected events per 1000 steps
    double burst_magnitude = 2.0;
    double burst_decay = 0.7;       // geometric decay per step
    std::vector<std::size_t> drift_times;
    double drift_fraction = 0.3;    // fraction of edges resampled per drift
    double season_amplitude = 0.0;  // optional deterministic seasonal drive
    double season_period = 48.0;
    std::uint64_t seed = 1;
};

struct SynthResult {
    AlignedSeries series;
    graph::AdjacencyMatrix truth; // pre-drift row-normalized graph
};

// Deterministic given cfg.seed. Throws ConfigError if rho >= 1 or the
// spectral radius check on rho * A_hat fails.
SynthResult synth_generate(const SynthConfig& cfg);

} // namespace fluxcast::data
