#include "fluxcast/synth.hpp"

#include <cmath>

#include "fluxcast/random.hpp"

namespace fluxcast::data {

namespace {

// Power-iteration spectral radius estimate.
double spectral_radius(const num::Matrix& a, std::size_t iters = 100) {
    std::size_t n = a.rows();
    num::Matrix v(n, 1, 1.0);
    double lambda = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        num::Matrix w = num::matmul(a, v);
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += w(i, 0) * w(i, 0);
        norm = std::sqrt(norm);
        if (norm < 1e-300) return 0.0;
        lambda = norm;
        v = num::scale(w, 1.0 / norm);
    }
    return lambda;
}

num::Matrix sample_graph(std::size_t k, double density, num::RandomSource& rng) {
    num::Matrix raw(k, k);
    for (std::size_t i = 0; i < k; ++i) raw(i, i) = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            if (rng.next_double() < density) raw(i, j) = rng.uniform(0.5, 1.0);
        }
    return raw;
}

} // namespace

SynthResult synth_generate(const SynthConfig& cfg) {
    if (cfg.k < 1 || cfg.f < 1 || cfg.t < 1) throw ConfigError("synth: k, f, t must be >= 1");
    if (cfg.coupling < 0.0 || cfg.coupling >= 1.0)
        throw ConfigError("synth: coupling must be in [0, 1)");
    if (cfg.graph_density < 0.0 || cfg.graph_density > 1.0)
        throw ConfigError("synth: graph_density must be in [0, 1]");

    num::RandomSource root(cfg.seed);
    num::RandomSource graph_rng = root.split(1);
    num::RandomSource noise_rng = root.split(2);
    num::RandomSource burst_rng = root.split(3);
    num::RandomSource level_rng = root.split(4);

    num::Matrix raw = sample_graph(cfg.k, cfg.graph_density, graph_rng);
    graph::AdjacencyMatrix truth = graph::row_normalize(raw);
    num::Matrix transition = num::scale(truth.weights, cfg.coupling);
    if (spectral_radius(transition) >= 1.0 - 1e-9)
        throw ConfigError("synth: spectral radius of rho*A is not < 1");

    // per-(node, feature) baseline levels and phases
    std::vector<double> mu(cfg.k * cfg.f), phase(cfg.k * cfg.f);
    for (std::size_t i = 0; i < cfg.k * cfg.f; ++i) {
        mu[i] = level_rng.uniform(1.0, 5.0);
        phase[i] = level_rng.uniform(0.0, 6.283185307179586);
    }

    AlignedSeries series(cfg.t, cfg.k, cfg.f);
    for (std::size_t k = 0; k < cfg.k; ++k)
        series.node_ids.push_back("node-" + std::to_string(k));
    for (std::size_t f = 0; f < cfg.f; ++f)
        series.feature_names.push_back("feat-" + std::to_string(f));
    series.target_feature = 0;
    series.bucket_seconds = 60.0;

    num::Matrix a_hat = truth.weights;
    double burst_p = cfg.burst_rate / 1000.0;
    std::vector<double> state(cfg.k * cfg.f), burst_level(cfg.k, 0.0);
    std::size_t next_drift = 0;

    for (std::size_t t = 0; t < cfg.t; ++t) {
        if (next_drift < cfg.drift_times.size() && t == cfg.drift_times[next_drift]) {
            // resample a fraction of off-diagonal entries; the emitted
            // ground truth stays the pre-drift graph
            num::Matrix drifted = a_hat;
            for (std::size_t i = 0; i < cfg.k; ++i)
                for (std::size_t j = 0; j < cfg.k; ++j) {
                    if (i == j) continue;
                    if (graph_rng.next_double() < cfg.drift_fraction)
                        drifted(i, j) = graph_rng.next_double() < cfg.graph_density
                                            ? graph_rng.uniform(0.5, 1.0)
                                            : 0.0;
                }
            a_hat = graph::row_normalize(drifted).weights;
            ++next_drift;
        }

        for (std::size_t k = 0; k < cfg.k; ++k) {
            burst_level[k] *= cfg.burst_decay;
            if (burst_rng.next_double() < burst_p)
                burst_level[k] += cfg.burst_magnitude * burst_rng.uniform(0.5, 1.5);
        }

        std::vector<double> next(cfg.k * cfg.f);
        for (std::size_t f = 0; f < cfg.f; ++f) {
            for (std::size_t k = 0; k < cfg.k; ++k) {
                double coupled = 0.0;
                if (t > 0)
                    for (std::size_t j = 0; j < cfg.k; ++j)
                        coupled += a_hat(k, j) * state[j * cfg.f + f];
                double drive = mu[k * cfg.f + f];
                if (cfg.season_amplitude != 0.0)
                    drive += cfg.season_amplitude *
                             std::sin(6.283185307179586 * static_cast<double>(t) /
                                          cfg.season_period +
                                      phase[k * cfg.f + f]);
                double v = cfg.coupling * coupled + (1.0 - cfg.coupling) * drive +
                           burst_level[k] + cfg.noise_scale * noise_rng.next_normal();
                next[k * cfg.f + f] = v;
                series.value(t, k, f) = v;
            }
        }
        state = std::move(next);
    }

    return SynthResult{std::move(series), std::move(truth)};
}

} // namespace fluxcast::data
