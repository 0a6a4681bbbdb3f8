#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fluxcast/adjacency.hpp"
#include "fluxcast/optimizer.hpp"
#include "fluxcast/random.hpp"
#include "fluxcast/series.hpp"
#include "fluxcast/tape.hpp"

namespace fluxcast::model {

struct ModelConfig {
    std::size_t k = 4;   // nodes / tasks
    std::size_t f = 2;   // raw features per node
    std::size_t d = 16;  // hidden width
    std::size_t m = 2;   // decoder context length
    std::size_t tau = 1; // prediction offset
    std::size_t L = 16;  // training window length
    std::size_t d_dec = 0; // decoder trunk width; 0 means d
    bool use_graph = true;
    bool use_fusion = true;
    bool use_dynamic = true;
    std::vector<double> task_weights; // empty means uniform
    std::uint64_t seed = 1;

    std::size_t dec_width() const { return d_dec == 0 ? d : d_dec; }
    // Validates ranges and rescales task_weights to sum to k.
    void finalize();
};

// All learnable parameters. Layout (names / shapes):
//   enc.W (f x d), enc.b (1 x d)        shared encoder
//   fuse.w (2d x 1), fuse.b (1 x 1)     state-fusion gate
//   prop.W (d x d)                       graph propagation transform
//   gate.w, gate.b (1 x 1)               fluctuation gate
//   dyn.u, dyn.c (1 x 1)                 adaptive control unit
//   dec.W (m*d x d_dec), dec.b (1 x d_dec)  shared decoder trunk
//   head.W (k x d_dec), head.b (k x 1)   task-exclusive heads
struct ModelParams {
    num::ParamSet set;

    static ModelParams init(const ModelConfig& cfg, num::RandomSource rng);
    static ModelParams zeros(const ModelConfig& cfg);
};

struct HiddenState {
    num::Matrix fused;                   // K x d, previous fused state
    std::vector<num::Matrix> g_buffer;   // newest last, up to m entries, K x d
    num::Matrix prev_input;              // K x F
    std::vector<double> s_ewma;          // K fluctuation accumulators

    static HiddenState initial(const ModelConfig& cfg);
};

// EWMA decay for the fluctuation intensity s_t.
inline constexpr double kFluctuationDecay = 0.9;

struct StepTrace {
    num::Matrix h, alpha, fused, z, lambda, gamma, g;
    bool has_prediction = false;
    num::Matrix prediction; // K x 1
};

struct ForwardTrace {
    std::vector<StepTrace> steps;
};

// --- single-step operations (state is advanced by the caller via the
// returned pieces; forward_window drives the full pipeline) ---

// Eq-style shared encoding: tanh(x W_e + b_e), one row per node.
num::Matrix encode(const num::Matrix& x, const ModelParams& p, const ModelConfig& cfg);

// Convex blend of the current encoding with the previous fused state.
// Returns (fused K x d, alpha K x 1).
std::pair<num::Matrix, num::Matrix> fuse_state(const num::Matrix& h,
                                               const HiddenState& state,
                                               const ModelParams& p,
                                               const ModelConfig& cfg);

// sigmoid(A * fused * W_s); identity graph when use_graph is off.
num::Matrix propagate(const num::Matrix& fused, const graph::AdjacencyMatrix& adj,
                      const ModelParams& p, const ModelConfig& cfg);

// Fluctuation-driven convex gate between propagated and fused states.
// Returns (g K x d, lambda K x 1).
std::pair<num::Matrix, num::Matrix> gate_fuse(const num::Matrix& z,
                                              const num::Matrix& fused,
                                              const num::Matrix& x,
                                              const HiddenState& state,
                                              const ModelParams& p,
                                              const ModelConfig& cfg);

struct DynamicOut {
    num::Matrix g;        // K x d, modulated
    num::Matrix gamma;    // K x 1
    std::vector<double> s_ewma; // updated accumulators
};

// Per-node multiplicative modulation by gamma = sigmoid(u * s + c), where s
// is an EWMA of input change magnitude.
DynamicOut dynamic_adjust(const num::Matrix& g, const num::Matrix& x,
                          const HiddenState& state, const ModelParams& p,
                          const ModelConfig& cfg);

// Shared trunk + task-exclusive heads over the last m g matrices
// (newest first in the context). Returns K x 1 predictions.
num::Matrix decode(const std::vector<num::Matrix>& g_buffer, const ModelParams& p,
                   const ModelConfig& cfg);

// Weighted squared error, mean over valid (step, task) pairs. preds and
// targets are n_pred x K; mask entries are 0/1; weights must have size K.
double loss(const num::Matrix& preds, const num::Matrix& targets,
            const num::Matrix& mask, const std::vector<double>& weights);

struct ForwardResult {
    num::Matrix predictions; // (L-m+1) x K, rows are prediction positions m..L
    ForwardTrace trace;
};

// Runs steps 1..L with freshly zeroed state, emitting one decode per step
// t >= m.
ForwardResult forward_window(const data::Window& window,
                             const graph::AdjacencyMatrix& adj,
                             const ModelParams& p, const ModelConfig& cfg);

// Tape program computing the window loss; used by training and grad checks.
// Leaves must be in ModelParams::set order. Returns a 1x1 value.
num::Value window_loss_program(num::Tape& tape, const std::vector<num::Value>& leaves,
                               const data::Window& window,
                               const graph::AdjacencyMatrix& adj,
                               const ModelConfig& cfg);

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch = 8;
    std::size_t patience = 0; // 0 disables early stop
    std::size_t max_windows_per_epoch = 0; // 0 means all
    bool shuffle = true;
    num::AdamConfig adam{};
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    ModelParams params;
    std::vector<EpochLog> log;
    bool early_stopped = false;
};

TrainResult train(const data::WindowBatch& train_windows,
                  const data::WindowBatch& val_windows,
                  const graph::AdjacencyMatrix& adj, const ModelConfig& cfg,
                  const TrainConfig& tc);

// Forecast at 1-based step t: runs forward over steps max(1, t-L+1)..t and
// returns the decode output at t (K values, targets step t+tau).
std::vector<double> predict(const data::AlignedSeries& series, std::size_t t,
                            const graph::AdjacencyMatrix& adj, const ModelParams& p,
                            const ModelConfig& cfg);

// JSON persistence; round-trips 64-bit floats exactly.
void save_model(const std::string& path, const ModelConfig& cfg, const ModelParams& p);
std::pair<ModelConfig, ModelParams> load_model(const std::string& path);

} // namespace fluxcast::model
