#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluxcast/model.hpp"
#include "fluxcast/synth.hpp"

namespace fluxcast::cfg {

struct DataSection {
    std::string dir; // dataset directory (synth or ingest output)
    double clip_low = 0.005;
    double clip_high = 0.995;
    double train_ratio = 0.7;
    double val_ratio = 0.1;
    double test_ratio = 0.2;
};

struct AdjacencySection {
    std::string mode = "identity"; // topology | correlation | identity | truth
    std::string topology_file;
    double threshold = 0.5;
};

struct EvalSection {
    bool denormalized = false;
};

struct SweepSection {
    std::vector<std::size_t> hidden_dims{2, 8, 32, 128};
    std::vector<std::size_t> horizons{1, 2, 4, 8};
    std::size_t n_seeds = 3;
    bool parallel = false;
};

// Whole-run configuration. Parsing is strict: unknown keys anywhere are
// fatal. The canonical resolved document is echoed into every artifact.
struct RunConfig {
    std::uint64_t seed = 1;
    std::optional<data::SynthConfig> synth;
    DataSection data;
    model::ModelConfig model; // k/f of 0 mean "infer from the dataset"
    model::TrainConfig train;
    AdjacencySection adjacency;
    EvalSection eval;
    SweepSection sweep;

    std::string resolved_json; // canonical echo of the parsed document
    std::string fingerprint() const;

    static RunConfig from_json_text(const std::string& text);
    static RunConfig from_json_file(const std::string& path);
};

} // namespace fluxcast::cfg
