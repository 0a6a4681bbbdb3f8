#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluxcast/matrix.hpp"

namespace fluxcast::data {
class AlignedSeries;
}

namespace fluxcast::graph {

// Row-stochastic K x K inter-task structure. Every row sums to 1 and the
// diagonal is strictly positive (self-loops are mandatory).
struct AdjacencyMatrix {
    num::Matrix weights; // K x K

    std::size_t k() const { return weights.rows(); }
};

struct TopologyEdge {
    std::string src;
    std::string dst;
    double weight = 1.0;
};

struct TopologySpec {
    std::vector<std::string> nodes;
    std::vector<TopologyEdge> edges;

    static TopologySpec from_json_file(const std::string& path);
    static TopologySpec from_json_text(const std::string& text);
};

// Directed adjacency from an explicit edge list, unit self-loops added,
// then row-normalized. Throws DataError on unknown node ids.
AdjacencyMatrix adjacency_from_topology(const TopologySpec& spec);

struct CorrelationResult {
    AdjacencyMatrix adjacency;
    // Nodes whose target feature was constant over the valid steps; they
    // keep only their self-loop.
    std::vector<std::size_t> constant_nodes;
};

// Edges from pairwise Pearson correlation of the target feature, keeping
// |rho| >= threshold; self-loops weight 1; row-normalized.
CorrelationResult adjacency_from_correlation(const data::AlignedSeries& series,
                                             std::size_t target_feature,
                                             double threshold);

// Divides each row by its sum. Entries must be nonnegative and no row may
// be all zero.
AdjacencyMatrix row_normalize(const num::Matrix& raw);

} // namespace fluxcast::graph
