#include "fluxcast/adjacency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fluxcast/series.hpp"

namespace fluxcast::graph {

TopologySpec TopologySpec::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad topology JSON: ") + e.what());
    }
    TopologySpec spec;
    for (const auto& n : j.at("nodes")) spec.nodes.push_back(n.get<std::string>());
    if (j.contains("edges")) {
        for (const auto& e : j.at("edges")) {
            TopologyEdge edge;
            edge.src = e.at("src").get<std::string>();
            edge.dst = e.at("dst").get<std::string>();
            if (e.contains("weight")) edge.weight = e.at("weight").get<double>();
            if (edge.weight < 0.0) throw DataError("negative edge weight");
            spec.edges.push_back(std::move(edge));
        }
    }
    // duplicate node ids are a spec violation
    auto sorted = spec.nodes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw DataError("duplicate node id in topology");
    return spec;
}

TopologySpec TopologySpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open topology file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

AdjacencyMatrix row_normalize(const num::Matrix& raw) {
    if (raw.rows() != raw.cols()) throw ShapeError("row_normalize: matrix not square");
    for (std::size_t i = 0; i < raw.size(); ++i)
        if (raw.at(i) < 0.0) throw DataError("row_normalize: negative entry");
    num::Matrix out(raw.rows(), raw.cols());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < raw.cols(); ++j) sum += raw(i, j);
        if (sum <= 0.0) throw DataError("row_normalize: all-zero row");
        for (std::size_t j = 0; j < raw.cols(); ++j) out(i, j) = raw(i, j) / sum;
    }
    return AdjacencyMatrix{std::move(out)};
}

AdjacencyMatrix adjacency_from_topology(const TopologySpec& spec) {
    std::size_t k = spec.nodes.size();
    num::Matrix raw(k, k);
    auto index_of = [&](const std::string& id) -> std::size_t {
        for (std::size_t i = 0; i < k; ++i)
            if (spec.nodes[i] == id) return i;
        throw DataError("unknown node '" + id + "' in edge list");
    };
    for (const auto& e : spec.edges) {
        std::size_t s = index_of(e.src);
        std::size_t d = index_of(e.dst);
        raw(s, d) += e.weight;
    }
    for (std::size_t i = 0; i < k; ++i) raw(i, i) += 1.0; // self-loops
    return row_normalize(raw);
}

CorrelationResult adjacency_from_correlation(const data::AlignedSeries& series,
                                             std::size_t target_feature,
                                             double threshold) {
    if (threshold < 0.0 || threshold > 1.0)
        throw ConfigError("correlation threshold must be in [0, 1]");
    std::size_t K = series.nodes();
    std::size_t T = series.steps();

    // collect the target feature over steps where both nodes are valid;
    // for mean/var use each node's own valid steps
    std::vector<std::size_t> valid_steps;
    for (std::size_t t = 0; t < T; ++t)
        if (series.step_valid(t)) valid_steps.push_back(t);
    if (valid_steps.size() < 3)
        throw DataError("correlation needs at least 3 valid steps");

    std::vector<double> mean(K, 0.0), sd(K, 0.0);
    std::vector<bool> constant(K, false);
    for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0, sq = 0.0;
        for (std::size_t t : valid_steps) {
            double v = series.value(t, k, target_feature);
            s += v;
            sq += v * v;
        }
        double n = static_cast<double>(valid_steps.size());
        mean[k] = s / n;
        double var = sq / n - mean[k] * mean[k];
        if (var <= 1e-24) {
            constant[k] = true;
        } else {
            sd[k] = std::sqrt(var);
        }
    }

    num::Matrix raw(K, K);
    for (std::size_t i = 0; i < K; ++i) raw(i, i) = 1.0;
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = i + 1; j < K; ++j) {
            if (constant[i] || constant[j]) continue;
            double cov = 0.0;
            for (std::size_t t : valid_steps)
                cov += (series.value(t, i, target_feature) - mean[i]) *
                       (series.value(t, j, target_feature) - mean[j]);
            cov /= static_cast<double>(valid_steps.size());
            double rho = std::fabs(cov / (sd[i] * sd[j]));
            if (rho > 1.0) rho = 1.0; // numeric guard
            if (rho >= threshold) {
                raw(i, j) = rho;
                raw(j, i) = rho;
            }
        }
    }

    CorrelationResult res;
    res.adjacency = row_normalize(raw);
    for (std::size_t k = 0; k < K; ++k)
        if (constant[k]) res.constant_nodes.push_back(k);
    return res;
}

} // namespace fluxcast::graph
