#include "fluxcast/series_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fluxcast/jsonio.hpp"

namespace fluxcast::data {

namespace fs = std::filesystem;

void save_series_dir(const std::string& dir, const AlignedSeries& series,
                     const std::string& config_echo,
                     const graph::AdjacencyMatrix* truth) {
    fs::create_directories(dir);

    // CSV body: one row per (step, node)
    std::ostringstream csv;
    csv.precision(17);
    csv << "step,node";
    for (const auto& f : series.feature_names) csv << ',' << f;
    csv << '\n';
    for (std::size_t t = 0; t < series.steps(); ++t) {
        for (std::size_t k = 0; k < series.nodes(); ++k) {
            csv << t << ',' << series.node_ids[k];
            for (std::size_t f = 0; f < series.features(); ++f)
                csv << ',' << series.value(t, k, f);
            csv << '\n';
        }
    }
    io::atomic_write_text(dir + "/series.csv", csv.str());

    // sidecar: invalid spans per node, [begin, end)
    nlohmann::json side;
    side["steps"] = series.steps();
    side["node_ids"] = series.node_ids;
    side["feature_names"] = series.feature_names;
    side["target_feature"] = series.target_feature;
    side["bucket_seconds"] = series.bucket_seconds;
    side["start_timestamp"] = series.start_timestamp;
    nlohmann::json spans = nlohmann::json::array();
    for (std::size_t k = 0; k < series.nodes(); ++k) {
        nlohmann::json node_spans = nlohmann::json::array();
        std::size_t t = 0;
        while (t < series.steps()) {
            if (series.valid(t, k)) {
                ++t;
                continue;
            }
            std::size_t begin = t;
            while (t < series.steps() && !series.valid(t, k)) ++t;
            node_spans.push_back({{"begin", begin}, {"end", t}});
        }
        spans.push_back(std::move(node_spans));
    }
    side["invalid_spans"] = spans;
    io::atomic_write_text(dir + "/series.json", side.dump(2) + "\n");

    if (truth != nullptr) {
        nlohmann::json adj;
        adj["k"] = truth->k();
        adj["weights"] = truth->weights.data();
        io::atomic_write_text(dir + "/adjacency.json", adj.dump(2) + "\n");
    }

    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(config_echo.empty() ? "{}" : config_echo);
    manifest["config_fingerprint"] = io::fingerprint(config_echo);
    io::atomic_write_text(dir + "/manifest.json", manifest.dump(2) + "\n");
}

AlignedSeries load_series_dir(const std::string& dir) {
    if (!fs::exists(dir + "/series.csv") || !fs::exists(dir + "/series.json"))
        throw DataError("dataset directory '" + dir + "' is missing series files");

    nlohmann::json side;
    try {
        side = nlohmann::json::parse(io::read_text(dir + "/series.json"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad sidecar in '" + dir + "': " + e.what());
    }
    std::size_t T = side.at("steps").get<std::size_t>();
    auto node_ids = side.at("node_ids").get<std::vector<std::string>>();
    auto feature_names = side.at("feature_names").get<std::vector<std::string>>();
    std::size_t K = node_ids.size(), F = feature_names.size();

    AlignedSeries series(T, K, F);
    series.node_ids = node_ids;
    series.feature_names = feature_names;
    series.target_feature = side.at("target_feature").get<std::size_t>();
    series.bucket_seconds = side.at("bucket_seconds").get<double>();
    series.start_timestamp = side.at("start_timestamp").get<std::int64_t>();

    const auto& spans = side.at("invalid_spans");
    for (std::size_t k = 0; k < K; ++k)
        for (const auto& sp : spans.at(k))
            for (std::size_t t = sp.at("begin").get<std::size_t>();
                 t < sp.at("end").get<std::size_t>(); ++t)
                series.set_valid(t, k, false);

    std::ifstream in(dir + "/series.csv");
    std::string line;
    std::getline(in, line); // header
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::getline(ss, field, ',');
        std::size_t t = std::stoul(field);
        std::getline(ss, field, ',');
        std::size_t k = K;
        for (std::size_t i = 0; i < K; ++i)
            if (node_ids[i] == field) {
                k = i;
                break;
            }
        if (t >= T || k >= K) throw DataError("series.csv row out of range");
        for (std::size_t f = 0; f < F; ++f) {
            std::getline(ss, field, ',');
            series.value(t, k, f) = std::stod(field);
        }
        ++rows;
    }
    if (rows != T * K) throw DataError("series.csv row count does not match sidecar");
    return series;
}

std::optional<graph::AdjacencyMatrix> load_truth_adjacency(const std::string& dir) {
    if (!fs::exists(dir + "/adjacency.json")) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(io::read_text(dir + "/adjacency.json"));
    std::size_t k = j.at("k").get<std::size_t>();
    auto weights = j.at("weights").get<std::vector<double>>();
    graph::AdjacencyMatrix adj{num::Matrix(k, k, std::move(weights))};
    return adj;
}

} // namespace fluxcast::data
