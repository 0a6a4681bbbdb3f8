#pragma once

#include <optional>
#include <string>

#include "fluxcast/adjacency.hpp"
#include "fluxcast/series.hpp"

namespace fluxcast::data {

// On-disk dataset layout:
//   <dir>/series.csv      step,node,<feature columns>
//   <dir>/series.json     sidecar: ids, names, target feature, mask spans
//   <dir>/adjacency.json  optional ground-truth adjacency (synth output)
//   <dir>/manifest.json   resolved config echo + fingerprint
void save_series_dir(const std::string& dir, const AlignedSeries& series,
                     const std::string& config_echo,
                     const graph::AdjacencyMatrix* truth = nullptr);

AlignedSeries load_series_dir(const std::string& dir);

std::optional<graph::AdjacencyMatrix> load_truth_adjacency(const std::string& dir);

} // namespace fluxcast::data
