#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluxcast/matrix.hpp"

namespace fluxcast::data {

// Telemetry aligned to a fixed step grid: T steps x K nodes x F features,
// with a per-(step, node) validity mask.
class AlignedSeries {
public:
    AlignedSeries() = default;
    AlignedSeries(std::size_t t, std::size_t k, std::size_t f);

    std::size_t steps() const { return t_; }
    std::size_t nodes() const { return k_; }
    std::size_t features() const { return f_; }

    double& value(std::size_t t, std::size_t k, std::size_t f) {
        return values_[(t * k_ + k) * f_ + f];
    }
    double value(std::size_t t, std::size_t k, std::size_t f) const {
        return values_[(t * k_ + k) * f_ + f];
    }
    bool valid(std::size_t t, std::size_t k) const { return mask_[t * k_ + k]; }
    void set_valid(std::size_t t, std::size_t k, bool v) { mask_[t * k_ + k] = v; }
    // True iff every node is valid at step t.
    bool step_valid(std::size_t t) const;

    // K x F matrix of step t.
    num::Matrix step_matrix(std::size_t t) const;

    // Copy of steps [begin, end).
    AlignedSeries slice(std::size_t begin, std::size_t end) const;

    std::vector<std::string> node_ids;
    std::vector<std::string> feature_names;
    std::size_t target_feature = 0;
    double bucket_seconds = 1.0;
    std::int64_t start_timestamp = 0; // seconds of step 0

private:
    std::size_t t_ = 0, k_ = 0, f_ = 0;
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
};

struct RawRecord {
    std::string id;
    double timestamp = 0.0; // seconds
    std::vector<double> metrics;
};

// Column layout of a headerless CSV input.
struct CsvSchema {
    int id_column = 0;
    int timestamp_column = 1;
    std::vector<std::pair<int, std::string>> metric_columns; // (index, name)
    double malformed_tolerance = 0.01;

    // Built-in presets; currently only "machine-usage":
    // id, timestamp, cpu %, mem %, net-in, net-out, disk-io %.
    static CsvSchema preset(const std::string& name);
    static CsvSchema from_json_file(const std::string& path);
    static CsvSchema from_json_text(const std::string& text);
};

struct IngestResult {
    std::vector<RawRecord> records; // sorted by (id, timestamp)
    std::vector<std::string> feature_names;
    std::size_t skipped_lines = 0;
    std::size_t duplicate_records = 0;
};

// Parses and merges CSV files. Malformed lines are counted and skipped up
// to schema.malformed_tolerance of all lines, then DataError. A later row
// with the same (id, timestamp) wins.
IngestResult ingest_csv(const std::vector<std::string>& paths, const CsvSchema& schema);

// Buckets records onto a fixed grid spanning min..max timestamp. Bucket
// value is the in-bucket mean; empty buckets forward-fill up to
// max_gap_buckets, longer gaps are masked invalid.
AlignedSeries align(const IngestResult& ingest, double bucket_seconds,
                    std::size_t max_gap_buckets = 3);

// Winsorizes each (node, feature) channel to its empirical [p_low, p_high]
// quantiles over valid steps. Quantiles interpolate between order statistics.
AlignedSeries clip_outliers(const AlignedSeries& series, double p_low = 0.005,
                            double p_high = 0.995);

// Per-(node, feature) mean / population std on the training split.
struct NormStats {
    std::size_t k = 0, f = 0;
    std::vector<double> mean;       // k*f
    std::vector<double> std_dev;    // k*f; 1.0 where the channel is constant
    std::vector<std::uint8_t> constant; // flag per channel

    static NormStats compute(const AlignedSeries& train);
    double mean_at(std::size_t node, std::size_t feat) const { return mean[node * f + feat]; }
    double std_at(std::size_t node, std::size_t feat) const { return std_dev[node * f + feat]; }
};

AlignedSeries normalize(const AlignedSeries& series, const NormStats& stats);

struct SplitResult {
    AlignedSeries train, val, test;
    std::size_t val_begin = 0, test_begin = 0; // absolute step offsets
};

// Strictly chronological, non-overlapping split.
SplitResult split(const AlignedSeries& series, double train_ratio = 0.7,
                  double val_ratio = 0.1, double test_ratio = 0.2,
                  std::size_t min_split_steps = 1);

// One supervised window: L input steps plus targets at offset tau for the
// prediction positions m..L (1-based within the window).
struct Window {
    std::size_t start = 0;               // absolute step of the first input
    std::vector<num::Matrix> inputs;     // L matrices, K x F
    num::Matrix targets;                 // (L-m+1) x K, target feature at t+tau
    num::Matrix target_mask;             // same shape, 1 valid / 0 invalid
};

using WindowBatch = std::vector<Window>;

// Stride-1 windows over contiguous fully-valid spans. Windows whose input
// steps touch an invalid step are dropped; invalid targets are masked.
WindowBatch make_windows(const AlignedSeries& series, std::size_t L,
                         std::size_t tau, std::size_t m);

} // namespace fluxcast::data
