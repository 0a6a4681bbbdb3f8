#include "fluxcast/series.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace fluxcast::data {

AlignedSeries::AlignedSeries(std::size_t t, std::size_t k, std::size_t f)
    : t_(t), k_(k), f_(f), values_(t * k * f, 0.0), mask_(t * k, 1) {}

bool AlignedSeries::step_valid(std::size_t t) const {
    for (std::size_t k = 0; k < k_; ++k)
        if (!valid(t, k)) return false;
    return true;
}

num::Matrix AlignedSeries::step_matrix(std::size_t t) const {
    num::Matrix out(k_, f_);
    for (std::size_t k = 0; k < k_; ++k)
        for (std::size_t f = 0; f < f_; ++f)
            out(k, f) = value(t, k, f);
    return out;
}

AlignedSeries AlignedSeries::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > t_) throw DataError("slice: step range out of bounds");
    AlignedSeries out(end - begin, k_, f_);
    for (std::size_t t = begin; t < end; ++t) {
        for (std::size_t k = 0; k < k_; ++k) {
            out.set_valid(t - begin, k, valid(t, k));
            for (std::size_t f = 0; f < f_; ++f)
                out.value(t - begin, k, f) = value(t, k, f);
        }
    }
    out.node_ids = node_ids;
    out.feature_names = feature_names;
    out.target_feature = target_feature;
    out.bucket_seconds = bucket_seconds;
    out.start_timestamp = start_timestamp + static_cast<std::int64_t>(begin * bucket_seconds);
    return out;
}

CsvSchema CsvSchema::preset(const std::string& name) {
    if (name == "machine-usage") {
        CsvSchema s;
        s.id_column = 0;
        s.timestamp_column = 1;
        s.metric_columns = {{2, "cpu_pct"},  {3, "mem_pct"},    {4, "net_in"},
                            {5, "net_out"},  {6, "disk_io_pct"}};
        return s;
    }
    throw ConfigError("unknown schema preset '" + name + "'");
}

CsvSchema CsvSchema::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    CsvSchema s;
    s.id_column = j.at("id_column").get<int>();
    s.timestamp_column = j.at("timestamp_column").get<int>();
    for (const auto& mc : j.at("metric_columns"))
        s.metric_columns.emplace_back(mc.at("column").get<int>(),
                                      mc.at("name").get<std::string>());
    if (j.contains("malformed_tolerance"))
        s.malformed_tolerance = j.at("malformed_tolerance").get<double>();
    if (s.metric_columns.empty()) throw ConfigError("schema has no metric columns");
    return s;
}

CsvSchema CsvSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return from_json_text(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad schema file '" + path + "': " + e.what());
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        return pos == s.size() && std::isfinite(out);
    } catch (...) {
        return false;
    }
}

} // namespace

IngestResult ingest_csv(const std::vector<std::string>& paths, const CsvSchema& schema) {
    if (schema.metric_columns.empty()) throw ConfigError("schema has no metric columns");
    int max_col = std::max(schema.id_column, schema.timestamp_column);
    for (const auto& [c, _] : schema.metric_columns) max_col = std::max(max_col, c);

    // keyed by (id, timestamp); later rows overwrite earlier ones
    std::map<std::pair<std::string, double>, std::vector<double>> merged;
    std::size_t total_lines = 0, bad_lines = 0, duplicates = 0;

    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open input file '" + path + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line == "\r") continue;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            ++total_lines;
            auto fields = split_csv_line(line);
            if (static_cast<int>(fields.size()) <= max_col) {
                ++bad_lines;
                continue;
            }
            double ts;
            if (!parse_double(fields[schema.timestamp_column], ts)) {
                ++bad_lines;
                continue;
            }
            std::vector<double> metrics;
            metrics.reserve(schema.metric_columns.size());
            bool ok = true;
            for (const auto& [col, _] : schema.metric_columns) {
                double v;
                if (!parse_double(fields[col], v)) {
                    ok = false;
                    break;
                }
                metrics.push_back(v);
            }
            if (!ok) {
                ++bad_lines;
                continue;
            }
            auto key = std::make_pair(fields[schema.id_column], ts);
            if (merged.count(key)) ++duplicates;
            merged[key] = std::move(metrics);
        }
    }

    if (total_lines == 0) throw DataError("empty input");
    if (static_cast<double>(bad_lines) >
        schema.malformed_tolerance * static_cast<double>(total_lines))
        throw DataError("malformed line fraction " + std::to_string(bad_lines) + "/" +
                        std::to_string(total_lines) + " exceeds tolerance");
    if (merged.empty()) throw DataError("empty input");

    IngestResult res;
    res.skipped_lines = bad_lines;
    res.duplicate_records = duplicates;
    for (const auto& [_, name] : schema.metric_columns) res.feature_names.push_back(name);
    for (auto& [key, metrics] : merged) {
        RawRecord r;
        r.id = key.first;
        r.timestamp = key.second;
        r.metrics = std::move(metrics);
        res.records.push_back(std::move(r));
    }
    return res;
}

AlignedSeries align(const IngestResult& ingest, double bucket_seconds,
                    std::size_t max_gap_buckets) {
    if (bucket_seconds <= 0.0) throw ConfigError("bucket_seconds must be positive");
    if (ingest.records.empty()) throw DataError("empty input");

    std::vector<std::string> ids;
    for (const auto& r : ingest.records)
        if (ids.empty() || ids.back() != r.id) ids.push_back(r.id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

    double tmin = ingest.records.front().timestamp, tmax = tmin;
    for (const auto& r : ingest.records) {
        tmin = std::min(tmin, r.timestamp);
        tmax = std::max(tmax, r.timestamp);
    }
    std::size_t T = static_cast<std::size_t>(std::floor((tmax - tmin) / bucket_seconds)) + 1;
    std::size_t K = ids.size();
    std::size_t F = ingest.feature_names.size();

    AlignedSeries series(T, K, F);
    series.node_ids = ids;
    series.feature_names = ingest.feature_names;
    series.bucket_seconds = bucket_seconds;
    series.start_timestamp = static_cast<std::int64_t>(tmin);

    std::vector<double> sum(T * K * F, 0.0);
    std::vector<std::size_t> cnt(T * K, 0);
    for (const auto& r : ingest.records) {
        std::size_t k = static_cast<std::size_t>(
            std::lower_bound(ids.begin(), ids.end(), r.id) - ids.begin());
        std::size_t t = static_cast<std::size_t>((r.timestamp - tmin) / bucket_seconds);
        for (std::size_t f = 0; f < F; ++f) sum[(t * K + k) * F + f] += r.metrics[f];
        cnt[t * K + k] += 1;
    }

    bool any_overlap = false;
    for (std::size_t k = 0; k < K; ++k) {
        // in-bucket means, then forward fill short gaps
        std::size_t gap = 0;
        bool seen = false;
        std::vector<double> last(F, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
            if (cnt[t * K + k] > 0) {
                for (std::size_t f = 0; f < F; ++f) {
                    double v = sum[(t * K + k) * F + f] / static_cast<double>(cnt[t * K + k]);
                    series.value(t, k, f) = v;
                    last[f] = v;
                }
                seen = true;
                gap = 0;
            } else {
                ++gap;
                if (seen && gap <= max_gap_buckets) {
                    for (std::size_t f = 0; f < F; ++f) series.value(t, k, f) = last[f];
                } else {
                    series.set_valid(t, k, false);
                }
            }
        }
    }
    for (std::size_t t = 0; t < T && !any_overlap; ++t)
        if (series.step_valid(t)) any_overlap = true;
    if (!any_overlap) throw DataError("no overlapping time range across nodes");
    return series;
}

namespace {

} // namespace

AlignedSeries clip_outliers(const AlignedSeries& series, double p_low, double p_high) {
    if (p_low < 0.0 || p_high > 1.0 || p_low >= p_high)
        throw ConfigError("clip_outliers: bad quantile bounds");
    AlignedSeries out = series;
    for (std::size_t k = 0; k < series.nodes(); ++k) {
        for (std::size_t f = 0; f < series.features(); ++f) {
            std::vector<double> vals;
            for (std::size_t t = 0; t < series.steps(); ++t)
                if (series.valid(t, k)) vals.push_back(series.value(t, k, f));
            if (vals.empty()) continue;
            std::sort(vals.begin(), vals.end());
            // clip bounds round inward to actual order statistics; an
            // interpolated bound would shift on every re-clip and break
            // idempotence
            double pos_lo = p_low * static_cast<double>(vals.size() - 1);
            double pos_hi = p_high * static_cast<double>(vals.size() - 1);
            double lo = vals[static_cast<std::size_t>(std::ceil(pos_lo))];
            double hi = vals[static_cast<std::size_t>(std::floor(pos_hi))];
            for (std::size_t t = 0; t < series.steps(); ++t)
                if (series.valid(t, k))
                    out.value(t, k, f) = std::clamp(series.value(t, k, f), lo, hi);
        }
    }
    return out;
}

NormStats NormStats::compute(const AlignedSeries& train) {
    NormStats st;
    st.k = train.nodes();
    st.f = train.features();
    st.mean.assign(st.k * st.f, 0.0);
    st.std_dev.assign(st.k * st.f, 1.0);
    st.constant.assign(st.k * st.f, 0);
    for (std::size_t k = 0; k < st.k; ++k) {
        for (std::size_t f = 0; f < st.f; ++f) {
            double sum = 0.0, sq = 0.0;
            std::size_t n = 0;
            for (std::size_t t = 0; t < train.steps(); ++t) {
                if (!train.valid(t, k)) continue;
                double v = train.value(t, k, f);
                sum += v;
                sq += v * v;
                ++n;
            }
            if (n == 0) {
                st.constant[k * st.f + f] = 1;
                continue;
            }
            double mean = sum / static_cast<double>(n);
            double var = sq / static_cast<double>(n) - mean * mean;
            double sd = var > 0.0 ? std::sqrt(var) : 0.0;
            st.mean[k * st.f + f] = mean;
            if (sd > 1e-12) {
                st.std_dev[k * st.f + f] = sd;
            } else {
                st.std_dev[k * st.f + f] = 1.0;
                st.constant[k * st.f + f] = 1;
            }
        }
    }
    return st;
}

AlignedSeries normalize(const AlignedSeries& series, const NormStats& stats) {
    if (stats.k != series.nodes() || stats.f != series.features())
        throw ShapeError("normalize: stats shape mismatch");
    AlignedSeries out = series;
    for (std::size_t t = 0; t < series.steps(); ++t)
        for (std::size_t k = 0; k < series.nodes(); ++k)
            for (std::size_t f = 0; f < series.features(); ++f)
                out.value(t, k, f) =
                    (series.value(t, k, f) - stats.mean_at(k, f)) / stats.std_at(k, f);
    return out;
}

SplitResult split(const AlignedSeries& series, double train_ratio, double val_ratio,
                  double test_ratio, std::size_t min_split_steps) {
    if (std::fabs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");
    std::size_t T = series.steps();
    std::size_t n_train = static_cast<std::size_t>(std::floor(train_ratio * T));
    std::size_t n_val = static_cast<std::size_t>(std::floor(val_ratio * T));
    std::size_t n_test = T - n_train - n_val;
    if (n_train < min_split_steps || n_val < min_split_steps || n_test < min_split_steps)
        throw DataError("series too short for requested split");
    SplitResult res;
    res.train = series.slice(0, n_train);
    res.val = series.slice(n_train, n_train + n_val);
    res.test = series.slice(n_train + n_val, T);
    res.val_begin = n_train;
    res.test_begin = n_train + n_val;
    return res;
}

WindowBatch make_windows(const AlignedSeries& series, std::size_t L, std::size_t tau,
                         std::size_t m) {
    if (L < 1 || tau < 1 || m < 1 || m > L)
        throw ConfigError("make_windows: need 1 <= m <= L and tau >= 1");
    WindowBatch out;
    std::size_t T = series.steps();
    if (T < L + tau) return out;
    std::size_t tf = series.target_feature;
    for (std::size_t s = 0; s + L + tau <= T + 0; ++s) {
        // inputs must lie in a fully valid span
        bool ok = true;
        for (std::size_t t = s; t < s + L; ++t)
            if (!series.step_valid(t)) {
                ok = false;
                break;
            }
        if (!ok) continue;
        Window w;
        w.start = s;
        w.inputs.reserve(L);
        for (std::size_t t = s; t < s + L; ++t) w.inputs.push_back(series.step_matrix(t));
        std::size_t n_pred = L - m + 1;
        w.targets = num::Matrix(n_pred, series.nodes());
        w.target_mask = num::Matrix(n_pred, series.nodes());
        double any_valid = 0.0;
        for (std::size_t p = 0; p < n_pred; ++p) {
            std::size_t t_abs = s + (m - 1) + p + tau; // target step
            if (t_abs >= T) continue;
            for (std::size_t k = 0; k < series.nodes(); ++k) {
                if (!series.valid(t_abs, k)) continue;
                w.targets(p, k) = series.value(t_abs, k, tf);
                w.target_mask(p, k) = 1.0;
                any_valid += 1.0;
            }
        }
        if (any_valid > 0.0) out.push_back(std::move(w));
    }
    return out;
}

} // namespace fluxcast::data
