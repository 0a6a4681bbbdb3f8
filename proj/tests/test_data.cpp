#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fluxcast/series.hpp"
#include "fluxcast/series_io.hpp"
#include "fluxcast/synth.hpp"

using namespace fluxcast;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    fs::path p = fs::temp_directory_path() / name;
    std::ofstream out(p);
    out << text;
    return p.string();
}

} // namespace

TEST_CASE("csv schema presets and json parsing") {
    data::CsvSchema mu = data::CsvSchema::preset("machine-usage");
    CHECK(mu.id_column == 0);
    CHECK(mu.timestamp_column == 1);
    REQUIRE(mu.metric_columns.size() == 5);
    CHECK(mu.metric_columns[0].second == "cpu_pct");
    CHECK_THROWS_AS(data::CsvSchema::preset("nope"), ConfigError);

    data::CsvSchema js = data::CsvSchema::from_json_text(R"({
        "id_column": 1, "timestamp_column": 0,
        "metric_columns": [{"column": 2, "name": "load"}], "malformed_tolerance": 0.5
    })");
    CHECK(js.id_column == 1);
    CHECK(js.metric_columns[0].second == "load");
}

TEST_CASE("csv ingest skips malformed lines within tolerance") {
    std::string path = write_temp("ingest_ok.csv",
                                  "a,0,1.0\n"
                                  "a,60,2.0\n"
                                  "garbage line\n"
                                  "b,0,3.0\n"
                                  "b,60,4.0\n");
    data::CsvSchema schema;
    schema.metric_columns = {{2, "y"}};
    schema.malformed_tolerance = 0.25;
    data::IngestResult res = data::ingest_csv({path}, schema);
    CHECK(res.records.size() == 4);
    CHECK(res.skipped_lines == 1);

    schema.malformed_tolerance = 0.01;
    CHECK_THROWS_AS(data::ingest_csv({path}, schema), DataError);
}

TEST_CASE("csv ingest dedupes on (id, timestamp) with later rows winning") {
    std::string path = write_temp("ingest_dup.csv",
                                  "a,0,1.0\n"
                                  "a,0,9.0\n"
                                  "a,60,2.0\n");
    data::CsvSchema schema;
    schema.metric_columns = {{2, "y"}};
    data::IngestResult res = data::ingest_csv({path}, schema);
    CHECK(res.records.size() == 2);
    CHECK(res.duplicate_records == 1);
    CHECK(res.records[0].metrics[0] == 9.0);
}

TEST_CASE("csv ingest rejects empty input") {
    std::string path = write_temp("ingest_empty.csv", "");
    data::CsvSchema schema;
    schema.metric_columns = {{2, "y"}};
    CHECK_THROWS_AS(data::ingest_csv({path}, schema), DataError);
    CHECK_THROWS_AS(data::ingest_csv({}, schema), DataError);
}

TEST_CASE("alignment buckets by mean and forward-fills short gaps") {
    // node a: two samples in bucket 0 (mean 1.5), nothing in buckets 1-2
    // (filled from bucket 0), sample in bucket 3
    std::string path = write_temp("align.csv",
                                  "a,0,1.0\n"
                                  "a,30,2.0\n"
                                  "a,180,5.0\n");
    data::CsvSchema schema;
    schema.metric_columns = {{2, "y"}};
    data::AlignedSeries s = data::align(data::ingest_csv({path}, schema), 60.0);
    REQUIRE(s.steps() == 4);
    CHECK(s.value(0, 0, 0) == 1.5);
    CHECK(s.value(1, 0, 0) == 1.5);
    CHECK(s.value(2, 0, 0) == 1.5);
    CHECK(s.value(3, 0, 0) == 5.0);
    for (std::size_t t = 0; t < 4; ++t) CHECK(s.valid(t, 0));
}

TEST_CASE("alignment masks gaps longer than the fill limit") {
    std::string path = write_temp("align_gap.csv",
                                  "a,0,1.0\n"
                                  "a,300,9.0\n"); // 4 empty buckets between
    data::CsvSchema schema;
    schema.metric_columns = {{2, "y"}};
    data::AlignedSeries s = data::align(data::ingest_csv({path}, schema), 60.0);
    REQUIRE(s.steps() == 6);
    CHECK(s.valid(0, 0));
    CHECK(s.valid(1, 0)); // filled
    CHECK(s.valid(3, 0));
    CHECK_FALSE(s.valid(4, 0)); // beyond max_gap_buckets = 3
    CHECK(s.valid(5, 0));
}

TEST_CASE("alignment needs an overlapping range across nodes") {
    std::string path = write_temp("align_disjoint.csv",
                                  "a,0,1.0\n"
                                  "b,100000,2.0\n");
    data::CsvSchema schema;
    schema.metric_columns = {{2, "y"}};
    CHECK_THROWS_AS(data::align(data::ingest_csv({path}, schema), 60.0), DataError);
}

TEST_CASE("winsorization clips tails and is idempotent") {
    data::AlignedSeries s(200, 1, 1);
    s.node_ids = {"a"};
    s.feature_names = {"y"};
    for (std::size_t t = 0; t < 200; ++t) s.value(t, 0, 0) = static_cast<double>(t);
    s.value(10, 0, 0) = 1e9; // spike

    data::AlignedSeries c1 = data::clip_outliers(s, 0.01, 0.99);
    double mx = 0.0;
    for (std::size_t t = 0; t < 200; ++t) mx = std::max(mx, c1.value(t, 0, 0));
    CHECK(mx < 1e9);

    data::AlignedSeries c2 = data::clip_outliers(c1, 0.01, 0.99);
    for (std::size_t t = 0; t < 200; ++t)
        CHECK(c2.value(t, 0, 0) == doctest::Approx(c1.value(t, 0, 0)).epsilon(1e-9));
}

TEST_CASE("z-score normalization oracle") {
    data::AlignedSeries s(3, 1, 2);
    s.node_ids = {"a"};
    s.feature_names = {"y", "flat"};
    for (std::size_t t = 0; t < 3; ++t) {
        s.value(t, 0, 0) = static_cast<double>(t + 1); // 1, 2, 3
        s.value(t, 0, 1) = 5.0;                        // constant channel
    }
    data::NormStats stats = data::NormStats::compute(s);
    CHECK(stats.mean_at(0, 0) == 2.0);
    CHECK(stats.std_at(0, 0) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(stats.constant[1] == 1);
    CHECK(stats.std_at(0, 1) == 1.0);

    data::AlignedSeries n = data::normalize(s, stats);
    CHECK(n.value(0, 0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-12));
    CHECK(n.value(1, 0, 0) == doctest::Approx(0.0));
    CHECK(n.value(2, 0, 0) == doctest::Approx(1.224744871391589).epsilon(1e-12));
    CHECK(n.value(0, 0, 1) == 0.0);
}

TEST_CASE("chronological split ratios") {
    data::AlignedSeries s(100, 1, 1);
    s.node_ids = {"a"};
    s.feature_names = {"y"};
    for (std::size_t t = 0; t < 100; ++t) s.value(t, 0, 0) = static_cast<double>(t);

    data::SplitResult sp = data::split(s, 0.7, 0.1, 0.2);
    CHECK(sp.train.steps() == 70);
    CHECK(sp.val.steps() == 10);
    CHECK(sp.test.steps() == 20);
    CHECK(sp.val_begin == 70);
    CHECK(sp.test_begin == 80);
    // strictly chronological, no overlap
    CHECK(sp.train.value(69, 0, 0) == 69.0);
    CHECK(sp.val.value(0, 0, 0) == 70.0);
    CHECK(sp.test.value(0, 0, 0) == 80.0);

    CHECK_THROWS_AS(data::split(s, 0.5, 0.2, 0.2), ConfigError); // ratios != 1
}

TEST_CASE("window extraction counts and target placement") {
    data::AlignedSeries s(20, 2, 1);
    s.node_ids = {"a", "b"};
    s.feature_names = {"y"};
    for (std::size_t t = 0; t < 20; ++t)
        for (std::size_t k = 0; k < 2; ++k)
            s.value(t, k, 0) = static_cast<double>(10 * k + t);

    // T = L + tau -> exactly one window
    data::WindowBatch one = data::make_windows(s.slice(0, 13), 12, 1, 2);
    CHECK(one.size() == 1);

    // T - L - tau + 1 = 20 - 12 - 1 + 1 = 8
    data::WindowBatch w = data::make_windows(s, 12, 1, 2);
    REQUIRE(w.size() == 8);
    CHECK(w[0].inputs.size() == 12);
    CHECK(w[0].targets.rows() == 11); // prediction positions m..L
    CHECK(w[0].targets.cols() == 2);
    // prediction position p (row r = p - m) targets step (start + p - 1) + tau
    CHECK(w[0].targets(0, 0) == s.value(2, 0, 0));  // p=2, tau=1 -> step index 2
    CHECK(w[0].targets(10, 1) == s.value(12, 1, 0));
    CHECK(w[3].inputs[0](0, 0) == s.value(3, 0, 0));

    // windows touching an invalid input step are dropped
    s.set_valid(5, 0, false);
    data::WindowBatch masked = data::make_windows(s, 12, 1, 2);
    CHECK(masked.size() < w.size());
    for (const auto& win : masked)
        for (std::size_t t = win.start; t < win.start + 12; ++t)
            CHECK(s.step_valid(t));
}

TEST_CASE("series directory round trip") {
    data::SynthConfig cfg;
    cfg.k = 3;
    cfg.f = 2;
    cfg.t = 60;
    cfg.seed = 9;
    data::SynthResult syn = data::synth_generate(cfg);
    syn.series.set_valid(10, 1, false);
    syn.series.set_valid(11, 1, false);

    fs::path dir = fs::temp_directory_path() / "series_rt";
    fs::remove_all(dir);
    data::save_series_dir(dir.string(), syn.series, "{\"note\":\"fixture\"}\n",
                          &syn.truth);
    data::AlignedSeries back = data::load_series_dir(dir.string());

    REQUIRE(back.steps() == syn.series.steps());
    REQUIRE(back.nodes() == syn.series.nodes());
    REQUIRE(back.features() == syn.series.features());
    CHECK(back.node_ids == syn.series.node_ids);
    CHECK(back.feature_names == syn.series.feature_names);
    CHECK(back.target_feature == syn.series.target_feature);
    for (std::size_t t = 0; t < back.steps(); ++t)
        for (std::size_t k = 0; k < back.nodes(); ++k) {
            CHECK(back.valid(t, k) == syn.series.valid(t, k));
            for (std::size_t f = 0; f < back.features(); ++f)
                CHECK(back.value(t, k, f) == syn.series.value(t, k, f));
        }

    auto truth = data::load_truth_adjacency(dir.string());
    REQUIRE(truth.has_value());
    for (std::size_t i = 0; i < truth->weights.size(); ++i)
        CHECK(truth->weights.at(i) == syn.truth.weights.at(i));
}

TEST_CASE("synthetic generator is deterministic in the seed") {
    data::SynthConfig cfg;
    cfg.k = 4;
    cfg.t = 120;
    cfg.seed = 21;
    data::SynthResult a = data::synth_generate(cfg);
    data::SynthResult b = data::synth_generate(cfg);
    for (std::size_t t = 0; t < a.series.steps(); ++t)
        for (std::size_t k = 0; k < 4; ++k)
            for (std::size_t f = 0; f < a.series.features(); ++f)
                CHECK(a.series.value(t, k, f) == b.series.value(t, k, f));

    cfg.seed = 22;
    data::SynthResult c = data::synth_generate(cfg);
    bool differs = false;
    for (std::size_t t = 0; t < a.series.steps() && !differs; ++t)
        if (a.series.value(t, 0, 0) != c.series.value(t, 0, 0)) differs = true;
    CHECK(differs);
}

TEST_CASE("noise-free synthetic series follows the recurrence") {
    data::SynthConfig cfg;
    cfg.k = 3;
    cfg.f = 1;
    cfg.t = 40;
    cfg.coupling = 0.5;
    cfg.noise_scale = 0.0;
    cfg.burst_rate = 0.0;
    cfg.seed = 4;
    data::SynthResult res = data::synth_generate(cfg);

    // x_t - rho * A x_{t-1} must be the constant (1 - rho) * mu
    std::vector<double> base(3);
    auto residual = [&](std::size_t t, std::size_t k) {
        double prop = 0.0;
        for (std::size_t j = 0; j < 3; ++j)
            prop += res.truth.weights(k, j) * res.series.value(t - 1, j, 0);
        return res.series.value(t, k, 0) - cfg.coupling * prop;
    };
    for (std::size_t k = 0; k < 3; ++k) base[k] = residual(1, k);
    for (std::size_t t = 2; t < 40; ++t)
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(residual(t, k) == doctest::Approx(base[k]).epsilon(1e-9));
}

TEST_CASE("synthetic generator rejects unstable coupling") {
    data::SynthConfig cfg;
    cfg.coupling = 1.0;
    CHECK_THROWS_AS(data::synth_generate(cfg), ConfigError);
}

TEST_CASE("seasonal drive adds a periodic component") {
    data::SynthConfig cfg;
    cfg.k = 2;
    cfg.f = 1;
    cfg.t = 200;
    cfg.coupling = 0.0;
    cfg.noise_scale = 0.0;
    cfg.burst_rate = 0.0;
    cfg.season_amplitude = 1.0;
    cfg.season_period = 50.0;
    cfg.seed = 6;
    data::SynthResult res = data::synth_generate(cfg);
    // with no coupling and no noise the series is exactly periodic
    for (std::size_t t = 51; t < 150; ++t)
        CHECK(res.series.value(t, 0, 0) ==
              doctest::Approx(res.series.value(t + 50, 0, 0)).epsilon(1e-9));
}
