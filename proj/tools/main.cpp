// fluxcast CLI: synth | ingest | train | eval | sweep | predict
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
// failure.

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fluxcast/evaluate.hpp"
#include "fluxcast/jsonio.hpp"
#include "fluxcast/runconfig.hpp"
#include "fluxcast/series_io.hpp"
#include "fluxcast/sweep.hpp"
#include "fluxcast/synth.hpp"

namespace fs = std::filesystem;
using namespace fluxcast;

namespace {

// Dataset prepared for training/evaluation.
struct Pipeline {
    data::SplitResult splits;      // normalized
    data::NormStats stats;         // from the raw training split
    graph::AdjacencyMatrix adj;
    model::ModelConfig model_cfg;  // k/f resolved from the data
    cfg::RunConfig run;
};

graph::AdjacencyMatrix build_adjacency(const cfg::AdjacencySection& section,
                                       const data::AlignedSeries& train,
                                       const std::string& data_dir) {
    if (section.mode == "identity")
        return graph::AdjacencyMatrix{num::Matrix::identity(train.nodes())};
    if (section.mode == "topology")
        return graph::adjacency_from_topology(
            graph::TopologySpec::from_json_file(section.topology_file));
    if (section.mode == "correlation") {
        auto res = graph::adjacency_from_correlation(train, train.target_feature,
                                                     section.threshold);
        for (std::size_t k : res.constant_nodes)
            std::cerr << "warning: node " << k
                      << " has a constant target feature; self-loop only\n";
        return res.adjacency;
    }
    if (section.mode == "truth") {
        auto truth = data::load_truth_adjacency(data_dir);
        if (!truth) throw DataError("adjacency mode 'truth' but no adjacency.json in dataset");
        return *truth;
    }
    throw ConfigError("unknown adjacency mode '" + section.mode + "'");
}

Pipeline prepare(const cfg::RunConfig& run, const std::string& data_dir) {
    Pipeline p;
    p.run = run;
    data::AlignedSeries raw = data::load_series_dir(data_dir);
    raw = data::clip_outliers(raw, run.data.clip_low, run.data.clip_high);

    data::SplitResult raw_splits = data::split(raw, run.data.train_ratio,
                                               run.data.val_ratio, run.data.test_ratio);
    p.stats = data::NormStats::compute(raw_splits.train);
    p.splits.train = data::normalize(raw_splits.train, p.stats);
    p.splits.val = data::normalize(raw_splits.val, p.stats);
    p.splits.test = data::normalize(raw_splits.test, p.stats);
    p.splits.val_begin = raw_splits.val_begin;
    p.splits.test_begin = raw_splits.test_begin;

    p.adj = build_adjacency(run.adjacency, p.splits.train, data_dir);

    p.model_cfg = run.model;
    if (p.model_cfg.k == 0) p.model_cfg.k = raw.nodes();
    if (p.model_cfg.f == 0) p.model_cfg.f = raw.features();
    if (p.model_cfg.k != raw.nodes() || p.model_cfg.f != raw.features())
        throw ConfigError("model k/f do not match the dataset");
    p.model_cfg.seed = run.seed;
    p.model_cfg.finalize();
    return p;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
    cfg::RunConfig run = cfg::RunConfig::from_json_file(config_path);
    if (!run.synth) throw ConfigError("config has no synth section");
    data::SynthConfig sc = *run.synth;
    if (seed_override) sc.seed = *seed_override;
    data::SynthResult res = data::synth_generate(sc);
    data::save_series_dir(out_dir, res.series, run.resolved_json, &res.truth);
    std::cerr << "wrote " << res.series.steps() << " steps x " << res.series.nodes()
              << " nodes to " << out_dir << "\n";
    return 0;
}

int cmd_ingest(const std::string& schema_arg, const std::vector<std::string>& inputs,
               double bucket_seconds, const std::string& out_dir) {
    data::CsvSchema schema;
    if (fs::exists(schema_arg) && fs::is_regular_file(schema_arg))
        schema = data::CsvSchema::from_json_file(schema_arg);
    else
        schema = data::CsvSchema::preset(schema_arg);

    std::vector<std::string> paths;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            for (const auto& e : fs::directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".csv")
                    paths.push_back(e.path().string());
            std::sort(paths.begin(), paths.end());
        } else {
            paths.push_back(in);
        }
    }
    if (paths.empty()) throw DataError("empty input");

    data::IngestResult ingest = data::ingest_csv(paths, schema);
    data::AlignedSeries series = data::align(ingest, bucket_seconds);
    nlohmann::json echo{{"schema", schema_arg},
                        {"bucket_seconds", bucket_seconds},
                        {"inputs", paths},
                        {"skipped_lines", ingest.skipped_lines},
                        {"duplicate_records", ingest.duplicate_records}};
    data::save_series_dir(out_dir, series, echo.dump(2) + "\n");
    std::cerr << "aligned " << series.steps() << " steps x " << series.nodes()
              << " nodes (" << ingest.skipped_lines << " lines skipped)\n";
    return 0;
}

void save_model_with_context(const std::string& path, const Pipeline& p,
                             const model::ModelParams& params,
                             const std::vector<model::EpochLog>& log) {
    // base document from the core writer, then context blocks
    model::save_model(path, p.model_cfg, params);
    nlohmann::json j = nlohmann::json::parse(io::read_text(path));
    j["adjacency"] = {{"k", p.adj.k()}, {"weights", p.adj.weights.data()}};
    j["norm_stats"] = {{"k", p.stats.k},
                       {"f", p.stats.f},
                       {"mean", p.stats.mean},
                       {"std_dev", p.stats.std_dev},
                       {"constant", p.stats.constant}};
    j["run_config"] = nlohmann::json::parse(p.run.resolved_json);
    j["config_fingerprint"] = p.run.fingerprint();
    nlohmann::json lj = nlohmann::json::array();
    for (const auto& e : log)
        lj.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"val_loss", e.val_loss}});
    j["training_log"] = lj;
    io::atomic_write_text(path, j.dump(2) + "\n");
}

struct LoadedModel {
    model::ModelConfig cfg;
    model::ModelParams params;
    graph::AdjacencyMatrix adj;
    data::NormStats stats;
    std::string fingerprint;
};

LoadedModel load_model_with_context(const std::string& path) {
    auto [cfg, params] = model::load_model(path);
    nlohmann::json j = nlohmann::json::parse(io::read_text(path));
    LoadedModel lm{cfg, std::move(params), {}, {}, {}};
    std::size_t k = j.at("adjacency").at("k").get<std::size_t>();
    lm.adj.weights =
        num::Matrix(k, k, j.at("adjacency").at("weights").get<std::vector<double>>());
    const auto& ns = j.at("norm_stats");
    lm.stats.k = ns.at("k").get<std::size_t>();
    lm.stats.f = ns.at("f").get<std::size_t>();
    lm.stats.mean = ns.at("mean").get<std::vector<double>>();
    lm.stats.std_dev = ns.at("std_dev").get<std::vector<double>>();
    lm.stats.constant = ns.at("constant").get<std::vector<std::uint8_t>>();
    lm.fingerprint = j.value("config_fingerprint", "");
    return lm;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& out_model) {
    cfg::RunConfig run = cfg::RunConfig::from_json_file(config_path);
    Pipeline p = prepare(run, data_dir);

    data::WindowBatch train_w =
        data::make_windows(p.splits.train, p.model_cfg.L, p.model_cfg.tau, p.model_cfg.m);
    data::WindowBatch val_w =
        data::make_windows(p.splits.val, p.model_cfg.L, p.model_cfg.tau, p.model_cfg.m);

    model::TrainResult tr = model::train(train_w, val_w, p.adj, p.model_cfg, run.train);
    save_model_with_context(out_model, p, tr.params, tr.log);
    if (!tr.log.empty())
        std::cerr << "final train loss " << tr.log.back().train_loss << " after "
                  << tr.log.size() << " epochs\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& report_path, const std::string& config_path) {
    LoadedModel lm = load_model_with_context(model_path);
    cfg::RunConfig run = config_path.empty()
                             ? cfg::RunConfig::from_json_text("{}")
                             : cfg::RunConfig::from_json_file(config_path);

    data::AlignedSeries raw = data::load_series_dir(data_dir);
    raw = data::clip_outliers(raw, run.data.clip_low, run.data.clip_high);
    data::SplitResult raw_splits = data::split(raw, run.data.train_ratio,
                                               run.data.val_ratio, run.data.test_ratio);
    data::AlignedSeries test = data::normalize(raw_splits.test, lm.stats);
    data::WindowBatch test_w = data::make_windows(test, lm.cfg.L, lm.cfg.tau, lm.cfg.m);

    eval::EvalOptions opts;
    opts.denormalize = run.eval.denormalized;
    opts.stats = &lm.stats;
    eval::MetricsReport report = eval::evaluate(lm.params, lm.cfg, lm.adj, test_w, opts);
    report.config_fingerprint = lm.fingerprint;
    io::atomic_write_text(report_path, eval::report_to_json(report));
    std::string csv_path = report_path + ".csv";
    io::atomic_write_text(csv_path, eval::report_to_csv(report));
    std::cerr << "aggregate mse " << report.aggregate.mse << " over "
              << report.aggregate.count << " samples\n";
    return 0;
}

int cmd_sweep(const std::string& kind, const std::string& data_dir,
              const std::string& config_path, const std::string& out_dir) {
    cfg::RunConfig run = cfg::RunConfig::from_json_file(config_path);
    Pipeline p = prepare(run, data_dir);

    eval::SweepInput in;
    in.train = p.splits.train;
    in.val = p.splits.val;
    in.test = p.splits.test;
    in.adj = p.adj;
    in.base = p.model_cfg;
    in.tc = run.train;
    in.master_seed = run.seed;
    in.n_seeds = run.sweep.n_seeds;
    in.parallel = run.sweep.parallel;

    eval::SweepTable table;
    if (kind == "hidden")
        table = eval::sweep_hidden(run.sweep.hidden_dims, in);
    else if (kind == "horizon")
        table = eval::sweep_horizon(run.sweep.horizons, in);
    else if (kind == "ablation")
        table = eval::ablation_suite(in);
    else
        throw ConfigError("sweep kind must be hidden|horizon|ablation");

    fs::create_directories(out_dir);
    io::atomic_write_text(out_dir + "/sweep_" + kind + ".json", eval::sweep_to_json(table));
    io::atomic_write_text(out_dir + "/sweep_" + kind + ".csv", eval::sweep_to_csv(table));
    std::cerr << "wrote " << table.cells.size() << " sweep cells to " << out_dir << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_dir,
                std::size_t at, const std::string& out_path,
                const std::string& config_path) {
    LoadedModel lm = load_model_with_context(model_path);
    cfg::RunConfig run = config_path.empty()
                             ? cfg::RunConfig::from_json_text("{}")
                             : cfg::RunConfig::from_json_file(config_path);

    data::AlignedSeries raw = data::load_series_dir(data_dir);
    raw = data::clip_outliers(raw, run.data.clip_low, run.data.clip_high);
    data::AlignedSeries series = data::normalize(raw, lm.stats);

    std::vector<double> preds = model::predict(series, at, lm.adj, lm.params, lm.cfg);

    std::ostringstream csv;
    csv.precision(17);
    csv << "node,step,target_step,prediction\n";
    for (std::size_t k = 0; k < preds.size(); ++k)
        csv << series.node_ids[k] << ',' << at << ',' << at + lm.cfg.tau << ','
            << preds[k] << '\n';
    io::atomic_write_text(out_path, csv.str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"unified multi-task telemetry forecaster"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir, out_model, model_path, report_path,
        out_path, schema_arg, kind;
    std::vector<std::string> inputs;
    double bucket_seconds = 60.0;
    std::size_t at = 0;
    std::optional<std::uint64_t> seed_override;
    std::uint64_t seed_raw = 0;

    auto* synth = app.add_subcommand("synth", "generate a synthetic coupled dataset");
    synth->add_option("--config", config_path)->required();
    synth->add_option("--out", out_dir)->required();
    auto* seed_opt = synth->add_option("--seed", seed_raw);

    auto* ingest = app.add_subcommand("ingest", "align raw trace CSVs onto a step grid");
    ingest->add_option("--schema", schema_arg)->required();
    ingest->add_option("--input", inputs)->required();
    ingest->add_option("--bucket", bucket_seconds);
    ingest->add_option("--out", out_dir)->required();

    auto* train = app.add_subcommand("train", "train the forecaster");
    train->add_option("--data", data_dir)->required();
    train->add_option("--config", config_path)->required();
    train->add_option("--out-model", out_model)->required();

    auto* evalc = app.add_subcommand("eval", "evaluate a trained model");
    evalc->add_option("--model", model_path)->required();
    evalc->add_option("--data", data_dir)->required();
    evalc->add_option("--report", report_path)->required();
    evalc->add_option("--config", config_path);

    auto* sweep = app.add_subcommand("sweep", "hidden/horizon/ablation sweeps");
    sweep->add_option("--kind", kind)->required()
        ->check(CLI::IsMember({"hidden", "horizon", "ablation"}));
    sweep->add_option("--data", data_dir)->required();
    sweep->add_option("--config", config_path)->required();
    sweep->add_option("--out", out_dir)->required();

    auto* predict = app.add_subcommand("predict", "forecast at one step");
    predict->add_option("--model", model_path)->required();
    predict->add_option("--data", data_dir)->required();
    predict->add_option("--at", at)->required();
    predict->add_option("--out", out_path)->required();
    predict->add_option("--config", config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (seed_opt->count() > 0) seed_override = seed_raw;
        if (synth->parsed()) return cmd_synth(config_path, out_dir, seed_override);
        if (ingest->parsed()) return cmd_ingest(schema_arg, inputs, bucket_seconds, out_dir);
        if (train->parsed()) return cmd_train(data_dir, config_path, out_model);
        if (evalc->parsed()) return cmd_eval(model_path, data_dir, report_path, config_path);
        if (sweep->parsed()) return cmd_sweep(kind, data_dir, config_path, out_dir);
        if (predict->parsed()) return cmd_predict(model_path, data_dir, at, out_path, config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
