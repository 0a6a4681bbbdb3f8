#include "fluxcast/runconfig.hpp"

#include <json.hpp>

#include "fluxcast/jsonio.hpp"

namespace fluxcast::cfg {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const char* section) {
    if (!j.is_object()) throw ConfigError(std::string(section) + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) {
                ok = true;
                break;
            }
        if (!ok)
            throw ConfigError("unknown key '" + key + "' in " + section);
    }
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

data::SynthConfig parse_synth(const json& j) {
    check_keys(j,
               {"k", "f", "t", "coupling", "graph_density", "noise_scale",
                "burst_rate", "burst_magnitude", "burst_decay", "drift_times",
                "drift_fraction", "season_amplitude", "season_period", "seed"},
               "synth");
    data::SynthConfig s;
    read(j, "k", s.k);
    read(j, "f", s.f);
    read(j, "t", s.t);
    read(j, "coupling", s.coupling);
    read(j, "graph_density", s.graph_density);
    read(j, "noise_scale", s.noise_scale);
    read(j, "burst_rate", s.burst_rate);
    read(j, "burst_magnitude", s.burst_magnitude);
    read(j, "burst_decay", s.burst_decay);
    read(j, "drift_times", s.drift_times);
    read(j, "drift_fraction", s.drift_fraction);
    read(j, "season_amplitude", s.season_amplitude);
    read(j, "season_period", s.season_period);
    read(j, "seed", s.seed);
    return s;
}

json synth_to_json(const data::SynthConfig& s) {
    return {{"k", s.k},
            {"f", s.f},
            {"t", s.t},
            {"coupling", s.coupling},
            {"graph_density", s.graph_density},
            {"noise_scale", s.noise_scale},
            {"burst_rate", s.burst_rate},
            {"burst_magnitude", s.burst_magnitude},
            {"burst_decay", s.burst_decay},
            {"drift_times", s.drift_times},
            {"drift_fraction", s.drift_fraction},
            {"season_amplitude", s.season_amplitude},
            {"season_period", s.season_period},
            {"seed", s.seed}};
}

} // namespace

std::string RunConfig::fingerprint() const {
    return io::fingerprint(resolved_json);
}

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad run config JSON: ") + e.what());
    }
    check_keys(j, {"seed", "synth", "data", "model", "train", "adjacency", "eval", "sweep"},
               "run config");

    RunConfig rc;
    rc.model.k = 0;
    rc.model.f = 0;
    read(j, "seed", rc.seed);

    if (j.contains("synth")) rc.synth = parse_synth(j.at("synth"));

    if (j.contains("data")) {
        const json& d = j.at("data");
        check_keys(d, {"dir", "clip_low", "clip_high", "train_ratio", "val_ratio",
                       "test_ratio"},
                   "data");
        read(d, "dir", rc.data.dir);
        read(d, "clip_low", rc.data.clip_low);
        read(d, "clip_high", rc.data.clip_high);
        read(d, "train_ratio", rc.data.train_ratio);
        read(d, "val_ratio", rc.data.val_ratio);
        read(d, "test_ratio", rc.data.test_ratio);
    }

    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, {"k", "f", "d", "m", "tau", "L", "d_dec", "use_graph",
                       "use_fusion", "use_dynamic", "task_weights"},
                   "model");
        read(m, "k", rc.model.k);
        read(m, "f", rc.model.f);
        read(m, "d", rc.model.d);
        read(m, "m", rc.model.m);
        read(m, "tau", rc.model.tau);
        read(m, "L", rc.model.L);
        read(m, "d_dec", rc.model.d_dec);
        read(m, "use_graph", rc.model.use_graph);
        read(m, "use_fusion", rc.model.use_fusion);
        read(m, "use_dynamic", rc.model.use_dynamic);
        read(m, "task_weights", rc.model.task_weights);
    }

    if (j.contains("train")) {
        const json& t = j.at("train");
        check_keys(t, {"epochs", "batch", "patience", "max_windows_per_epoch",
                       "shuffle", "lr", "beta1", "beta2", "epsilon"},
                   "train");
        read(t, "epochs", rc.train.epochs);
        read(t, "batch", rc.train.batch);
        read(t, "patience", rc.train.patience);
        read(t, "max_windows_per_epoch", rc.train.max_windows_per_epoch);
        read(t, "shuffle", rc.train.shuffle);
        read(t, "lr", rc.train.adam.lr);
        read(t, "beta1", rc.train.adam.beta1);
        read(t, "beta2", rc.train.adam.beta2);
        read(t, "epsilon", rc.train.adam.epsilon);
    }

    if (j.contains("adjacency")) {
        const json& a = j.at("adjacency");
        check_keys(a, {"mode", "topology_file", "threshold"}, "adjacency");
        read(a, "mode", rc.adjacency.mode);
        read(a, "topology_file", rc.adjacency.topology_file);
        read(a, "threshold", rc.adjacency.threshold);
        if (rc.adjacency.mode != "topology" && rc.adjacency.mode != "correlation" &&
            rc.adjacency.mode != "identity" && rc.adjacency.mode != "truth")
            throw ConfigError("adjacency mode must be topology|correlation|identity|truth");
        if (rc.adjacency.mode == "topology" && rc.adjacency.topology_file.empty())
            throw ConfigError("adjacency mode 'topology' requires topology_file");
    }

    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, {"denormalized"}, "eval");
        read(e, "denormalized", rc.eval.denormalized);
    }

    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        check_keys(s, {"hidden_dims", "horizons", "n_seeds", "parallel"}, "sweep");
        read(s, "hidden_dims", rc.sweep.hidden_dims);
        read(s, "horizons", rc.sweep.horizons);
        read(s, "n_seeds", rc.sweep.n_seeds);
        read(s, "parallel", rc.sweep.parallel);
    }

    // canonical resolved echo with all defaults materialized
    json out;
    out["seed"] = rc.seed;
    if (rc.synth) out["synth"] = synth_to_json(*rc.synth);
    out["data"] = {{"dir", rc.data.dir},
                   {"clip_low", rc.data.clip_low},
                   {"clip_high", rc.data.clip_high},
                   {"train_ratio", rc.data.train_ratio},
                   {"val_ratio", rc.data.val_ratio},
                   {"test_ratio", rc.data.test_ratio}};
    out["model"] = {{"k", rc.model.k},
                    {"f", rc.model.f},
                    {"d", rc.model.d},
                    {"m", rc.model.m},
                    {"tau", rc.model.tau},
                    {"L", rc.model.L},
                    {"d_dec", rc.model.d_dec},
                    {"use_graph", rc.model.use_graph},
                    {"use_fusion", rc.model.use_fusion},
                    {"use_dynamic", rc.model.use_dynamic},
                    {"task_weights", rc.model.task_weights}};
    out["train"] = {{"epochs", rc.train.epochs},
                    {"batch", rc.train.batch},
                    {"patience", rc.train.patience},
                    {"max_windows_per_epoch", rc.train.max_windows_per_epoch},
                    {"shuffle", rc.train.shuffle},
                    {"lr", rc.train.adam.lr},
                    {"beta1", rc.train.adam.beta1},
                    {"beta2", rc.train.adam.beta2},
                    {"epsilon", rc.train.adam.epsilon}};
    out["adjacency"] = {{"mode", rc.adjacency.mode},
                        {"topology_file", rc.adjacency.topology_file},
                        {"threshold", rc.adjacency.threshold}};
    out["eval"] = {{"denormalized", rc.eval.denormalized}};
    out["sweep"] = {{"hidden_dims", rc.sweep.hidden_dims},
                    {"horizons", rc.sweep.horizons},
                    {"n_seeds", rc.sweep.n_seeds},
                    {"parallel", rc.sweep.parallel}};
    rc.resolved_json = out.dump(2) + "\n";
    return rc;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    return from_json_text(io::read_text(path));
}

} // namespace fluxcast::cfg
