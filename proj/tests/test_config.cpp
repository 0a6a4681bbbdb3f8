#include <doctest.h>

#include <filesystem>

#include "fluxcast/jsonio.hpp"
#include "fluxcast/runconfig.hpp"

using namespace fluxcast;
namespace fs = std::filesystem;

TEST_CASE("run config rejects unknown keys at every level") {
    CHECK_THROWS_AS(cfg::RunConfig::from_json_text(R"({"sede": 1})"), ConfigError);
    CHECK_THROWS_AS(cfg::RunConfig::from_json_text(R"({"model": {"dd": 4}})"),
                    ConfigError);
    CHECK_THROWS_AS(cfg::RunConfig::from_json_text(R"({"train": {"learning_rate": 0.1}})"),
                    ConfigError);
    CHECK_THROWS_AS(cfg::RunConfig::from_json_text(R"({"synth": {"burstrate": 1}})"),
                    ConfigError);
    CHECK_THROWS_AS(cfg::RunConfig::from_json_text("not json"), ConfigError);
}

TEST_CASE("run config materializes defaults into the resolved echo") {
    cfg::RunConfig rc = cfg::RunConfig::from_json_text(R"({"seed": 9})");
    CHECK(rc.seed == 9);
    CHECK(rc.data.train_ratio == 0.7);
    CHECK(rc.adjacency.mode == "identity");
    CHECK(rc.sweep.hidden_dims == std::vector<std::size_t>{2, 8, 32, 128});
    CHECK(rc.sweep.horizons == std::vector<std::size_t>{1, 2, 4, 8});

    CHECK(rc.resolved_json.find("\"train_ratio\"") != std::string::npos);
    CHECK(rc.resolved_json.find("\"lr\"") != std::string::npos);

    // the echo is canonical: reparsing it reproduces the same document
    cfg::RunConfig again = cfg::RunConfig::from_json_text(rc.resolved_json);
    CHECK(again.resolved_json == rc.resolved_json);
    CHECK(again.fingerprint() == rc.fingerprint());
}

TEST_CASE("config fingerprints separate distinct configs") {
    cfg::RunConfig a = cfg::RunConfig::from_json_text(R"({"seed": 1})");
    cfg::RunConfig b = cfg::RunConfig::from_json_text(R"({"seed": 2})");
    CHECK(a.fingerprint() != b.fingerprint());
    CHECK(a.fingerprint().size() == 16);
}

TEST_CASE("adjacency section validation") {
    CHECK_THROWS_AS(cfg::RunConfig::from_json_text(R"({"adjacency": {"mode": "psychic"}})"),
                    ConfigError);
    CHECK_THROWS_AS(cfg::RunConfig::from_json_text(R"({"adjacency": {"mode": "topology"}})"),
                    ConfigError); // missing topology_file
    cfg::RunConfig ok =
        cfg::RunConfig::from_json_text(R"({"adjacency": {"mode": "correlation", "threshold": 0.3}})");
    CHECK(ok.adjacency.threshold == 0.3);
}

TEST_CASE("atomic text io round trip") {
    fs::path dir = fs::temp_directory_path() / "jsonio_t" / "nested";
    fs::remove_all(dir.parent_path());
    std::string path = (dir / "out.txt").string();
    io::atomic_write_text(path, "hello\n");
    CHECK(io::read_text(path) == "hello\n");
    io::atomic_write_text(path, "replaced\n");
    CHECK(io::read_text(path) == "replaced\n");
    // no stray temp files left behind
    std::size_t entries = 0;
    for (auto it = fs::directory_iterator(dir); it != fs::directory_iterator(); ++it)
        ++entries;
    CHECK(entries == 1);

    CHECK_THROWS_AS(io::read_text((dir / "missing.txt").string()), DataError);
}

TEST_CASE("fnv fingerprint oracle") {
    CHECK(io::fingerprint("") == "cbf29ce484222325");
    CHECK(io::fingerprint("a") == "af63dc4c8601ec8c");
    CHECK(io::fingerprint("abc") != io::fingerprint("acb"));
}
