#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>

#include "geolab/harness.hpp"

using namespace geolab;
using harness::ExperimentConfig;
using harness::KeyValueConfig;

namespace {
std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}
}  // namespace

TEST_CASE("config parsing: values, comments, lists, booleans") {
    const auto kv = KeyValueConfig::parse_string(
        "# comment\n"
        "experiment = slope_vs_n\n"
        "train.eta = 0.4   # trailing comment\n"
        "sweep.n_values = 100, 200, 400\n"
        "net.has_output_bias = false\n");
    CHECK(kv.get_str("experiment", "") == "slope_vs_n");
    CHECK(kv.get_double("train.eta", 0.0) == doctest::Approx(0.4));
    CHECK(kv.get_list("sweep.n_values", {}) == std::vector<double>{100, 200, 400});
    CHECK_FALSE(kv.get_bool("net.has_output_bias", true));
    CHECK(kv.get_int("missing", 9) == 9);
}

TEST_CASE("unknown config keys are hard errors listing the known set") {
    const auto kv = KeyValueConfig::parse_string("experiment = flat_check\ntrain.etaa = 0.4\n");
    try {
        harness::config_from_kv(kv);
        FAIL("expected SpecError");
    } catch (const SpecError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("train.etaa") != std::string::npos);
        CHECK(msg.find("train.eta") != std::string::npos);
    }
    CHECK_THROWS_AS(KeyValueConfig::parse_string("a = 1\na = 2\n"), SpecError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("just a line\n"), SpecError);
}

TEST_CASE("duplicate seeds are rejected") {
    const auto kv =
        KeyValueConfig::parse_string("experiment = flat_check\nseeds = 1, 2, 1\n");
    CHECK_THROWS_AS(harness::config_from_kv(kv), SpecError);
}

TEST_CASE("unknown experiment lists the registry") {
    try {
        harness::default_config("no_such_experiment");
        FAIL("expected SpecError");
    } catch (const SpecError& e) {
        const std::string msg = e.what();
        for (const auto& name : harness::registry_names())
            CHECK(msg.find(name) != std::string::npos);
    }
}

TEST_CASE("config hash is a pure function of the config") {
    auto a = harness::default_config("flat_check");
    auto b = harness::default_config("flat_check");
    CHECK(a.hash == b.hash);
    b.n = a.n + 1;
    b.finalize();
    CHECK(a.hash != b.hash);
}

TEST_CASE("stub slope scan recovers the exact exponent end to end") {
    const auto kv = KeyValueConfig::parse_string(
        "experiment = slope_vs_n\n"
        "stub.exponent = -1.25\n"
        "stub.coefficient = 3\n"
        "sweep.d_values = 10, 50\n"
        "sweep.n_values = 100, 200, 400, 800\n"
        "seeds = 1, 2\n");
    auto cfg = harness::config_from_kv(kv);
    const auto result = harness::run_experiment(cfg);
    for (const auto& [name, fit] : result.fits) {
        CHECK(fit.slope == doctest::Approx(-1.25).epsilon(1e-12));
        CHECK(fit.r2 == doctest::Approx(1.0));
    }
    CHECK(result.tables.count("runs") == 1);
    CHECK(result.tables.count("mse_vs_n") == 1);
}

TEST_CASE("persist, reload, verify, and deterministic plot emission") {
    const auto kv = KeyValueConfig::parse_string(
        "experiment = slope_vs_n\n"
        "stub.exponent = -0.5\n"
        "sweep.d_values = 10\n"
        "sweep.n_values = 100, 200, 400\n"
        "seeds = 1\n");
    auto cfg = harness::config_from_kv(kv);
    auto result = harness::run_experiment(cfg);

    const auto dir = (std::filesystem::temp_directory_path() / "geolab_results").string();
    std::filesystem::remove_all(dir);
    harness::persist_result(result, dir);
    CHECK(std::filesystem::exists(result.output_root + "/manifest.json"));

    const auto loaded = harness::load_result(result.output_root);
    CHECK(loaded.experiment == "slope_vs_n");
    CHECK(loaded.hash == cfg.hash);
    CHECK(loaded.tables.at("mse_vs_n") == result.tables.at("mse_vs_n"));

    const auto files = harness::emit_plot_data(loaded, "mse_vs_n");
    REQUIRE(files.size() == 2);
    const std::string first = slurp(files[0]);
    const std::string svg = slurp(files[1]);
    CHECK(svg.find("<svg") != std::string::npos);
    // re-emission is byte identical
    harness::emit_plot_data(loaded, "mse_vs_n");
    CHECK(slurp(files[0]) == first);
    CHECK(slurp(files[1]) == svg);

    CHECK_THROWS_AS(harness::emit_plot_data(loaded, "no_such_table"), DomainError);

    harness::ExperimentResult empty = loaded;
    empty.tables["empty"] = "x,y\n";
    CHECK_THROWS_AS(harness::emit_plot_data(empty, "empty"), DomainError);
}

TEST_CASE("experiment reruns produce identical hashes and table bytes") {
    const auto kv = KeyValueConfig::parse_string(
        "experiment = slope_vs_n\n"
        "stub.exponent = -1\n"
        "sweep.d_values = 10, 50\n"
        "sweep.n_values = 100, 200, 400\n"
        "seeds = 1, 2, 3\n"
        "workers = 2\n");
    auto cfg = harness::config_from_kv(kv);
    const auto a = harness::run_experiment(cfg);
    const auto b = harness::run_experiment(cfg);
    CHECK(a.hash == b.hash);
    CHECK(a.tables.at("runs") == b.tables.at("runs"));
    CHECK(a.tables.at("mse_vs_n") == b.tables.at("mse_vs_n"));
}

TEST_CASE("parallel_for covers the range and propagates exceptions") {
    std::vector<std::atomic<int>> hits(100);
    harness::parallel_for(100, 4, [&](int i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);

    CHECK_THROWS_AS(harness::parallel_for(
                        10, 3, [](int i) { if (i == 7) throw DomainError("boom"); }),
                    DomainError);
}

TEST_CASE("fnv hash is stable") {
    CHECK(harness::fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(harness::fnv1a64("a") != harness::fnv1a64("b"));
    CHECK(harness::content_hash("x").size() == 16);
}
