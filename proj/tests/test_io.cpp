#include "doctest.h"

#include <filesystem>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "sbbd/io.hpp"

using namespace sbbd;
using sbbd::testing::make_e1;
using sbbd::testing::small_instance;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "sbbd_test_io";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("base64 float blocks") {
    CHECK(encode_f64_base64(std::vector<double>{}).empty());
    // 1.0 is 0x3FF0000000000000; little-endian bytes 00 00 00 00 00 00 F0 3F.
    CHECK(encode_f64_base64(std::vector<double>{1.0}) == "AAAAAAAA8D8=");
    const std::vector<double> v{0.0, -0.0, 1.5, -2.25e-300, 1e300, std::numeric_limits<double>::denorm_min(), 0.1};
    const auto back = decode_f64_base64(encode_f64_base64(v));
    REQUIRE(back.size() == v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        CHECK(std::bit_cast<std::uint64_t>(back[k]) == std::bit_cast<std::uint64_t>(v[k]));
    }
    CHECK_THROWS_AS(decode_f64_base64("abc"), FormatError);
    CHECK_THROWS_AS(decode_f64_base64("AAAA"), FormatError);
    CHECK_THROWS_AS(decode_f64_base64("AA*AAAAA8D8="), FormatError);
}

TEST_CASE("instance JSON round trips for random instances in both layouts") {
    for (int k = 0; k < 12; ++k) {
        const auto inst = small_instance(k, 900 + k, 15, 6, 2);
        for (bool compact : {false, true}) {
            const auto j = instance_to_json(inst, compact);
            CHECK(j["schema"] == 1);
            const auto back = instance_from_json(nlohmann::ordered_json::parse(j.dump()));
            CHECK(back == inst);
        }
    }
}

TEST_CASE("E1 file layout") {
    const auto e1 = make_e1();
    const auto j = instance_to_json(e1);
    CHECK(j["space"]["n_options"] == 3);
    CHECK(j["space"]["app_tag"] == "CAOP");
    CHECK(j["scenarios"]["u"][1] == std::vector<double>{0, 1, 3});
    CHECK(!j["space"].contains("groups"));
    const auto path = temp_dir() / "e1.json";
    save_instance(path, e1);
    CHECK(load_instance(path) == e1);
}

TEST_CASE("invalid instance files are rejected") {
    auto j = instance_to_json(make_e1());
    auto bad = j;
    bad["schema"] = 2;
    CHECK_THROWS_AS(instance_from_json(bad), FormatError);
    bad = j;
    bad["scenarios"]["u"][0] = std::vector<double>{0, 1};
    CHECK_THROWS_AS(instance_from_json(bad), FormatError);
    bad = j;
    bad["space"].erase("fixed_ones");
    CHECK_THROWS_AS(instance_from_json(bad), FormatError);
    bad = j;
    bad["space"]["app_tag"] = "TSP";
    CHECK_THROWS_AS(instance_from_json(bad), FormatError);
    bad = j;
    bad["scenarios"]["u"][1] = std::vector<double>{0, 1, 1};  // utility tie
    CHECK_THROWS_AS(instance_from_json(bad), FormatError);
    CHECK_THROWS_AS(load_instance(temp_dir() / "missing.json"), FormatError);
}

TEST_CASE("solver config and manifest round trip") {
    SolveConfig cfg;
    cfg.method = Method::EXTENSIVE;
    cfg.time_limit = 12.5;
    cfg.reduced_model = true;
    cfg.seed = 42;
    Stage1Config s1 = default_stage1_config(AppTag::CAOP);
    s1.stabilizer.center = {1.0, 0.5};
    cfg.stage1 = s1;
    const auto back = solve_config_from_json(nlohmann::ordered_json::parse(to_json(cfg).dump()));
    CHECK(back.method == cfg.method);
    CHECK(back.time_limit == cfg.time_limit);
    CHECK(back.reduced_model);
    CHECK(back.seed == 42);
    REQUIRE(back.stage1.has_value());
    CHECK(back.stage1->rho == s1.rho);
    CHECK(back.stage1->stabilizer.enabled == s1.stabilizer.enabled);
    CHECK(back.stage1->stabilizer.center == s1.stabilizer.center);
    CHECK(!solve_config_from_json(to_json(SolveConfig{})).stage1.has_value());

    RunManifest m;
    m.experiment_id = "kappa-study";
    m.command = "solve";
    m.app_params = to_json(AppParams{CaopKappaParams{}});
    m.solver = to_json(cfg);
    m.outputs["csv"] = "out/solve.csv";
    m.seeds["instance"] = 3;
    const auto mb = run_manifest_from_json(nlohmann::ordered_json::parse(to_json(m).dump()));
    CHECK(mb == m);
}
