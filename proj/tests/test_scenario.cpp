#include "ocbf/scenario.hpp"

#include "doctest.h"

#include <filesystem>

using namespace ocbf;

TEST_SUITE("scenario") {

TEST_CASE("shipped scenarios load and validate") {
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(std::string(OCBF_SOURCE_DIR) + "/scenarios")) {
        CAPTURE(e.path().string());
        CHECK_NOTHROW(load_scenario(e.path().string()).validate());
        ++n;
    }
    CHECK(n >= 7);
}

TEST_CASE("JSON round trip") {
    ScenarioConfig cfg;
    cfg.name = "rt";
    cfg.beta = 0.5;
    cfg.lane_rates[3] = 600;
    cfg.lane_mix[2] = {0.5, 0.0, 0.5};
    cfg.noise = {1, 1, 0.5};
    cfg.sequencing = Sequencing::Dr;
    cfg.dynamics = DynamicsKind::Nonlinear;
    cfg.geometry.overrides[1] = ApproachOverride{100, 50, 40};
    const ScenarioConfig back = scenario_from_json_text(scenario_to_json_text(cfg));
    CHECK(scenario_to_json_text(back) == scenario_to_json_text(cfg));
    CHECK(back.beta == 0.5);
    CHECK(back.rate_for(3) == 600);
    CHECK(back.mix_for(2).right == 0.5);
    CHECK(back.sequencing == Sequencing::Dr);
}

TEST_CASE("invalid scenarios are rejected") {
    auto bad = [](const std::string& body) {
        CHECK_THROWS_AS(scenario_from_json_text(body), ConfigError);
    };
    bad("{");
    bad(R"({"name": "x"})");
    bad(R"({"schema_version": 99})");
    bad(R"({"schema_version": 1, "bogus": 1})");
    bad(R"({"schema_version": 1, "beta": -1})");
    bad(R"({"schema_version": 1, "beta": "high"})");
    bad(R"({"schema_version": 1, "arrivals": {"mix": {"straight": 0.5, "left": 0.1, "right": 0.1}}})");
    bad(R"({"schema_version": 1, "dt": 0})");
    bad(R"({"schema_version": 1, "geometry": {"lanes_per_approach": 3}})");
    CHECK_NOTHROW(scenario_from_json_text(R"({"schema_version": 1})"));
}

}
