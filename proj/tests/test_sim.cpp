#include "ocbf/sim.hpp"

#include "doctest.h"

#include <cmath>

using namespace ocbf;

namespace {

ScenarioConfig quiet(int lanes) {
    ScenarioConfig cfg;
    cfg.geometry.lanes_per_approach = lanes;
    cfg.rate = 0.0;
    cfg.horizon = 0.0;
    cfg.max_time = 200.0;
    return cfg;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("a lone CAV with beta zero cruises at its entry speed") {
    ScenarioConfig cfg = quiet(2);
    cfg.beta = 0.0;
    const IntersectionGeometry geo = build_intersection(cfg.geometry);
    const double L = path_for(geo, 1, Maneuver::Straight).total_length;
    const SimResult r = run_with_arrivals(cfg, {{0, 0.0, 1, Maneuver::Straight, 9.0}});
    REQUIRE(r.cavs.size() == 1);
    const CavRecord& c = r.cavs[0];
    CHECK(c.departed);
    CHECK(c.travel_time == doctest::Approx(L / 9.0).epsilon(0.01));
    CHECK(c.energy <= 1e-3);
    CHECK(r.safety.rear_end_violations == 0);
}

TEST_CASE("a lone CAV follows its unconstrained plan") {
    // beta small enough that the plan stays under v_max.
    ScenarioConfig cfg = quiet(2);
    cfg.beta = 0.1;
    const IntersectionGeometry geo = build_intersection(cfg.geometry);
    const double L = path_for(geo, 1, Maneuver::Straight).total_length;
    const UnconstrainedPlan p = solve_unconstrained(9.0, 0.0, L, 0.1);
    REQUIRE(eval_plan(p, p.tm).v < cfg.limits.v_max);
    const SimResult r = run_with_arrivals(cfg, {{0, 0.0, 1, Maneuver::Straight, 9.0}});
    REQUIRE(r.cavs.size() == 1);
    CHECK(r.cavs[0].travel_time == doctest::Approx(p.duration()).epsilon(0.01));
    CHECK(r.cavs[0].energy == doctest::Approx(p.cost() - 0.1 * p.duration()).epsilon(0.02));
}

TEST_CASE("a faster follower in the same lane keeps the safe gap") {
    ScenarioConfig cfg = quiet(1);
    const SimResult r = run_with_arrivals(cfg, {{0, 0.0, 1, Maneuver::Straight, 8.0},
                                                {1, 1.5, 1, Maneuver::Straight, 12.0}});
    REQUIRE(r.cavs.size() == 2);
    CHECK(r.safety.rear_end_violations == 0);
    CHECK(r.cavs[1].min_rear_gap >= -1e-9);
    CHECK(r.cavs[0].departed);
    CHECK(r.cavs[1].departed);
}

TEST_CASE("crossing CAVs keep lateral headway") {
    ScenarioConfig cfg = quiet(1);
    // Lanes 1 and 2 belong to neighbouring approaches; both go straight.
    const SimResult r = run_with_arrivals(cfg, {{0, 0.0, 1, Maneuver::Straight, 10.0},
                                                {1, 0.0, 2, Maneuver::Straight, 10.0},
                                                {2, 0.5, 3, Maneuver::Left, 11.0}});
    CHECK(r.safety.lateral_violations == 0);
    CHECK(r.safety.co_occupancy == 0);
    for (const auto& c : r.cavs) CHECK(c.departed);
}

TEST_CASE("simultaneous arrivals enter in ascending lane order") {
    ScenarioConfig cfg = quiet(1);
    const SimResult r = run_with_arrivals(cfg, {{0, 0.0, 3, Maneuver::Straight, 10.0},
                                                {1, 0.0, 1, Maneuver::Straight, 10.0}});
    std::vector<std::string> entries;
    for (const auto& e : r.events)
        if (e.find(" entry ") != std::string::npos) entries.push_back(e);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].find("cav=1 ") != std::string::npos);
    CHECK(entries[0].find("priority=0") != std::string::npos);
    CHECK(entries[1].find("cav=0 ") != std::string::npos);
}

TEST_CASE("identical configurations replay identically") {
    ScenarioConfig cfg;
    cfg.geometry.lanes_per_approach = 1;
    cfg.horizon = 60;
    cfg.mix = {0.5, 0.3, 0.2};
    SimOptions opts;
    opts.record_trajectories = true;
    const SimResult a = run(cfg, opts), b = run(cfg, opts);
    REQUIRE(a.trajectories.size() == b.trajectories.size());
    for (std::size_t k = 0; k < a.trajectories.size(); ++k) {
        CHECK(a.trajectories[k].x == b.trajectories[k].x);
        CHECK(a.trajectories[k].u == b.trajectories[k].u);
    }
    CHECK(a.fleet.mean_energy == b.fleet.mean_energy);
    CHECK(a.events == b.events);
}

TEST_CASE("arrival generation") {
    ScenarioConfig cfg;
    cfg.rate = 0.0;
    const IntersectionGeometry geo = build_intersection(cfg.geometry);
    CHECK(generate_arrivals(cfg, geo).empty());

    cfg.rate = 270.0;
    cfg.horizon = 3600.0;
    const auto arr = generate_arrivals(cfg, geo);
    std::map<int, int> per_lane;
    for (const auto& a : arr) ++per_lane[a.lane];
    REQUIRE(per_lane.size() == 8);
    for (const auto& [lane, n] : per_lane) {
        CAPTURE(lane);
        CHECK(std::abs(n - 270) <= 3 * std::sqrt(270.0));
    }
    for (std::size_t k = 1; k < arr.size(); ++k) CHECK(arr[k - 1].time <= arr[k].time);
    // Same lane: the previous CAV has cleared delta at its entry speed.
    std::map<int, Arrival> last;
    for (const auto& a : arr) {
        if (last.count(a.lane)) CHECK(a.time - last[a.lane].time >= cfg.cbf.delta / last[a.lane].v0 - 1e-9);
        last[a.lane] = a;
        CHECK(a.v0 >= cfg.v_entry_min);
        CHECK(a.v0 <= cfg.v_entry_max);
    }
}

}
