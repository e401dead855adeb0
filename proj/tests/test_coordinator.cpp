#include "ocbf/coordinator.hpp"

#include "doctest.h"
#include "oracles.hpp"
#include "queue_fixtures.hpp"

#include <random>
#include <set>

using namespace ocbf;
using fixtures::load_fixture;
using fixtures::random_table;
using fixtures::simple;

TEST_SUITE("coordinator") {

TEST_CASE("fixture: CAV 5 conflicts with 4 at M20 and 0 at M29") {
    const QueueTable t = load_fixture();
    const ConflictSet c = find_conflicts(t, 5);
    CHECK(c.ids() == std::vector<int>{0, 4});
    CHECK(c.condition == ConflictCondition::LateralOnly);
    std::map<MpToken, int> by_mp;
    for (const auto& e : c.omega) by_mp[e.mp] = e.cav_id;
    CHECK(by_mp.at(MpToken::fixed(20)) == 4);
    CHECK(by_mp.at(MpToken::fixed(29)) == 0);
}

TEST_CASE("fixture: CAV 4 is pure car-following behind 3") {
    const ConflictSet c = find_conflicts(load_fixture(), 4);
    CHECK(c.condition == ConflictCondition::FullMatch);
    REQUIRE(c.ip.has_value());
    CHECK(*c.ip == 3);
    CHECK(c.omega.empty());
}

TEST_CASE("fixture: CAV 7 has no conflicts") {
    const ConflictSet c = find_conflicts(load_fixture(), 7);
    CHECK(c.omega.empty());
    CHECK_FALSE(c.ip.has_value());
    CHECK(c.condition == ConflictCondition::LateralOnly);
}

TEST_CASE("fixture: CAV 10 conflicts") {
    const QueueTable t = load_fixture();
    const ConflictSet c = find_conflicts(t, 10);
    CHECK(c.ids() == std::vector<int>{0, 1, 4, 5, 6});
    REQUIRE(c.ip.has_value());
    CHECK(*c.ip == 2);
    CHECK(c.condition == ConflictCondition::Mixed);
    // CAV 3 merges behind the lane changer and must see it at the floating MP.
    const ConflictSet m = find_conflicts(t, 3);
    bool zone = false;
    for (const auto& e : m.omega) zone |= e.mp == MpToken::zone(1) && e.cav_id == 2;
    CHECK(zone);
}

TEST_CASE("fixture matches the brute-force search for every row") {
    const QueueTable t = load_fixture();
    for (const auto& r : t.rows()) {
        CAPTURE(r.cav_id);
        CHECK(oracle::same_conflicts(find_conflicts(t, r.cav_id), oracle::brute_conflicts(t, r.cav_id)));
    }
}

TEST_CASE("random tables match the brute-force search") {
    std::mt19937_64 rng(3);
    int full = 0, mixed = 0;
    for (int n = 0; n < 500; ++n) {
        const QueueTable t = random_table(rng, 1 + n % 12);
        for (const auto& r : t.rows()) {
            const ConflictSet c = find_conflicts(t, r.cav_id);
            REQUIRE(oracle::same_conflicts(c, oracle::brute_conflicts(t, r.cav_id)));
            full += c.condition == ConflictCondition::FullMatch;
            mixed += c.condition == ConflictCondition::Mixed;
            // Members outrank i and each MP maps to one CAV.
            std::set<MpToken> seen;
            for (const auto& e : c.omega) {
                CHECK(t.index_of(e.cav_id) < t.index_of(r.cav_id));
                CHECK(seen.insert(e.mp).second);
            }
            CHECK(c.omega.size() <= r.mps.size() + 1);
        }
    }
    // The generator exercises every condition.
    CHECK(full > 0);
    CHECK(mixed > 0);
}

TEST_CASE("FIFO insertion and duplicates") {
    QueueTable t;
    insert_fifo(t, simple(0, 1, {1}));
    insert_fifo(t, simple(1, 2, {2}));
    insert_fifo(t, simple(2, 3, {3}));
    CHECK(t.rows()[2].cav_id == 2);
    CHECK_THROWS(insert_fifo(t, simple(1, 4, {4})));
}

TEST_CASE("events") {
    QueueTable t;
    for (int id = 0; id < 3; ++id) handle_event(t, EntryEvent{simple(id, 1 + id, {id + 1})});
    handle_event(t, DepartureEvent{1});
    REQUIRE(t.size() == 2);
    CHECK(t.index_of(0) == 0);
    CHECK(t.index_of(2) == 1);
    CHECK_THROWS(handle_event(t, DepartureEvent{1}));

    QueueRow lc = simple(5, 2, {22, 20});
    lc.mps.insert(lc.mps.begin(), MpToken::zone(1));
    handle_event(t, EntryEvent{lc});
    handle_event(t, LaneChangeCompleted{5, 1});
    CHECK(t.row(5).current_lane == 1);
    CHECK(t.row(5).original_lane == 2);
    CHECK_THROWS(handle_event(t, LaneChangeCompleted{42, 1}));
}

TEST_CASE("overtaking: a CAV that passed all MPs is not the predecessor") {
    QueueTable t;
    insert_fifo(t, simple(7, 6, {41}));
    QueueRow eight = simple(8, 3, {3});
    insert_fifo(t, eight);
    insert_fifo(t, simple(9, 6, {41}));
    // 8 turns into lane 6 ahead of 7.
    t.set_lane(8, 6);
    t.mark_passed(8);
    const ConflictSet c = find_conflicts(t, 9);
    REQUIRE(c.ip.has_value());
    CHECK(*c.ip == 7);

    // Reordering by position puts the merged CAV first within the lane's slots.
    handle_event(t, OvertakeEvent{6, {{7, 100.0}, {8, 120.0}, {9, 60.0}}});
    CHECK(t.rows()[0].cav_id == 8);
    CHECK(t.rows()[1].cav_id == 7);
    CHECK(t.rows()[2].cav_id == 9);
}

TEST_CASE("DR: nothing shared appends") {
    QueueTable t;
    std::map<int, DrEstimate> est;
    for (int id = 0; id < 3; ++id) {
        insert_fifo(t, simple(id, id + 1, {id + 1}));
        est[id] = {{{MpToken::fixed(id + 1), 10.0 + id}}, 20.0 + id};
    }
    est[9] = {{{MpToken::fixed(30), 5.0}}, 8.0};
    CHECK(insert_dr(t, simple(9, 5, {30}), est, 1.8) == 3);
}

TEST_CASE("DR: chosen position is optimal among feasible positions") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> T(0, 30);
    std::uniform_int_distribution<int> Lane(1, 4), Mp(1, 6), N(1, 7);
    for (int trial = 0; trial < 300; ++trial) {
        QueueTable t;
        std::map<int, DrEstimate> est;
        const int n = N(rng);
        for (int id = 0; id <= n; ++id) {
            QueueRow r = simple(id, Lane(rng), {});
            DrEstimate e;
            double tm = T(rng);
            for (int k = 0; k < 3; ++k) {
                const int mp = Mp(rng);
                if (r.holds(MpToken::fixed(mp))) continue;
                r.mps.push_back(MpToken::fixed(mp));
                tm += 1 + T(rng) / 10;
                e.mp_times.push_back({MpToken::fixed(mp), tm});
            }
            e.exit_time = tm + 5;
            est[id] = e;
            if (id < n) insert_fifo(t, r);
            else {
                const auto pos = dr_position(t, r, est, 1.8);
                REQUIRE(pos.has_value());
                std::vector<int> base;
                for (const auto& row : t.rows()) base.push_back(row.cav_id);
                std::size_t first = 0;
                for (std::size_t k = 0; k < t.size(); ++k)
                    if (t.rows()[k].current_lane == r.current_lane) first = k + 1;
                CHECK(*pos >= first);
                auto cost_at = [&](std::size_t p) {
                    std::vector<int> o = base;
                    o.insert(o.begin() + static_cast<std::ptrdiff_t>(p), id);
                    return dr_cost(o, est, 1.8);
                };
                for (std::size_t p = first; p <= t.size(); ++p) CHECK(cost_at(*pos) <= cost_at(p) + 1e-12);
            }
        }
    }
}

TEST_CASE("DR cost hand example") {
    // B waits 1.8 s behind A at the shared MP; C is unaffected.
    std::map<int, DrEstimate> est;
    est[0] = {{{MpToken::fixed(1), 10.0}}, 15.0};
    est[1] = {{{MpToken::fixed(1), 10.5}, {MpToken::fixed(2), 12.0}}, 16.0};
    est[2] = {{{MpToken::fixed(3), 4.0}}, 6.0};
    CHECK(dr_cost({0, 1, 2}, est, 1.8) == doctest::Approx(15 + 16 + 1.3 + 6));
    CHECK(dr_cost({1, 0, 2}, est, 1.8) == doctest::Approx(16 + 15 + 2.3 + 6));
    CHECK(dr_cost({2, 1, 0}, est, 1.8) == doctest::Approx(6 + 16 + 15 + 2.3));
}

}
