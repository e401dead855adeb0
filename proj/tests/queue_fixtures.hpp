// Queue tables shared by the coordinator tests and the acceptance suite.
#pragma once

#include "ocbf/coordinator.hpp"

#include "json.hpp"

#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace fixtures {

using namespace ocbf;

inline MpToken token(const std::string& s) {
    const int v = std::stoi(s.substr(1));
    return s[0] == 'Z' ? MpToken::zone(v) : MpToken::fixed(v);
}

inline QueueTable load_fixture(const std::string& path = std::string(OCBF_SOURCE_DIR) + "/tests/data/queue_snapshot.json") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    const auto j = nlohmann::json::parse(in);
    QueueTable t;
    for (const auto& r : j.at("rows")) {
        QueueRow row;
        row.cav_id = r.at("id");
        row.current_lane = r.at("lane");
        row.original_lane = r.value("original_lane", row.current_lane);
        for (const auto& m : r.at("mps")) row.mps.push_back(token(m));
        if (r.contains("hidden")) row.hidden = token(r.at("hidden"));
        insert_fifo(t, row);
    }
    return t;
}

inline QueueRow simple(int id, int lane, std::vector<int> mps) {
    QueueRow r;
    r.cav_id = id;
    r.current_lane = r.original_lane = lane;
    for (int k : mps) r.mps.push_back(MpToken::fixed(k));
    r.hidden = MpToken::zone(lane);
    return r;
}

// Random table mixing lane keepers, lane changers and exact path duplicates.
inline QueueTable random_table(std::mt19937_64& rng, int n) {
    std::uniform_int_distribution<int> Lane(1, 8), Mp(1, 12), Len(1, 5), Coin(0, 3);
    QueueTable t;
    for (int id = 0; id < n; ++id) {
        if (id > 0 && Coin(rng) == 0) {
            QueueRow copy = t.rows()[std::uniform_int_distribution<int>(0, id - 1)(rng)];
            copy.cav_id = id;
            t.insert(t.size(), copy);
            continue;
        }
        QueueRow r;
        r.cav_id = id;
        r.original_lane = r.current_lane = Lane(rng);
        const int len = Len(rng);
        std::set<int> used;
        if (Coin(rng) == 0) {
            r.mps.push_back(MpToken::zone(r.original_lane % 2 ? r.original_lane + 1 : r.original_lane - 1));
        }
        while (static_cast<int>(r.mps.size()) < len) {
            const int k = Mp(rng);
            if (used.insert(k).second) r.mps.push_back(MpToken::fixed(k));
        }
        r.hidden = MpToken::zone(r.original_lane);
        if (Coin(rng) == 0) r.passed_all = true;
        t.insert(t.size(), r);
    }
    return t;
}


}  // namespace fixtures
