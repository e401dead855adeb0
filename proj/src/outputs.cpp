#include "ocbf/outputs.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ocbf {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

}  // namespace

std::string metrics_json(const ScenarioConfig& cfg, const SimResult& r) {
    json cavs = json::array();
    for (const auto& c : r.cavs) {
        cavs.push_back({{"id", c.id},
                        {"origin_lane", c.origin_lane},
                        {"target_lane", c.target_lane},
                        {"maneuver", to_string(c.maneuver)},
                        {"changes_lane", c.changes_lane},
                        {"lane_change_at", c.lane_change_at},
                        {"scheduled", c.scheduled},
                        {"t0", c.t0},
                        {"tm", c.tm},
                        {"v0", c.v0},
                        {"planned_travel_time", c.planned_travel},
                        {"travel_time", c.travel_time},
                        {"energy", c.energy},
                        {"fuel", c.fuel},
                        {"min_rear_margin", finite_or_null(c.min_rear_gap)},
                        {"min_lateral_margin", finite_or_null(c.min_lateral_margin)},
                        {"departed", c.departed}});
    }
    const SafetyCounters& s = r.safety;
    json j = {{"scenario", cfg.name},
              {"seed", cfg.seed},
              {"beta", cfg.beta},
              {"sequencing", to_string(cfg.sequencing)},
              {"end_time", r.end_time},
              {"steps", r.steps},
              {"fleet",
               {{"cavs", r.fleet.cavs},
                {"mean_travel_time", r.fleet.mean_travel_time},
                {"mean_energy", r.fleet.mean_energy},
                {"mean_fuel", r.fleet.mean_fuel},
                {"average_objective", r.fleet.average_objective}}},
              {"safety",
               {{"rear_end_violations", s.rear_end_violations},
                {"lateral_violations", s.lateral_violations},
                {"co_occupancy", s.co_occupancy},
                {"infeasible_steps", s.infeasible_steps},
                {"fallback_steps", s.fallback_steps},
                {"relaxation_episodes", s.relaxation_episodes},
                {"relaxation_recovered", s.relaxation_recovered},
                {"relaxation_unresolved", s.relaxation_unresolved},
                {"deferred_entries", s.deferred_entries}}},
              {"cavs", cavs}};
    return j.dump(2) + "\n";
}

std::string trajectories_csv(const SimResult& r) {
    std::ostringstream os;
    os << "t,id,lane,x,v,u,e\n";
    char buf[160];
    for (const auto& s : r.trajectories) {
        std::snprintf(buf, sizeof buf, "%.2f,%d,%d,%.6f,%.6f,%.6f,%.6f\n", s.t, s.id, s.lane, s.x, s.v, s.u, s.e);
        os << buf;
    }
    return os.str();
}

std::string constraints_csv(const SimResult& r) {
    std::ostringstream os;
    os << "t,id,tag,coef_u,coef_e,coef_c,rhs,b,slack\n";
    char buf[256];
    for (const auto& s : r.constraints) {
        std::snprintf(buf, sizeof buf, "%.2f,%d,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.t, s.id, s.tag.c_str(),
                      s.coef_u, s.coef_e, s.coef_c, s.rhs, s.barrier, s.slack);
        os << buf;
    }
    return os.str();
}

std::string geometry_json(const IntersectionGeometry& g) {
    json mps = json::array();
    for (const auto& m : g.fixed_mps()) mps.push_back({{"id", m.id}, {"x", m.position.x}, {"y", m.position.y}});
    json paths = json::array();
    for (const auto& p : g.base_paths()) {
        json list = json::array();
        for (const auto& m : p.mps) list.push_back({{"mp", to_string(m.token)}, {"distance", m.base_distance}});
        paths.push_back({{"lane", p.lane},
                         {"approach", p.approach},
                         {"maneuver", to_string(p.maneuver)},
                         {"length", p.length},
                         {"box_entry", p.box_entry},
                         {"lane_departure", p.lane_departure},
                         {"mps", list}});
    }
    json j = {{"lanes", g.lane_count()},
              {"box_half_width", g.box_half_width()},
              {"fixed_mp_count", g.fixed_mps().size()},
              {"fixed_mps", mps},
              {"paths", paths}};
    return j.dump(2) + "\n";
}

void write_outputs(const std::string& dir, const ScenarioConfig& cfg, const SimResult& r) {
    const std::filesystem::path d(dir);
    std::filesystem::create_directories(d);
    write_file(d / "metrics.json", metrics_json(cfg, r));
    write_file(d / "trajectories.csv", trajectories_csv(r));
    std::string events;
    for (const auto& e : r.events) events += e + "\n";
    write_file(d / "events.log", events);
    if (!r.constraints.empty()) write_file(d / "constraints.csv", constraints_csv(r));
}

std::string sweep_table(const std::string& header, const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %10s %13s %10s %10s %6s %10s\n", header.c_str(), "Energy", "Travel time",
                  "Fuel", "Ave. obj.", "CAVs", "Violations");
    os << buf;
    for (const auto& r : rows) {
        const auto& f = r.result.fleet;
        const auto& s = r.result.safety;
        std::snprintf(buf, sizeof buf, "%-16s %10.4f %13.4f %10.4f %10.4f %6d %10d\n", r.label.c_str(), f.mean_energy,
                      f.mean_travel_time, f.mean_fuel, f.average_objective, f.cavs,
                      s.rear_end_violations + s.lateral_violations);
        os << buf;
    }
    return os.str();
}

}  // namespace ocbf
