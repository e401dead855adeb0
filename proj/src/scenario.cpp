#include "ocbf/scenario.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ocbf {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, _] : j.items())
        if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

json mix_json(const ManeuverMix& m) {
    return {{"straight", m.straight}, {"left", m.left}, {"right", m.right}};
}

ManeuverMix mix_from(const json& j, const std::string& where) {
    check_keys(j, {"straight", "left", "right"}, where);
    ManeuverMix m{0.0, 0.0, 0.0};
    read(j, "straight", m.straight, where);
    read(j, "left", m.left, where);
    read(j, "right", m.right, where);
    return m;
}

json geometry_json(const GeometryConfig& g) {
    json j = {{"L1", g.L1},
              {"L2", g.L2},
              {"L3", g.L3},
              {"lane_change_extra", g.lane_change_extra},
              {"lane_width", g.lane_width},
              {"turn_radius", g.turn_radius},
              {"exit_length", g.exit_length},
              {"lanes_per_approach", g.lanes_per_approach}};
    if (g.left_turn_radius) j["left_turn_radius"] = *g.left_turn_radius;
    json ov = json::object();
    for (int a = 0; a < 4; ++a)
        if (g.overrides[a])
            ov[std::to_string(a)] = {{"L1", g.overrides[a]->L1}, {"L2", g.overrides[a]->L2},
                                     {"L3", g.overrides[a]->L3}};
    if (!ov.empty()) j["approach_overrides"] = ov;
    return j;
}

GeometryConfig geometry_from(const json& j) {
    const std::string w = "geometry";
    check_keys(j, {"L1", "L2", "L3", "lane_change_extra", "lane_width", "turn_radius", "left_turn_radius",
                   "exit_length", "lanes_per_approach", "approach_overrides"}, w);
    GeometryConfig g;
    read(j, "L1", g.L1, w);
    read(j, "L2", g.L2, w);
    read(j, "L3", g.L3, w);
    read(j, "lane_change_extra", g.lane_change_extra, w);
    read(j, "lane_width", g.lane_width, w);
    read(j, "turn_radius", g.turn_radius, w);
    read(j, "exit_length", g.exit_length, w);
    read(j, "lanes_per_approach", g.lanes_per_approach, w);
    if (j.contains("left_turn_radius")) {
        double r = 0.0;
        read(j, "left_turn_radius", r, w);
        g.left_turn_radius = r;
    }
    if (j.contains("approach_overrides")) {
        const json& ov = j.at("approach_overrides");
        check_keys(ov, {"0", "1", "2", "3"}, w + ".approach_overrides");
        for (const auto& [k, v] : ov.items()) {
            const std::string ww = w + ".approach_overrides." + k;
            check_keys(v, {"L1", "L2", "L3"}, ww);
            ApproachOverride a{g.L1, g.L2, g.L3};
            read(v, "L1", a.L1, ww);
            read(v, "L2", a.L2, ww);
            read(v, "L3", a.L3, ww);
            g.overrides[std::stoi(k)] = a;
        }
    }
    return g;
}

}  // namespace

double ScenarioConfig::rate_for(int lane) const {
    auto it = lane_rates.find(lane);
    return it != lane_rates.end() ? it->second : rate;
}

ManeuverMix ScenarioConfig::mix_for(int lane) const {
    auto it = lane_mix.find(lane);
    return it != lane_mix.end() ? it->second : mix;
}

void ScenarioConfig::validate() const {
    geometry.validate();
    cbf.validate();
    limits.validate();
    noise.validate();
    if (dynamics == DynamicsKind::Nonlinear) nonlinear.validate();
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (weight_e && !(*weight_e > 0.0)) throw ConfigError("weight_e must be > 0");
    if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
    if (!(replan_period >= dt)) throw ConfigError("replan_period must be >= dt");
    if (!(horizon >= 0.0) || !(max_time >= horizon)) throw ConfigError("need 0 <= horizon <= max_time");
    if (!(v_entry_min > 0.0 && v_entry_max >= v_entry_min && v_entry_max <= limits.v_max))
        throw ConfigError("entry speed range must satisfy 0 < min <= max <= v_max");
    const int lanes = 4 * geometry.lanes_per_approach;
    for (const auto& [lane, r] : lane_rates) {
        if (lane < 1 || lane > lanes) throw ConfigError("lane_rates: unknown lane " + std::to_string(lane));
        if (!(r >= 0.0)) throw ConfigError("lane_rates: rate must be >= 0");
    }
    if (!(rate >= 0.0)) throw ConfigError("rate must be >= 0");
    for (const auto& [lane, m] : lane_mix)
        if (lane < 1 || lane > lanes) throw ConfigError("lane_mix: unknown lane " + std::to_string(lane));
    const int n = geometry.lanes_per_approach;
    for (int lane = 1; lane <= lanes; ++lane) {
        const ManeuverMix m = mix_for(lane);
        if (m.straight < 0 || m.left < 0 || m.right < 0)
            throw ConfigError("maneuver mix of lane " + std::to_string(lane) + " has a negative entry");
        if (std::abs(m.straight + m.left + m.right - 1.0) > 1e-9)
            throw ConfigError("maneuver mix of lane " + std::to_string(lane) + " does not sum to 1");
        const int j = (lane - 1) % n;
        if ((m.left > 0 && j != 0) || (m.right > 0 && j != n - 1))
            throw ConfigError("maneuver mix of lane " + std::to_string(lane) +
                              " includes a maneuver not permitted from that lane");
    }
}

std::string scenario_to_json_text(const ScenarioConfig& c) {
    json j;
    j["schema_version"] = kScenarioSchemaVersion;
    j["name"] = c.name;
    j["geometry"] = geometry_json(c.geometry);
    json arr = {{"rate", c.rate},
                {"mix", mix_json(c.mix)},
                {"lane_changes", c.lane_changes},
                {"v_entry_min", c.v_entry_min},
                {"v_entry_max", c.v_entry_max}};
    if (!c.lane_rates.empty()) {
        json lr = json::object();
        for (const auto& [k, v] : c.lane_rates) lr[std::to_string(k)] = v;
        arr["lane_rates"] = lr;
    }
    if (!c.lane_mix.empty()) {
        json lm = json::object();
        for (const auto& [k, v] : c.lane_mix) lm[std::to_string(k)] = mix_json(v);
        arr["lane_mix"] = lm;
    }
    j["arrivals"] = arr;
    j["beta"] = c.beta;
    if (c.weight_e) j["weight_e"] = *c.weight_e;
    j["cbf"] = {{"phi_rear", c.cbf.phi_rear},   {"phi_lateral", c.cbf.phi_lateral},
                {"delta", c.cbf.delta},         {"gamma_k", c.cbf.gamma_k},
                {"p", c.cbf.p},                 {"epsilon", c.cbf.epsilon},
                {"eta", c.cbf.eta},             {"braking_enabled", c.cbf.braking_enabled}};
    j["limits"] = {{"v_min", c.limits.v_min}, {"v_max", c.limits.v_max},
                   {"u_min", c.limits.u_min}, {"u_max", c.limits.u_max}};
    j["dynamics"] = {{"kind", to_string(c.dynamics)},
                     {"m", c.nonlinear.m},
                     {"alpha0", c.nonlinear.alpha0},
                     {"alpha1", c.nonlinear.alpha1},
                     {"alpha2", c.nonlinear.alpha2}};
    j["noise"] = {{"w_p", c.noise.w_p}, {"w_v", c.noise.w_v}, {"w_u", c.noise.w_u}};
    j["fuel"] = {{"b0", c.fuel.b0}, {"b1", c.fuel.b1}, {"b2", c.fuel.b2}, {"b3", c.fuel.b3},
                 {"c0", c.fuel.c0}, {"c1", c.fuel.c1}, {"c2", c.fuel.c2}};
    j["sequencing"] = to_string(c.sequencing);
    j["dt"] = c.dt;
    j["replan_period"] = c.replan_period;
    j["horizon"] = c.horizon;
    j["max_time"] = c.max_time;
    j["seed"] = c.seed;
    return j.dump(2) + "\n";
}

ScenarioConfig scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
    }
    check_keys(j, {"schema_version", "name", "geometry", "arrivals", "beta", "weight_e", "cbf", "limits",
                   "dynamics", "noise", "fuel", "sequencing", "dt", "replan_period", "horizon",
                   "max_time", "seed"}, "scenario");
    if (!j.contains("schema_version")) throw ConfigError("scenario: missing schema_version");
    int version = 0;
    read(j, "schema_version", version, "scenario");
    if (version != kScenarioSchemaVersion)
        throw ConfigError("scenario: unsupported schema_version " + std::to_string(version));

    ScenarioConfig c;
    const std::string w = "scenario";
    read(j, "name", c.name, w);
    if (j.contains("geometry")) c.geometry = geometry_from(j.at("geometry"));
    if (j.contains("arrivals")) {
        const json& a = j.at("arrivals");
        const std::string wa = "arrivals";
        check_keys(a, {"rate", "mix", "lane_rates", "lane_mix", "lane_changes", "v_entry_min", "v_entry_max"}, wa);
        read(a, "rate", c.rate, wa);
        if (a.contains("mix")) c.mix = mix_from(a.at("mix"), wa + ".mix");
        read(a, "lane_changes", c.lane_changes, wa);
        read(a, "v_entry_min", c.v_entry_min, wa);
        read(a, "v_entry_max", c.v_entry_max, wa);
        if (a.contains("lane_rates")) {
            for (const auto& [k, v] : a.at("lane_rates").items()) {
                if (!v.is_number()) throw ConfigError(wa + ".lane_rates: wrong type");
                c.lane_rates[std::stoi(k)] = v.get<double>();
            }
        }
        if (a.contains("lane_mix")) {
            for (const auto& [k, v] : a.at("lane_mix").items())
                c.lane_mix[std::stoi(k)] = mix_from(v, wa + ".lane_mix." + k);
        }
    }
    read(j, "beta", c.beta, w);
    if (j.contains("weight_e")) {
        double we = 0.0;
        read(j, "weight_e", we, w);
        c.weight_e = we;
    }
    if (j.contains("cbf")) {
        const json& b = j.at("cbf");
        check_keys(b, {"phi_rear", "phi_lateral", "delta", "gamma_k", "p", "epsilon", "eta", "braking_enabled"}, "cbf");
        read(b, "phi_rear", c.cbf.phi_rear, "cbf");
        read(b, "phi_lateral", c.cbf.phi_lateral, "cbf");
        read(b, "delta", c.cbf.delta, "cbf");
        read(b, "gamma_k", c.cbf.gamma_k, "cbf");
        read(b, "p", c.cbf.p, "cbf");
        read(b, "epsilon", c.cbf.epsilon, "cbf");
        read(b, "eta", c.cbf.eta, "cbf");
        read(b, "braking_enabled", c.cbf.braking_enabled, "cbf");
    }
    if (j.contains("limits")) {
        const json& l = j.at("limits");
        check_keys(l, {"v_min", "v_max", "u_min", "u_max"}, "limits");
        read(l, "v_min", c.limits.v_min, "limits");
        read(l, "v_max", c.limits.v_max, "limits");
        read(l, "u_min", c.limits.u_min, "limits");
        read(l, "u_max", c.limits.u_max, "limits");
    }
    if (j.contains("dynamics")) {
        const json& d = j.at("dynamics");
        check_keys(d, {"kind", "m", "alpha0", "alpha1", "alpha2"}, "dynamics");
        std::string kind = to_string(c.dynamics);
        read(d, "kind", kind, "dynamics");
        c.dynamics = dynamics_from_string(kind);
        read(d, "m", c.nonlinear.m, "dynamics");
        read(d, "alpha0", c.nonlinear.alpha0, "dynamics");
        read(d, "alpha1", c.nonlinear.alpha1, "dynamics");
        read(d, "alpha2", c.nonlinear.alpha2, "dynamics");
    }
    if (j.contains("noise")) {
        const json& n = j.at("noise");
        check_keys(n, {"w_p", "w_v", "w_u"}, "noise");
        read(n, "w_p", c.noise.w_p, "noise");
        read(n, "w_v", c.noise.w_v, "noise");
        read(n, "w_u", c.noise.w_u, "noise");
    }
    if (j.contains("fuel")) {
        const json& f = j.at("fuel");
        check_keys(f, {"b0", "b1", "b2", "b3", "c0", "c1", "c2"}, "fuel");
        read(f, "b0", c.fuel.b0, "fuel");
        read(f, "b1", c.fuel.b1, "fuel");
        read(f, "b2", c.fuel.b2, "fuel");
        read(f, "b3", c.fuel.b3, "fuel");
        read(f, "c0", c.fuel.c0, "fuel");
        read(f, "c1", c.fuel.c1, "fuel");
        read(f, "c2", c.fuel.c2, "fuel");
    }
    if (j.contains("sequencing")) {
        std::string s;
        read(j, "sequencing", s, w);
        c.sequencing = sequencing_from_string(s);
    }
    read(j, "dt", c.dt, w);
    read(j, "replan_period", c.replan_period, w);
    read(j, "horizon", c.horizon, w);
    read(j, "max_time", c.max_time, w);
    read(j, "seed", c.seed, w);
    c.validate();
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_json_text(ss.str());
}

}  // namespace ocbf
