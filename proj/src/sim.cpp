#include "ocbf/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace ocbf {

namespace {

constexpr double kTol = 1e-6;

Maneuver sample_maneuver(const ManeuverMix& mix, std::mt19937_64& rng) {
    const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (r < mix.straight) return Maneuver::Straight;
    if (r < mix.straight + mix.left) return Maneuver::Left;
    return mix.right > 0.0 ? Maneuver::Right : (mix.left > 0.0 ? Maneuver::Left : Maneuver::Straight);
}

}  // namespace

std::vector<Arrival> generate_arrivals(const ScenarioConfig& cfg, const IntersectionGeometry& geo) {
    std::vector<Arrival> out;
    for (int lane = 1; lane <= geo.lane_count(); ++lane) {
        const double lambda = cfg.rate_for(lane) / 3600.0;
        if (lambda <= 0.0) continue;
        std::seed_seq seq{static_cast<unsigned>(cfg.seed), static_cast<unsigned>(lane), 17u};
        std::mt19937_64 rng(seq);
        std::exponential_distribution<double> gap(lambda);
        std::uniform_real_distribution<double> speed(cfg.v_entry_min, cfg.v_entry_max);
        double t = 0.0;
        double prev_time = -std::numeric_limits<double>::infinity();
        double prev_v = 1.0;
        for (;;) {
            t += gap(rng);
            if (t >= cfg.horizon) break;
            Arrival a;
            a.lane = lane;
            a.maneuver = sample_maneuver(cfg.mix_for(lane), rng);
            a.v0 = speed(rng);
            a.time = std::max(t, prev_time + cfg.cbf.delta / prev_v);
            prev_time = a.time;
            prev_v = a.v0;
            out.push_back(a);
        }
    }
    std::sort(out.begin(), out.end(), [](const Arrival& a, const Arrival& b) {
        return a.time != b.time ? a.time < b.time : a.lane < b.lane;
    });
    if (cfg.lane_changes) {
        std::seed_seq seq{static_cast<unsigned>(cfg.seed), 7919u, 101u};
        std::mt19937_64 rng(seq);
        const int n = geo.config().lanes_per_approach;
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (auto& a : out) {
            if (a.maneuver == Maneuver::Straight) continue;
            a.lane = geo.approach_of(a.lane) * n + pick(rng) + 1;
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k].id = static_cast<int>(k);
    return out;
}

double plan_time_at(const UnconstrainedPlan& plan, double x) {
    if (x <= 0.0) return plan.t0;
    if (x >= plan.L) {
        const double v_end = eval_plan(plan, plan.tm).v;
        return plan.tm + (x - plan.L) / std::max(v_end, 1e-3);
    }
    double lo = plan.t0, hi = plan.tm;
    for (int it = 0; it < 100 && hi - lo > 1e-9; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (eval_plan(plan, mid).x < x) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

struct Vehicle {
    CavState st;
    UnconstrainedPlan plan;
    const BasePath* base = nullptr;
    std::vector<int> warm;
    bool lc_done = false;
    bool passed_all = false;
    double last_mp = 0.0;
    CavRecord rec;
    std::map<std::string, double> relaxed;  // open relaxation episodes -> latest true barrier
    std::map<std::string, std::array<double, 3>> lateral_info;  // row tag -> (partner, D_i, D_j)
    double x_prev = 0.0;
    double v_prev = 0.0;
    double a_prev = 0.0;       // last realized acceleration
    Kinematics measured;
    ControlOutput out;
};

struct Track {
    bool in_lane = true;
    int lane = 0;
    double base = 0.0;
    Vec2 point;
};

class Simulation {
public:
    Simulation(const ScenarioConfig& cfg, std::vector<Arrival> arrivals, const SimOptions& opts)
        : cfg_(cfg), geo_(cfg.geometry), pending_(std::move(arrivals)), opts_(opts),
          noise_rng_(cfg.seed * 0x9E3779B97F4A7C15ULL + 4241u) {
        ctrl_.cbf = cfg.cbf;
        ctrl_.limits = cfg.limits;
        ctrl_.plant = {cfg.dynamics, cfg.nonlinear};
        ctrl_.weight_e = cfg.effective_weight_e();
        ctrl_.dt = cfg.dt;
        // Worst-case error of the measured barriers under bounded noise, as distance.
        const NoiseSpec& w = cfg.noise;
        const double phi = cfg.cbf.phi_lateral;
        double d_min = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 4; ++a) d_min = std::min(d_min, cfg.geometry.approach(a).L2);
        ctrl_.rear_margin = cfg.cbf.phi_rear > 0.0
                                ? 2.0 * w.w_p + cfg.cbf.phi_rear * (w.w_v + w.w_u * cfg.dt)
                                : 2.0 * w.w_p + 2.0 * (w.w_v + w.w_u * cfg.dt) / cfg.cbf.p;
        ctrl_.lateral_margin = 2.0 * w.w_p + phi * (w.w_v + w.w_u * cfg.dt) + phi * cfg.limits.v_max * w.w_p / d_min;
        nominal_ = ctrl_;
        nominal_.rear_margin = nominal_.lateral_margin = 0.0;
        std::stable_sort(pending_.begin(), pending_.end(), [](const Arrival& a, const Arrival& b) {
            return a.time != b.time ? a.time < b.time : a.lane < b.lane;
        });
    }

    SimResult run();

private:
    int phys_lane(const Vehicle& v) const {
        const PathSpec& p = v.st.path;
        return p.changes_lane && v.st.x < p.lane_change_at ? p.origin_lane : p.target_lane;
    }

    Track track(const Vehicle& v) const {
        Track t;
        t.base = v.st.path.base_of(v.st.x);
        t.in_lane = t.base <= v.st.path.lane_departure;
        t.lane = phys_lane(v);
        if (!t.in_lane) t.point = v.base->point_at(t.base);
        return t;
    }

    /// Same origin lane, target lane and maneuver: the two CAVs follow one route.
    static bool same_route(const Vehicle& i, const Vehicle& j) {
        const PathSpec& a = i.st.path;
        const PathSpec& b = j.st.path;
        return a.origin_lane == b.origin_lane && a.target_lane == b.target_lane && a.maneuver == b.maneuver;
    }

    std::optional<double> leader_gap(const Vehicle& i, const Track& ti, const Vehicle& j, const Track& tj) const {
        if (tj.in_lane) {
            // Route-mates stay ordered across their lane changes; their travel
            // distances agree once both have accrued the lane-change extra.
            if (ti.in_lane && same_route(i, j)) {
                if (j.st.x > i.st.x) return j.st.x - i.st.x;
                return std::nullopt;
            }
            if (ti.in_lane && ti.lane == tj.lane && tj.base > ti.base) return tj.base - ti.base;
            return std::nullopt;
        }
        const auto s = i.base->project(tj.point);
        if (s && *s > ti.base) return *s - ti.base;
        return std::nullopt;
    }

    /// Nearest CAV physically ahead on i's path and the along-path gap.
    std::optional<std::pair<int, double>> physical_leader(int id) const;

    void admit(double t);
    /// Reference plan and path of an arriving CAV entering at t.
    std::pair<UnconstrainedPlan, PathSpec> plan_entry(const Arrival& a, double t) const;
    /// Rear-end state of an arrival against the last CAV in its lane.
    bool rear_clear(const Arrival& a) const;
    /// Whether an entering CAV can yield to every CAV in `ahead` (nullptr: all CAVs).
    bool lateral_clear(const PathSpec& path, double v0, const std::vector<int>* ahead) const;
    /// Whether the CAVs in rows [from, end) can yield to an entering CAV.
    bool behind_clear(const PathSpec& path, double v0, std::size_t from) const;
    std::map<int, DrEstimate> dr_estimates(double t, int id, const UnconstrainedPlan& plan,
                                           const PathSpec& path) const;
    /// MPs two paths share, as (distance on a, distance on b). in_origin: still driving in the origin lane.
    static std::vector<std::pair<double, double>> shared_mps(const PathSpec& a, bool a_in_origin,
                                                             const PathSpec& b, bool b_in_origin);
    /// Whether a CAV yielding at distance Dy to one passing at Dl can keep its lateral barrier.
    bool yield_ok(const Kinematics& y, double Dy, const Kinematics& l, double Dl) const;
    void add_vehicle(const Arrival& a, double t, const UnconstrainedPlan& plan, const PathSpec& path,
                     std::size_t pos);
    void control_step(double t);
    struct PendingCrossing {
        int i, j;
        std::string tag;
        double Di, Dj, b;
    };
    // True lateral barrier of a pending episode; interpolated at the crossing once i is past it.
    double pending_barrier(const PendingCrossing& p) const {
        const Vehicle& a = vehicles_.at(p.i);
        const Vehicle& b = vehicles_.at(p.j);
        if (a.st.x < p.Di) return lateral_barrier(a.st.kin(), {b.st.x + p.Di - p.Dj, b.st.v}, p.Di, cfg_.cbf);
        const double f = (p.Di - a.x_prev) / std::max(a.st.x - a.x_prev, 1e-12);
        const Kinematics self{p.Di, a.v_prev + f * (a.st.v - a.v_prev)};
        const double xj = b.x_prev + f * (b.st.x - b.x_prev);
        return lateral_barrier(self, {xj + p.Di - p.Dj, b.st.v}, p.Di, cfg_.cbf);
    }
    void resolve_pending(double t) {
        std::vector<PendingCrossing> keep;
        for (auto& p : crossings_) {
            if (vehicles_.count(p.i) && vehicles_.count(p.j)) {
                p.b = pending_barrier(p);
                if (p.b < 0.0 && vehicles_.at(p.i).st.x < p.Di) {
                    keep.push_back(p);
                    continue;
                }
            }
            close_episode(p.i, p.tag, p.b, t);
        }
        crossings_ = std::move(keep);
    }
    void close_episode(int id, const std::string& tag, double true_b, double t) {
        if (true_b >= 0.0) {
            ++result_.safety.relaxation_recovered;
            return;
        }
        ++result_.safety.relaxation_unresolved;
        log(stamp(t) + " unresolved cav=" + std::to_string(id) + " row=" + tag + " b=" + std::to_string(true_b));
    }
    void propagate(double t);
    void check_crossings(double t);
    void log(const std::string& s) {
        if (opts_.record_events) result_.events.push_back(s);
    }
    std::string stamp(double t) const {
        std::ostringstream os;
        os.setf(std::ios::fixed);
        os.precision(2);
        os << t;
        return os.str();
    }

    ScenarioConfig cfg_;
    IntersectionGeometry geo_;
    std::vector<Arrival> pending_;
    SimOptions opts_;
    std::mt19937_64 noise_rng_;
    ControllerConfig ctrl_;
    ControllerConfig nominal_;  // ctrl_ without noise margins
    std::vector<PendingCrossing> crossings_;
    QueueTable table_;
    std::map<int, Vehicle> vehicles_;
    std::map<int, std::pair<int, double>> last_crosser_;  // fixed MP id -> (cav, its MP distance)
    std::map<int, std::map<int, double>> crossed_at_;     // cav -> MP id -> crossing time
    std::set<int> deferred_;
    SimResult result_;
};

std::optional<std::pair<int, double>> Simulation::physical_leader(int id) const {
    const Vehicle& vi = vehicles_.at(id);
    const Track ti = track(vi);
    std::optional<std::pair<int, double>> best;
    for (const auto& [jid, vj] : vehicles_) {
        if (jid == id || vj.st.x >= vj.st.path.total_length) continue;  // departing this step
        if (const auto g = leader_gap(vi, ti, vj, track(vj)); g && (!best || *g < best->second))
            best = std::make_pair(jid, *g);
    }
    return best;
}

bool Simulation::rear_clear(const Arrival& a) const {
    double z = std::numeric_limits<double>::infinity();
    double v_last = 0.0;
    for (const auto& [id, v] : vehicles_) {
        const Track t = track(v);
        if (t.in_lane && t.lane == a.lane && t.base < z) {
            z = t.base;
            v_last = v.st.v;
        }
    }
    if (!std::isfinite(z)) return true;
    if (z < cfg_.cbf.delta) return false;
    if (cfg_.cbf.phi_rear > 0.0) return z - cfg_.cbf.phi_rear * a.v0 - cfg_.cbf.delta >= 0.0;
    // psi1 >= 0, and the rear-end row is feasible under a hard-braking leader.
    const double psi1 = (v_last - a.v0) + cfg_.cbf.p * (z - cfg_.cbf.delta);
    return psi1 >= 0.0 && (v_last - a.v0) + psi1 >= 0.0;
}

// Lateral rows have no control authority at x = 0, so an entering CAV must start
// inside every lateral safe set it yields in, with a non-decreasing barrier.
bool Simulation::lateral_clear(const PathSpec& path, double v0, const std::vector<int>* ahead) const {
    const Kinematics k0{0.0, v0};
    auto check = [&](const Vehicle& v) {
        const PathSpec& p = v.st.path;
        if (path.origin_lane == p.origin_lane && path.target_lane == p.target_lane && path.maneuver == p.maneuver)
            return true;
        for (const auto& [Dn, Dv] : shared_mps(path, true, p, !v.lc_done))
            if (!yield_ok(k0, Dn, v.st.kin(), Dv)) return false;
        return true;
    };
    if (ahead) return std::all_of(ahead->begin(), ahead->end(), [&](int id) { return check(vehicles_.at(id)); });
    return std::all_of(vehicles_.begin(), vehicles_.end(), [&](const auto& kv) { return check(kv.second); });
}

bool Simulation::behind_clear(const PathSpec& path, double v0, std::size_t from) const {
    const Kinematics k0{0.0, v0};
    for (std::size_t k = from; k < table_.size(); ++k) {
        const Vehicle& o = vehicles_.at(table_.rows()[k].cav_id);
        const PathSpec& p = o.st.path;
        if (path.origin_lane == p.origin_lane && path.target_lane == p.target_lane && path.maneuver == p.maneuver)
            continue;
        for (const auto& [Do, Dn] : shared_mps(p, !o.lc_done, path, true))
            if (!yield_ok(o.st.kin(), Do, k0, Dn)) return false;
    }
    return true;
}

std::map<int, DrEstimate> Simulation::dr_estimates(double t, int id, const UnconstrainedPlan& plan,
                                                   const PathSpec& path) const {
    std::map<int, DrEstimate> est;
    for (const auto& r : table_.rows()) {
        const Vehicle& o = vehicles_.at(r.cav_id);
        auto eta = [&](double d) {
            return std::max(plan_time_at(o.plan, d), t + (d - o.st.x) / std::max(o.st.v, 1.0));
        };
        DrEstimate e;
        for (const auto& mp : o.st.path.ordered_mps)
            if (mp.token.is_fixed() && mp.distance > o.st.x) e.mp_times.push_back({mp.token, eta(mp.distance)});
        e.exit_time = eta(o.st.path.total_length);
        est[r.cav_id] = e;
    }
    DrEstimate mine;
    for (const auto& mp : path.ordered_mps)
        if (mp.token.is_fixed()) mine.mp_times.push_back({mp.token, plan_time_at(plan, mp.distance)});
    mine.exit_time = plan.tm;
    est[id] = mine;
    return est;
}

std::vector<std::pair<double, double>> Simulation::shared_mps(const PathSpec& a, bool a_in_origin,
                                                              const PathSpec& b, bool b_in_origin) {
    std::vector<std::pair<double, double>> out;
    for (const auto& mp : a.ordered_mps)
        if (mp.token.is_fixed())
            if (const PathMp* o = b.find(mp.token)) out.emplace_back(mp.distance, o->distance);
    auto claims = [](const PathSpec& p, bool in_origin, int lane) {
        return (p.changes_lane && p.target_lane == lane) || (in_origin && p.origin_lane == lane);
    };
    std::vector<int> lanes;
    if (a.changes_lane) lanes.push_back(a.target_lane);
    if (a_in_origin) lanes.push_back(a.origin_lane);
    for (int lane : lanes) {
        if (!claims(b, b_in_origin, lane)) continue;
        const bool a_in = a.changes_lane && a.target_lane == lane;
        const bool b_in = b.changes_lane && b.target_lane == lane;
        if (a_in) out.emplace_back(a.lane_change_at, b_in ? b.lane_change_at : a.lane_change_at);
        else if (b_in) out.emplace_back(b.lane_change_at, b.lane_change_at);
    }
    return out;
}

bool Simulation::yield_ok(const Kinematics& y, double Dy, const Kinematics& l, double Dl) const {
    if (y.x > Dy) return true;
    const double phi = cfg_.cbf.phi_lateral;
    const double b = l.x + Dy - Dl - y.x - phi * y.v * y.x / Dy - cfg_.cbf.delta;
    const double db = l.v - y.v - phi * (y.v * y.v + y.x * cfg_.limits.u_min) / Dy;
    return b >= 0.0 && db + cfg_.cbf.gamma_k * b >= 0.0;
}

void Simulation::admit(double t) {
    std::vector<int> blocked;
    std::vector<Arrival> keep;
    auto defer = [&](const Arrival& a) {
        blocked.push_back(a.lane);
        deferred_.insert(a.id);
        keep.push_back(a);
    };
    for (const auto& a : pending_) {
        if (a.time > t + kTol) {
            keep.push_back(a);
            continue;
        }
        if (std::find(blocked.begin(), blocked.end(), a.lane) != blocked.end() || !rear_clear(a)) {
            defer(a);
            continue;
        }
        const auto [plan, path] = plan_entry(a, t);
        std::optional<std::size_t> pos;
        if (cfg_.sequencing == Sequencing::Dr) {
            QueueRow probe;
            probe.cav_id = a.id;
            probe.current_lane = a.lane;
            const double headway = cfg_.cbf.phi_lateral + cfg_.cbf.delta / std::max(cfg_.v_entry_min, 1.0);
            // A position is usable when the newcomer can yield to the rows ahead of it and
            // the rows behind it can yield to the newcomer.
            auto admissible = [&](std::size_t p) {
                std::vector<int> ahead;
                for (std::size_t k = 0; k < p; ++k) ahead.push_back(table_.rows()[k].cav_id);
                return lateral_clear(path, a.v0, &ahead) && behind_clear(path, a.v0, p);
            };
            pos = dr_position(table_, probe, dr_estimates(t, a.id, plan, path), headway, admissible);
        } else if (lateral_clear(path, a.v0, nullptr)) {
            pos = table_.size();
        }
        if (!pos) {
            defer(a);
            continue;
        }
        add_vehicle(a, t, plan, path, *pos);
    }
    pending_ = std::move(keep);
}

std::pair<UnconstrainedPlan, PathSpec> Simulation::plan_entry(const Arrival& a, double t) const {
    PathSpec path = geo_.path_for(a.lane, a.maneuver);
    UnconstrainedPlan plan = solve_unconstrained(a.v0, t, path.total_length, cfg_.beta);
    if (path.changes_lane) {
        // The CAV physically last in the origin lane.
        const Vehicle* ip = nullptr;
        double ip_base = std::numeric_limits<double>::infinity();
        for (const auto& [id, v] : vehicles_) {
            const Track tr = track(v);
            if (tr.in_lane && tr.lane == a.lane && tr.base < ip_base) {
                ip = &v;
                ip_base = tr.base;
            }
        }
        std::optional<double> t_a;
        if (ip) t_a = first_active_time(plan, ip->plan, cfg_.cbf.phi_rear, cfg_.cbf.delta);
        const auto ap = geo_.config().approach(geo_.approach_of(a.lane));
        path = geo_.path_for(a.lane, a.maneuver, place_lane_change_mp(plan, t_a, ap.L2, ap.L3));
    }
    return {plan, path};
}

void Simulation::add_vehicle(const Arrival& a, double t, const UnconstrainedPlan& plan, const PathSpec& path,
                             std::size_t pos) {
    Vehicle v;
    v.st.id = a.id;
    v.st.original_lane = a.lane;
    v.st.current_lane = a.lane;
    v.st.maneuver = a.maneuver;
    v.st.v = a.v0;
    v.st.t0 = t;
    v.plan = plan;
    v.st.path = path;
    v.base = &geo_.base_path(path.target_lane, a.maneuver);
    for (const auto& mp : path.ordered_mps) v.last_mp = std::max(v.last_mp, mp.distance);
    v.passed_all = path.ordered_mps.empty();

    v.rec.id = a.id;
    v.rec.origin_lane = a.lane;
    v.rec.target_lane = path.target_lane;
    v.rec.maneuver = a.maneuver;
    v.rec.changes_lane = path.changes_lane;
    v.rec.lane_change_at = path.changes_lane ? path.lane_change_at : 0.0;
    v.rec.scheduled = a.time;
    v.rec.t0 = t;
    v.rec.v0 = a.v0;
    v.rec.planned_travel = v.plan.duration();
    v.rec.min_rear_gap = std::numeric_limits<double>::infinity();
    v.rec.min_lateral_margin = std::numeric_limits<double>::infinity();

    QueueRow row;
    row.cav_id = a.id;
    row.current_lane = a.lane;
    row.original_lane = a.lane;
    for (const auto& mp : path.ordered_mps) row.mps.push_back(mp.token);
    // Changers also claim their origin lane until they leave it, so that two CAVs
    // swapping lanes are ordered at the zone.
    row.hidden = MpToken::zone(a.lane);
    row.passed_all = v.passed_all;

    table_.insert(pos, std::move(row));
    vehicles_.emplace(a.id, std::move(v));
    std::ostringstream os;
    os << stamp(t) << " entry cav=" << a.id << " lane=" << a.lane << " maneuver=" << to_string(a.maneuver)
       << " v0=" << a.v0 << " priority=" << pos;
    if (path.changes_lane) os << " lane_change_to=" << path.target_lane << " at=" << path.lane_change_at;
    log(os.str());
}

void Simulation::control_step(double t) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (auto& [id, v] : vehicles_) {
        v.measured = v.st.kin();
        if (cfg_.noise.w_p > 0.0) v.measured.x += cfg_.noise.w_p * unit(noise_rng_);
        if (cfg_.noise.w_v > 0.0) v.measured.v = std::max(0.0, v.measured.v + cfg_.noise.w_v * unit(noise_rng_));
    }
    for (const auto& row : table_.rows()) {
        Vehicle& vi = vehicles_.at(row.cav_id);
        const ConflictSet cs = find_conflicts(table_, row.cav_id);
        ControlInput in;
        in.self = vi.measured;
        in.ref = eval_plan(vi.plan, t);
        ControlInput truth;  // same rows from true states, for recovery bookkeeping
        truth.self = vi.st.kin();
        if (const auto lead = physical_leader(row.cav_id)) {
            const Vehicle& vj = vehicles_.at(lead->first);
            in.ip_id = lead->first;
            const double z = lead->second + (vj.measured.x - vj.st.x) - (vi.measured.x - vi.st.x);
            in.ip = {vi.measured.x + z, vj.measured.v};
            truth.ip_id = lead->first;
            truth.ip = {vi.st.x + lead->second, vj.st.v};
            in.ip_accel = cfg_.limits.u_min;  // the leader may brake at any time
        }
        for (const auto& entry : cs.omega) {
            const Vehicle& vj = vehicles_.at(entry.cav_id);
            if (same_route(vi, vj)) continue;  // ordered by the rear-end row
            const PathSpec& pi = vi.st.path;
            const PathSpec& pj = vj.st.path;
            double Di = 0.0, Dj = 0.0;
            if (entry.mp.is_fixed()) {
                Di = pi.find(entry.mp)->distance;
                Dj = pj.find(entry.mp)->distance;
            } else {
                const bool i_changes = pi.changes_lane && pi.target_lane == entry.mp.value;
                const bool j_changes = pj.changes_lane && pj.target_lane == entry.mp.value;
                if (i_changes) {
                    Di = pi.lane_change_at;
                    Dj = j_changes ? pj.lane_change_at : pi.lane_change_at;
                } else if (j_changes) {
                    Di = Dj = pj.lane_change_at;
                } else {
                    continue;
                }
            }
            in.lateral.push_back({entry.cav_id, entry.mp, {vj.measured.x + Di - Dj, vj.measured.v}, Di});
            truth.lateral.push_back({entry.cav_id, entry.mp, {vj.st.x + Di - Dj, vj.st.v}, Di});
            vi.lateral_info[RowTag{RowKind::Lateral, entry.cav_id, entry.mp}.str()] = {
                static_cast<double>(entry.cav_id), Di, Dj};
        }

        const auto start = std::chrono::steady_clock::now();
        vi.out = ocbf_step(in, ctrl_, &vi.warm);
        const auto stop = std::chrono::steady_clock::now();
        result_.controller_seconds += std::chrono::duration<double>(stop - start).count();
        ++result_.controller_calls;

        if (vi.out.outcome != StepOutcome::Optimal) {
            ++result_.safety.infeasible_steps;
            if (vi.out.outcome == StepOutcome::Fallback) ++result_.safety.fallback_steps;
            std::ostringstream os;
            os << stamp(t) << " infeasible cav=" << row.cav_id
               << (vi.out.outcome == StepOutcome::Fallback ? " fallback=max_brake" : " fallback=best_effort")
               << " rows=";
            for (std::size_t k = 0; k < vi.out.conflict_tags.size(); ++k)
                os << (k ? "," : "") << vi.out.conflict_tags[k];
            log(os.str());
        }

        // An episode opens when a row is relaxed and closes once the row is restored with the
        // true barrier nonnegative. A row that disappears closes by its last true barrier.
        std::map<std::string, double> true_b;
        for (const auto& r : build_rows(truth, nominal_)) true_b[r.tag.str()] = r.barrier;
        std::set<std::string> present;
        for (const auto& r : vi.out.rows) {
            if (r.tag.kind == RowKind::Clf || r.tag.kind == RowKind::SpeedMax || r.tag.kind == RowKind::SpeedMin)
                continue;
            const std::string tag = r.tag.str();
            present.insert(tag);
            const double bt = true_b.count(tag) ? true_b.at(tag) : r.barrier;
            const bool relaxed_now = r.barrier < 0.0;
            auto it = vi.relaxed.find(tag);
            if (relaxed_now && it == vi.relaxed.end()) {
                ++result_.safety.relaxation_episodes;
                log(stamp(t) + " relax cav=" + std::to_string(row.cav_id) + " row=" + tag);
                vi.relaxed[tag] = bt;
            } else if (it != vi.relaxed.end()) {
                it->second = bt;
                if (!relaxed_now && bt >= 0.0) {
                    ++result_.safety.relaxation_recovered;
                    log(stamp(t) + " restore cav=" + std::to_string(row.cav_id) + " row=" + tag);
                    vi.relaxed.erase(it);
                }
            }
        }
        for (auto it = vi.relaxed.begin(); it != vi.relaxed.end();) {
            if (present.count(it->first)) {
                ++it;
                continue;
            }
            // A dropped lateral row is judged at the true crossing.
            const auto li = vi.lateral_info.find(it->first);
            if (li != vi.lateral_info.end() && it->second < 0.0 && vehicles_.count(static_cast<int>(li->second[0]))) {
                const auto& [j, Di, Dj] = li->second;
                PendingCrossing p{row.cav_id, static_cast<int>(j), it->first, Di, Dj, it->second};
                if (vi.st.x < Di) {
                    crossings_.push_back(p);
                } else {
                    close_episode(row.cav_id, it->first, pending_barrier(p), t);
                }
            } else {
                close_episode(row.cav_id, it->first, it->second, t);
            }
            it = vi.relaxed.erase(it);
        }

        if (opts_.record_constraints) {
            for (std::size_t k = 0; k < vi.out.rows.size(); ++k) {
                const auto& r = vi.out.rows[k];
                result_.constraints.push_back({t, row.cav_id, r.tag.str(), r.coef_u, r.coef_e, r.coef_c, r.rhs,
                                               r.barrier, vi.out.slack.empty() ? 0.0 : vi.out.slack[k]});
            }
        }
    }
}

void Simulation::propagate(double t) {
    const double dt = cfg_.dt;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (auto& [id, v] : vehicles_) {
        NoiseSample n;
        if (cfg_.noise.w_u > 0.0) n.w2 = cfg_.noise.w_u * unit(noise_rng_);
        if (opts_.record_trajectories)
            result_.trajectories.push_back({t, id, phys_lane(v), v.st.x, v.st.v, v.out.u_norm, v.out.e});
        v.x_prev = v.st.x;
        v.v_prev = v.st.v;
        const Kinematics next = cfg_.dynamics == DynamicsKind::Nonlinear
                                    ? step_nonlinear(v.st.kin(), v.out.u, dt, cfg_.nonlinear, n)
                                    : step_double_integrator(v.st.kin(), v.out.u, dt, n);
        v.st.x = next.x;
        v.st.v = next.v;
        v.st.u_applied = v.out.u;
        v.rec.energy += 0.5 * v.out.u_norm * v.out.u_norm * dt;
        v.a_prev = (v.st.v - v.v_prev) / dt;
        v.rec.fuel += step_fuel(v.v_prev, v.a_prev, dt, cfg_.fuel);
    }
}

void Simulation::check_crossings(double t) {
    const double dt = cfg_.dt;
    struct Crossing {
        double tc;
        int id;
        int mp;
        double D;
    };
    std::vector<Crossing> crossings;
    for (const auto& [id, v] : vehicles_) {
        for (const auto& mp : v.st.path.ordered_mps) {
            if (!mp.token.is_fixed()) continue;
            if (v.x_prev < mp.distance && v.st.x >= mp.distance) {
                const double frac = (mp.distance - v.x_prev) / (v.st.x - v.x_prev);
                crossings.push_back({t + frac * dt, id, mp.token.value, mp.distance});
            }
        }
    }
    std::sort(crossings.begin(), crossings.end(), [](const Crossing& a, const Crossing& b) {
        return a.tc != b.tc ? a.tc < b.tc : a.id < b.id;
    });
    for (const auto& c : crossings) {
        Vehicle& vi = vehicles_.at(c.id);
        auto it = last_crosser_.find(c.mp);
        if (it != last_crosser_.end() && vehicles_.count(it->second.first)) {
            const Vehicle& vj = vehicles_.at(it->second.first);
            if (vj.st.path.target_lane != vi.st.path.target_lane) {
                const double f = (c.tc - t) / dt;
                const double xj = vj.x_prev + f * (vj.st.x - vj.x_prev);
                const double vi_c = vi.v_prev + f * (vi.st.v - vi.v_prev);
                const double margin = (xj - it->second.second) - cfg_.cbf.phi_lateral * vi_c - cfg_.cbf.delta;
                vi.rec.min_lateral_margin = std::min(vi.rec.min_lateral_margin, margin);
                if (margin < -kTol) {
                    ++result_.safety.lateral_violations;
                    std::ostringstream os;
                    os << stamp(c.tc) << " lateral_violation cav=" << c.id << " other=" << it->second.first
                       << " mp=M" << c.mp << " margin=" << margin;
                    log(os.str());
                }
            }
        }
        last_crosser_[c.mp] = {c.id, c.D};
    }

    // Two CAVs from different lanes closer to a shared MP than delta in total.
    std::map<int, std::vector<std::pair<int, double>>> near;
    for (const auto& [id, v] : vehicles_) {
        for (const auto& mp : v.st.path.ordered_mps) {
            if (!mp.token.is_fixed()) continue;
            const double d = std::abs(v.st.x - mp.distance);
            if (d < cfg_.cbf.delta) near[mp.token.value].push_back({id, d});
        }
    }
    for (const auto& [mp, list] : near) {
        for (std::size_t a = 0; a < list.size(); ++a) {
            for (std::size_t b = a + 1; b < list.size(); ++b) {
                const Vehicle& va = vehicles_.at(list[a].first);
                const Vehicle& vb = vehicles_.at(list[b].first);
                if (va.st.path.target_lane == vb.st.path.target_lane) continue;
                if (list[a].second + list[b].second < cfg_.cbf.delta - kTol) {
                    ++result_.safety.co_occupancy;
                    std::ostringstream os;
                    os << stamp(t + dt) << " co_occupancy mp=M" << mp << " cavs=" << list[a].first << ","
                       << list[b].first;
                    log(os.str());
                }
            }
        }
    }
}

SimResult Simulation::run() {
    const double dt = cfg_.dt;
    const int replan_every = std::max(1, static_cast<int>(std::lround(cfg_.replan_period / dt)));
    double t = 0.0;
    int k = 0;
    while (t < cfg_.max_time - kTol) {
        if (pending_.empty() && vehicles_.empty()) break;
        if (k % replan_every == 0) admit(t);
        control_step(t);
        propagate(t);
        check_crossings(t);
        resolve_pending(t + dt);
        const double t_next = (k + 1) * dt;

        for (auto& [id, v] : vehicles_) {
            const PathSpec& p = v.st.path;
            if (p.changes_lane && !v.lc_done && v.st.x >= p.lane_change_at) {
                v.lc_done = true;
                handle_event(table_, LaneChangeCompleted{id, p.target_lane});
                log(stamp(t_next) + " lane_change cav=" + std::to_string(id) + " lane=" + std::to_string(p.target_lane));
            }
            if (!v.passed_all && v.st.x > v.last_mp) {
                v.passed_all = true;
                table_.mark_passed(id);
            }
        }

        for (auto& [id, v] : vehicles_) {
            const auto lead = physical_leader(id);
            if (!lead) continue;
            const double margin = lead->second - cfg_.cbf.phi_rear * v.st.v - cfg_.cbf.delta;
            v.rec.min_rear_gap = std::min(v.rec.min_rear_gap, margin);
            if (margin < -kTol) {
                ++result_.safety.rear_end_violations;
                std::ostringstream os;
                os << stamp(t_next) << " rear_violation cav=" << id << " leader=" << lead->first
                   << " margin=" << margin;
                log(os.str());
            }
        }

        std::vector<int> gone;
        for (auto& [id, v] : vehicles_) {
            if (v.st.x < v.st.path.total_length) continue;
            const double frac = (v.st.path.total_length - v.x_prev) / std::max(v.st.x - v.x_prev, 1e-12);
            v.rec.tm = t + frac * dt;
            v.rec.travel_time = v.rec.tm - v.rec.scheduled;
            v.rec.departed = true;
            v.st.status = CavStatus::Departed;
            for (const auto& [tag, b] : v.relaxed) close_episode(id, tag, b, t);
            handle_event(table_, DepartureEvent{id});
            log(stamp(v.rec.tm) + " departure cav=" + std::to_string(id));
            result_.cavs.push_back(v.rec);
            gone.push_back(id);
        }
        for (int id : gone) vehicles_.erase(id);
        ++k;
        t = t_next;
    }
    for (auto& [id, v] : vehicles_) {
        v.rec.travel_time = t - v.rec.scheduled;
        result_.cavs.push_back(v.rec);
        log(stamp(t) + " unfinished cav=" + std::to_string(id));
    }
    std::sort(result_.cavs.begin(), result_.cavs.end(),
              [](const CavRecord& a, const CavRecord& b) { return a.id < b.id; });
    result_.end_time = t;
    result_.steps = k;
    result_.safety.deferred_entries = static_cast<int>(deferred_.size());

    FleetSummary& f = result_.fleet;
    int n = 0;
    for (const auto& c : result_.cavs) {
        if (!c.departed) continue;
        ++n;
        f.mean_travel_time += c.travel_time;
        f.mean_energy += c.energy;
        f.mean_fuel += c.fuel;
    }
    f.cavs = n;
    if (n > 0) {
        f.mean_travel_time /= n;
        f.mean_energy /= n;
        f.mean_fuel /= n;
    }
    f.average_objective = cfg_.beta * f.mean_travel_time + f.mean_energy;
    return result_;
}

}  // namespace

SimResult run_with_arrivals(const ScenarioConfig& cfg, const std::vector<Arrival>& arrivals,
                            const SimOptions& opts) {
    cfg.validate();
    Simulation sim(cfg, arrivals, opts);
    return sim.run();
}

SimResult run(const ScenarioConfig& cfg, const SimOptions& opts) {
    cfg.validate();
    const IntersectionGeometry geo(cfg.geometry);
    return run_with_arrivals(cfg, generate_arrivals(cfg, geo), opts);
}

}  // namespace ocbf
