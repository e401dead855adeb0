#include "ocbf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ocbf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kParamTol = 1e-9;
constexpr double kPointTol = 1e-6;

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a) { return std::hypot(a.x, a.y); }

Vec2 rotate(Vec2 p, int quarter_turns) {
    switch (((quarter_turns % 4) + 4) % 4) {
    case 1: return {-p.y, p.x};
    case 2: return {-p.x, -p.y};
    case 3: return {p.y, -p.x};
    default: return p;
    }
}

PathPiece segment(Vec2 start, Vec2 dir, double length) {
    PathPiece p;
    p.kind = PathPiece::Kind::Segment;
    p.start = start;
    p.dir = dir;
    p.length = length;
    return p;
}

PathPiece arc(Vec2 center, double radius, double start_angle, double sweep) {
    PathPiece p;
    p.kind = PathPiece::Kind::Arc;
    p.center = center;
    p.radius = radius;
    p.start_angle = start_angle;
    p.sweep = sweep;
    p.length = radius * std::abs(sweep);
    p.start = center + radius * Vec2{std::cos(start_angle), std::sin(start_angle)};
    return p;
}

PathPiece rotated(const PathPiece& p, int a) {
    PathPiece q = p;
    q.start = rotate(p.start, a);
    q.dir = rotate(p.dir, a);
    q.center = rotate(p.center, a);
    q.start_angle = p.start_angle + a * kPi / 2.0;
    return q;
}

// Local arc-length parameter of a point known to lie on the arc's circle, or
// a negative value when it is outside the swept range.
double arc_param(const PathPiece& arc_piece, Vec2 pt) {
    const double theta = std::atan2(pt.y - arc_piece.center.y, pt.x - arc_piece.center.x);
    double phi = arc_piece.sweep > 0 ? theta - arc_piece.start_angle : arc_piece.start_angle - theta;
    phi = std::fmod(phi, 2 * kPi);
    if (phi < 0) phi += 2 * kPi;
    const double sweep = std::abs(arc_piece.sweep);
    const double ang_tol = kParamTol / arc_piece.radius;
    if (phi > 2 * kPi - ang_tol) phi = 0.0;
    if (phi > sweep + ang_tol) return -1.0;
    return std::min(phi, sweep) * arc_piece.radius;
}

struct Contact {
    Vec2 point;
    double s_a = 0.0;
    double s_b = 0.0;
};

void seg_seg(const PathPiece& a, const PathPiece& b, std::vector<Contact>& out) {
    const double c = cross(a.dir, b.dir);
    const Vec2 qp = b.start - a.start;
    if (std::abs(c) < 1e-12) {
        if (std::abs(cross(qp, a.dir)) > kParamTol) return;
        if (dot(a.dir, b.dir) < 0) return;
        const double tq = dot(qp, a.dir);
        const double lo = std::max(0.0, tq);
        const double hi = std::min(a.length, tq + b.length);
        if (hi < lo - kParamTol) return;
        out.push_back({a.start + lo * a.dir, a.s0 + lo, b.s0 + (lo - tq)});
        return;
    }
    const double t = cross(qp, b.dir) / c;
    const double s = cross(qp, a.dir) / c;
    if (t < -kParamTol || t > a.length + kParamTol) return;
    if (s < -kParamTol || s > b.length + kParamTol) return;
    out.push_back({a.start + t * a.dir, a.s0 + std::clamp(t, 0.0, a.length),
                   b.s0 + std::clamp(s, 0.0, b.length)});
}

void seg_arc(const PathPiece& seg, const PathPiece& arc_piece, bool swapped,
             std::vector<Contact>& out) {
    const Vec2 pc = seg.start - arc_piece.center;
    const double B = dot(seg.dir, pc);
    const double C = dot(pc, pc) - arc_piece.radius * arc_piece.radius;
    double disc = B * B - C;
    const double R2 = arc_piece.radius * arc_piece.radius;
    if (disc < -1e-10 * R2) return;
    std::vector<double> ts;
    if (disc < 1e-10 * R2) {
        ts.push_back(-B);
    } else {
        disc = std::sqrt(disc);
        ts.push_back(-B - disc);
        ts.push_back(-B + disc);
    }
    for (double t : ts) {
        if (t < -kParamTol || t > seg.length + kParamTol) continue;
        const Vec2 pt = seg.start + t * seg.dir;
        const double sa = arc_param(arc_piece, pt);
        if (sa < 0) continue;
        const double s_seg = seg.s0 + std::clamp(t, 0.0, seg.length);
        const double s_arc = arc_piece.s0 + sa;
        out.push_back(swapped ? Contact{pt, s_arc, s_seg} : Contact{pt, s_seg, s_arc});
    }
}

void arc_arc(const PathPiece& a, const PathPiece& b, std::vector<Contact>& out) {
    const Vec2 d = b.center - a.center;
    const double dist = norm(d);
    if (dist < 1e-12) return;
    if (dist > a.radius + b.radius + kParamTol) return;
    if (dist < std::abs(a.radius - b.radius) - kParamTol) return;
    const double along = (a.radius * a.radius - b.radius * b.radius + dist * dist) / (2 * dist);
    const double h2 = a.radius * a.radius - along * along;
    const double h = h2 > 0 ? std::sqrt(h2) : 0.0;
    const Vec2 u = (1.0 / dist) * d;
    const Vec2 perp{-u.y, u.x};
    const Vec2 base = a.center + along * u;
    const int n = h > kPointTol ? 2 : 1;
    for (int k = 0; k < n; ++k) {
        const Vec2 pt = base + (k == 0 ? h : -h) * perp;
        const double sa = arc_param(a, pt);
        const double sb = arc_param(b, pt);
        if (sa < 0 || sb < 0) continue;
        out.push_back({pt, a.s0 + sa, b.s0 + sb});
    }
}

std::vector<Contact> contacts(const BasePath& a, const BasePath& b) {
    std::vector<Contact> raw;
    for (const auto& pa : a.pieces) {
        for (const auto& pb : b.pieces) {
            const bool sa = pa.kind == PathPiece::Kind::Segment;
            const bool sb = pb.kind == PathPiece::Kind::Segment;
            if (sa && sb) seg_seg(pa, pb, raw);
            else if (sa) seg_arc(pa, pb, false, raw);
            else if (sb) seg_arc(pb, pa, true, raw);
            else arc_arc(pa, pb, raw);
        }
    }
    std::sort(raw.begin(), raw.end(), [](const Contact& x, const Contact& y) { return x.s_a < y.s_a; });
    std::vector<Contact> out;
    for (const auto& c : raw) {
        bool dup = false;
        for (const auto& o : out) {
            if (norm(o.point - c.point) < kPointTol) { dup = true; break; }
        }
        if (!dup) out.push_back(c);
    }
    return out;
}

}  // namespace

std::string to_string(Maneuver m) {
    switch (m) {
    case Maneuver::Straight: return "straight";
    case Maneuver::Left: return "left";
    case Maneuver::Right: return "right";
    }
    return "?";
}

Maneuver maneuver_from_string(const std::string& s) {
    if (s == "straight" || s == "S") return Maneuver::Straight;
    if (s == "left" || s == "L") return Maneuver::Left;
    if (s == "right" || s == "R") return Maneuver::Right;
    throw ConfigError("unknown maneuver '" + s + "'");
}

std::string to_string(const MpToken& t) {
    if (t.is_fixed()) return "M" + std::to_string(t.value);
    return "Z" + std::to_string(t.value);
}

ApproachOverride GeometryConfig::approach(int a) const {
    if (a >= 0 && a < 4 && overrides[a]) return *overrides[a];
    return {L1, L2, L3};
}

void GeometryConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string("geometry: ") + name + " must be > 0");
    };
    positive(L1, "L1");
    positive(L2, "L2");
    positive(L3, "L3");
    positive(lane_change_extra, "l");
    positive(lane_width, "w");
    positive(turn_radius, "r");
    positive(exit_length, "exit_length");
    if (left_turn_radius) positive(*left_turn_radius, "left_turn_radius");
    if (lanes_per_approach < 1 || lanes_per_approach > 2)
        throw ConfigError("geometry: lanes_per_approach must be 1 or 2");
    for (int a = 0; a < 4; ++a) {
        const auto ap = approach(a);
        positive(ap.L1, "L1 override");
        positive(ap.L2, "L2 override");
        positive(ap.L3, "L3 override");
        if (ap.L2 + ap.L3 > ap.L1 + 1e-12)
            throw ConfigError("geometry: lane-change zone of approach " + std::to_string(a) +
                              " extends past the intersection (L2 + L3 > L1)");
    }
    const double H = (lanes_per_approach - 0.5) * lane_width + turn_radius;
    if (left_radius() > H + 0.5 * lane_width + 1e-12)
        throw ConfigError("geometry: left-turn radius does not fit inside the intersection box");
}

Vec2 PathPiece::point_at(double s_local) const {
    if (kind == Kind::Segment) return start + s_local * dir;
    const double ang = start_angle + (sweep > 0 ? 1.0 : -1.0) * s_local / radius;
    return center + radius * Vec2{std::cos(ang), std::sin(ang)};
}

Vec2 BasePath::point_at(double s) const {
    s = std::clamp(s, 0.0, length);
    for (const auto& p : pieces) {
        if (s <= p.s0 + p.length) return p.point_at(s - p.s0);
    }
    const auto& last = pieces.back();
    return last.point_at(last.length);
}

std::optional<double> BasePath::project(Vec2 pt, double tol) const {
    for (const auto& p : pieces) {
        if (p.kind == PathPiece::Kind::Segment) {
            const double t = std::clamp(dot(pt - p.start, p.dir), 0.0, p.length);
            if (norm(p.start + t * p.dir - pt) <= tol) return p.s0 + t;
        } else {
            if (std::abs(norm(pt - p.center) - p.radius) > tol) continue;
            const double sa = arc_param(p, pt);
            if (sa >= 0) return p.s0 + sa;
        }
    }
    return std::nullopt;
}

double PathSpec::base_of(double travel) const {
    if (!changes_lane || travel <= lane_change_at) return travel;
    if (travel <= lane_change_at + lane_change_extra) return lane_change_at;
    return travel - lane_change_extra;
}

double PathSpec::travel_of(double base) const {
    if (!changes_lane || base <= lane_change_at) return base;
    return base + lane_change_extra;
}

const PathMp* PathSpec::find(const MpToken& t) const {
    for (const auto& mp : ordered_mps)
        if (mp.token == t) return &mp;
    return nullptr;
}

std::size_t PathSpec::fixed_mp_count() const {
    return static_cast<std::size_t>(std::count_if(ordered_mps.begin(), ordered_mps.end(),
                                                  [](const PathMp& m) { return m.token.is_fixed(); }));
}

IntersectionGeometry::IntersectionGeometry(GeometryConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    half_width_ = (cfg_.lanes_per_approach - 0.5) * cfg_.lane_width + cfg_.turn_radius;
    build_paths();
    find_merging_points();
}

int IntersectionGeometry::approach_of(int lane) const {
    if (lane < 1 || lane > lane_count()) throw ConfigError("unknown lane l" + std::to_string(lane));
    return (lane - 1) / cfg_.lanes_per_approach;
}

int IntersectionGeometry::lane_index(int lane) const {
    approach_of(lane);
    return (lane - 1) % cfg_.lanes_per_approach;
}

bool IntersectionGeometry::permits(int lane, Maneuver m) const {
    const int j = lane_index(lane);
    const int n = cfg_.lanes_per_approach;
    switch (m) {
    case Maneuver::Straight: return true;
    case Maneuver::Left: return j == 0;
    case Maneuver::Right: return j == n - 1;
    }
    return false;
}

int IntersectionGeometry::lane_for(int approach, Maneuver m, int preferred_lane) const {
    const int n = cfg_.lanes_per_approach;
    switch (m) {
    case Maneuver::Left: return approach * n + 1;
    case Maneuver::Right: return approach * n + n;
    case Maneuver::Straight: return preferred_lane;
    }
    return preferred_lane;
}

const BasePath& IntersectionGeometry::base_path(int lane, Maneuver m) const {
    for (const auto& p : paths_)
        if (p.lane == lane && p.maneuver == m) return p;
    throw ConfigError("maneuver " + to_string(m) + " not permitted from lane l" + std::to_string(lane));
}

std::pair<double, double> IntersectionGeometry::lane_change_zone(int approach) const {
    const auto ap = cfg_.approach(approach);
    return {ap.L2, ap.L2 + ap.L3};
}

Vec2 IntersectionGeometry::lane_point(int lane, double base) const {
    const int a = approach_of(lane);
    const double H = half_width_;
    const double off = (lane_index(lane) + 0.5) * cfg_.lane_width;
    const double y0 = -(H + cfg_.approach(a).L1);
    return rotate(Vec2{off, y0 + base}, a);
}

void IntersectionGeometry::build_paths() {
    const int n = cfg_.lanes_per_approach;
    const double w = cfg_.lane_width;
    const double H = half_width_;
    const double R_left = cfg_.left_radius();
    const double exit = cfg_.exit_length;
    for (int a = 0; a < 4; ++a) {
        const double L1 = cfg_.approach(a).L1;
        const double y0 = -(H + L1);
        for (int j = 0; j < n; ++j) {
            const int lane = a * n + j + 1;
            const double off = (j + 0.5) * w;
            std::vector<std::pair<Maneuver, std::vector<PathPiece>>> local;
            local.push_back({Maneuver::Straight, {segment({off, y0}, {0, 1}, L1 + 2 * H + exit)}});
            if (j == 0) {
                const double turn_y = off - R_left;
                local.push_back({Maneuver::Left,
                                 {segment({off, y0}, {0, 1}, turn_y - y0),
                                  arc({off - R_left, off - R_left}, R_left, 0.0, kPi / 2),
                                  segment({off - R_left, off}, {-1, 0}, (off - R_left) + H + exit)}});
            }
            if (j == n - 1) {
                local.push_back({Maneuver::Right,
                                 {segment({off, y0}, {0, 1}, L1),
                                  arc({H, -H}, H - off, kPi, -kPi / 2),
                                  segment({H, -off}, {1, 0}, exit)}});
            }
            for (auto& [m, pieces] : local) {
                BasePath bp;
                bp.approach = a;
                bp.lane = lane;
                bp.maneuver = m;
                double s = 0.0;
                for (auto& p : pieces) {
                    PathPiece q = rotated(p, a);
                    q.s0 = s;
                    s += q.length;
                    bp.pieces.push_back(q);
                }
                bp.length = s;
                bp.box_entry = L1;
                bp.lane_departure = m == Maneuver::Straight ? s : bp.pieces.front().length;
                paths_.push_back(std::move(bp));
            }
        }
    }
}

void IntersectionGeometry::find_merging_points() {
    struct OnPath {
        std::size_t path;
        double s;
    };
    struct Cluster {
        Vec2 point;
        std::vector<OnPath> members;
    };
    std::vector<Cluster> clusters;
    auto add = [&](Vec2 pt, std::size_t path, double s) {
        for (auto& c : clusters) {
            if (norm(c.point - pt) < kPointTol) {
                for (auto& m : c.members)
                    if (m.path == path) { m.s = std::min(m.s, s); return; }
                c.members.push_back({path, s});
                return;
            }
        }
        clusters.push_back({pt, {{path, s}}});
    };
    for (std::size_t i = 0; i < paths_.size(); ++i) {
        for (std::size_t k = i + 1; k < paths_.size(); ++k) {
            if (paths_[i].lane == paths_[k].lane) continue;  // diverging paths of one lane
            for (const auto& c : contacts(paths_[i], paths_[k])) {
                add(c.point, i, c.s_a);
                add(c.point, k, c.s_b);
            }
        }
    }
    // Deterministic ids: first sighting walking paths in canonical order.
    std::vector<int> id_of(clusters.size(), 0);
    int next = 1;
    for (std::size_t p = 0; p < paths_.size(); ++p) {
        std::vector<std::pair<double, std::size_t>> on;
        for (std::size_t c = 0; c < clusters.size(); ++c)
            for (const auto& m : clusters[c].members)
                if (m.path == p) on.push_back({m.s, c});
        std::sort(on.begin(), on.end());
        for (auto [s, c] : on) {
            if (id_of[c] == 0) {
                id_of[c] = next++;
                fixed_.push_back({id_of[c], clusters[c].point});
            }
            paths_[p].mps.push_back({MpToken::fixed(id_of[c]), s, s, clusters[c].point});
        }
    }
}

PathSpec IntersectionGeometry::path_for(int origin_lane, Maneuver m,
                                        std::optional<double> lane_change_at) const {
    const int a = approach_of(origin_lane);
    PathSpec spec;
    spec.origin_lane = origin_lane;
    spec.maneuver = m;
    spec.changes_lane = !permits(origin_lane, m);
    spec.target_lane = spec.changes_lane ? lane_for(a, m, origin_lane) : origin_lane;
    const BasePath& bp = base_path(spec.target_lane, m);
    spec.base_length = bp.length;
    spec.box_entry = bp.box_entry;
    spec.lane_departure = bp.lane_departure;
    if (spec.changes_lane) {
        const auto [lo, hi] = lane_change_zone(a);
        const double at = lane_change_at.value_or(hi);
        if (at < lo - 1e-9 || at > hi + 1e-9)
            throw ConfigError("lane change at " + std::to_string(at) + " m is outside the lane-change zone");
        spec.lane_change_at = at;
        spec.lane_change_extra = cfg_.lane_change_extra;
        spec.ordered_mps.push_back(
            {MpToken::zone(spec.target_lane), at, at, lane_point(spec.target_lane, at)});
    }
    for (const auto& mp : bp.mps) {
        PathMp q = mp;
        q.distance = spec.travel_of(mp.base_distance);
        spec.ordered_mps.push_back(q);
    }
    spec.total_length = spec.travel_of(bp.length);
    return spec;
}

IntersectionGeometry build_intersection(const GeometryConfig& cfg) { return IntersectionGeometry(cfg); }

PathSpec path_for(const IntersectionGeometry& g, int origin_lane, Maneuver m) {
    return g.path_for(origin_lane, m);
}

double transform_position(double x_j, double L_ik, double L_jk, bool i_changes_lane,
                          bool j_changes_lane, double l) {
    if (i_changes_lane && !j_changes_lane) return x_j + L_ik - L_jk + l;
    if (j_changes_lane && !i_changes_lane) return x_j + L_ik - L_jk - l;
    return x_j + L_ik - L_jk;
}

}  // namespace ocbf
