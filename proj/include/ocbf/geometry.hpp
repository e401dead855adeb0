#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ocbf {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class Maneuver { Straight, Left, Right };

std::string to_string(Maneuver m);
Maneuver maneuver_from_string(const std::string& s);

/// Per-approach geometry overrides for asymmetric intersections.
struct ApproachOverride {
    double L1 = 300.0;
    double L2 = 50.0;
    double L3 = 200.0;
};

struct GeometryConfig {
    double L1 = 300.0;            ///< CZ entry to intersection box edge (m)
    double L2 = 50.0;             ///< CZ entry to lane-change zone (m)
    double L3 = 200.0;            ///< lane-change zone length (m)
    double lane_change_extra = 0.9378;  ///< extra travel for one lane change (m)
    double lane_width = 3.5;
    double turn_radius = 4.0;     ///< right-turn arc radius (m)
    std::optional<double> left_turn_radius;  ///< defaults to turn_radius + lane_width
    double exit_length = 37.0;    ///< outbound segment after the box edge kept inside the CZ (m)
    int lanes_per_approach = 2;
    std::array<std::optional<ApproachOverride>, 4> overrides{};

    ApproachOverride approach(int a) const;
    double left_radius() const { return left_turn_radius.value_or(turn_radius + lane_width); }
    /// Throws ConfigError on invalid values.
    void validate() const;
};

/// A merging-point token as it appears in the coordinator's queue table.
///
/// Fixed tokens name one of the intersection's fixed MPs. Zone tokens name the
/// lane-change zone of an inbound lane: a lane-changing CAV carries Zone(target)
/// as its floating MP, and every CAV that keeps its lane carries Zone(own lane)
/// implicitly so that merges into that lane are detected.
struct MpToken {
    enum class Kind { Fixed, Zone };
    Kind kind = Kind::Fixed;
    int value = 0;  ///< fixed MP id (1-based) or lane id

    static MpToken fixed(int k) { return {Kind::Fixed, k}; }
    static MpToken zone(int lane) { return {Kind::Zone, lane}; }
    bool is_fixed() const { return kind == Kind::Fixed; }
    friend bool operator==(const MpToken&, const MpToken&) = default;
    friend auto operator<=>(const MpToken&, const MpToken&) = default;
};

std::string to_string(const MpToken& t);

struct PathMp {
    MpToken token;
    double distance = 0.0;       ///< travel distance from the origin (includes l after a lane change)
    double base_distance = 0.0;  ///< distance along lane geometry, without the lane-change extra
    Vec2 position;
};

struct PathSpec {
    int origin_lane = 0;
    int target_lane = 0;  ///< lane the CAV drives through the intersection from
    Maneuver maneuver = Maneuver::Straight;
    bool changes_lane = false;
    double lane_change_at = 0.0;  ///< floating MP distance L_{i,k}; meaningful iff changes_lane
    double lane_change_extra = 0.0;
    std::vector<PathMp> ordered_mps;
    double total_length = 0.0;  ///< travel distance to CZ exit
    double base_length = 0.0;
    double box_entry = 0.0;  ///< base distance of the intersection box edge
    double lane_departure = 0.0;  ///< base distance where the path leaves its inbound lane centerline

    /// Base (lane-geometry) coordinate of a travel distance.
    double base_of(double travel) const;
    /// Travel distance of a base coordinate at or after the lane change.
    double travel_of(double base) const;
    /// True once the lane-change extra has been accrued at travel distance x.
    bool accrued_at(double travel) const { return changes_lane && travel > lane_change_at; }
    const PathMp* find(const MpToken& t) const;
    std::size_t fixed_mp_count() const;
};

/// One primitive of a lane-geometry centerline.
struct PathPiece {
    enum class Kind { Segment, Arc };
    Kind kind = Kind::Segment;
    Vec2 start;
    Vec2 dir;           ///< Segment: unit direction
    Vec2 center;        ///< Arc
    double radius = 0.0;
    double start_angle = 0.0;
    double sweep = 0.0;  ///< signed
    double length = 0.0;
    double s0 = 0.0;     ///< base distance at the start of this piece

    Vec2 point_at(double s_local) const;
};

struct BasePath {
    int approach = 0;
    int lane = 0;
    Maneuver maneuver = Maneuver::Straight;
    std::vector<PathPiece> pieces;
    double length = 0.0;
    double box_entry = 0.0;
    double lane_departure = 0.0;
    std::vector<PathMp> mps;  ///< fixed MPs only

    Vec2 point_at(double s) const;
    /// Base distance of a point lying on this path within tol, if any.
    std::optional<double> project(Vec2 pt, double tol = 1e-6) const;
};

struct FixedMp {
    int id = 0;
    Vec2 position;
};

/// The intersection layout: lanes, base paths and fixed MPs.
///
/// Lanes are numbered 1..4n counterclockwise, n lanes per approach, lane
/// (a*n + j + 1) being the j-th lane of approach a counted from the median.
/// Approach 0 enters from the south heading north; right-hand traffic.
class IntersectionGeometry {
public:
    explicit IntersectionGeometry(GeometryConfig cfg);

    const GeometryConfig& config() const { return cfg_; }
    int lane_count() const { return 4 * cfg_.lanes_per_approach; }
    int approach_of(int lane) const;
    int lane_index(int lane) const;  ///< 0 = median side
    bool permits(int lane, Maneuver m) const;
    /// The lane a maneuver must be driven from on the given approach.
    int lane_for(int approach, Maneuver m, int preferred_lane) const;
    /// Box half width (center to box edge).
    double box_half_width() const { return half_width_; }

    const std::vector<FixedMp>& fixed_mps() const { return fixed_; }
    const std::vector<BasePath>& base_paths() const { return paths_; }
    const BasePath& base_path(int lane, Maneuver m) const;

    /// Path template for a CAV; a lane change is inserted when the maneuver is not
    /// permitted from origin_lane. The floating MP sits at lane_change_at (default L2+L3).
    PathSpec path_for(int origin_lane, Maneuver m, std::optional<double> lane_change_at = {}) const;

    /// Lane-change zone of an approach as [start, end] base distances.
    std::pair<double, double> lane_change_zone(int approach) const;
    /// Position on a lane centerline at a base distance along the approach.
    Vec2 lane_point(int lane, double base) const;

private:
    void build_paths();
    void find_merging_points();

    GeometryConfig cfg_;
    double half_width_ = 0.0;
    std::vector<BasePath> paths_;
    std::vector<FixedMp> fixed_;
};

IntersectionGeometry build_intersection(const GeometryConfig& cfg);
PathSpec path_for(const IntersectionGeometry& g, int origin_lane, Maneuver m);

/// Coordinate transformation of CAV j's position into CAV i's frame for a shared MP.
double transform_position(double x_j, double L_ik, double L_jk, bool i_changes_lane,
                          bool j_changes_lane, double l);

}  // namespace ocbf
