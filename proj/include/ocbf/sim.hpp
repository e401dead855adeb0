#pragma once

#include "ocbf/controller.hpp"
#include "ocbf/coordinator.hpp"
#include "ocbf/refplan.hpp"
#include "ocbf/scenario.hpp"

#include <random>
#include <string>
#include <vector>

namespace ocbf {

struct Arrival {
    int id = 0;
    double time = 0.0;
    int lane = 0;
    Maneuver maneuver = Maneuver::Straight;
    double v0 = 0.0;
};

/// Per-lane Poisson arrivals on [0, horizon). Consecutive arrivals in a lane are spaced
/// so that the previous CAV has covered delta at its entry speed. With lane changes
/// enabled, turning CAVs get their lane re-drawn from a separate random stream.
std::vector<Arrival> generate_arrivals(const ScenarioConfig& cfg, const IntersectionGeometry& geo);

struct CavRecord {
    int id = 0;
    int origin_lane = 0;
    int target_lane = 0;
    Maneuver maneuver = Maneuver::Straight;
    bool changes_lane = false;
    double lane_change_at = 0.0;
    double scheduled = 0.0;  ///< arrival time before any entry deferral
    double t0 = 0.0;
    double tm = 0.0;
    double v0 = 0.0;
    double planned_travel = 0.0;
    double travel_time = 0.0;  ///< CZ exit minus scheduled arrival, so entry waiting counts
    double energy = 0.0;
    double fuel = 0.0;
    double min_rear_gap = 0.0;  ///< smallest gap to the physical leader minus the required gap
    double min_lateral_margin = 0.0;  ///< smallest MP-crossing margin
    bool departed = false;
};

struct FleetSummary {
    int cavs = 0;
    double mean_travel_time = 0.0;
    double mean_energy = 0.0;
    double mean_fuel = 0.0;
    double average_objective = 0.0;
};

struct SafetyCounters {
    int rear_end_violations = 0;   ///< CAV-steps with gap below the required minimum
    int lateral_violations = 0;    ///< MP crossings with insufficient headway
    int co_occupancy = 0;          ///< CAV pairs both near a shared MP closer than delta
    int infeasible_steps = 0;      ///< steps where the nominal QP was infeasible
    int fallback_steps = 0;        ///< steps solved by maximum braking
    int relaxation_episodes = 0;
    int relaxation_recovered = 0;
    int relaxation_unresolved = 0;  ///< episodes that ended with the row removed while b < 0
    int deferred_entries = 0;
};

struct TrajectorySample {
    double t = 0.0;
    int id = 0;
    int lane = 0;
    double x = 0.0;
    double v = 0.0;
    double u = 0.0;
    double e = 0.0;
};

struct ConstraintSample {
    double t = 0.0;
    int id = 0;
    std::string tag;
    double coef_u = 0.0;
    double coef_e = 0.0;
    double coef_c = 0.0;
    double rhs = 0.0;
    double barrier = 0.0;
    double slack = 0.0;
};

struct SimOptions {
    bool record_trajectories = false;
    bool record_constraints = false;
    bool record_events = true;
};

struct SimResult {
    std::vector<CavRecord> cavs;
    FleetSummary fleet;
    SafetyCounters safety;
    double end_time = 0.0;
    int steps = 0;
    double controller_seconds = 0.0;  ///< wall time spent in controller steps
    long controller_calls = 0;
    std::vector<TrajectorySample> trajectories;
    std::vector<ConstraintSample> constraints;
    std::vector<std::string> events;

    double mean_controller_time() const {
        return controller_calls ? controller_seconds / static_cast<double>(controller_calls) : 0.0;
    }
};

SimResult run(const ScenarioConfig& cfg, const SimOptions& opts = {});
/// Same as run() with a pre-built arrival schedule.
SimResult run_with_arrivals(const ScenarioConfig& cfg, const std::vector<Arrival>& arrivals,
                            const SimOptions& opts = {});

/// Time at which the plan reaches travel distance x (extrapolated at terminal speed past L).
double plan_time_at(const UnconstrainedPlan& plan, double x);

}  // namespace ocbf
