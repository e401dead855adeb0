#pragma once

#include <optional>
#include <stdexcept>

namespace ocbf {

class NoSolution : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Energy/time-optimal unconstrained trajectory u*(t) = a t + b on [t0, tm].
/// Coefficients are in absolute time; evaluation uses the time shifted by t0.
struct UnconstrainedPlan {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    double t0 = 0.0;
    double tm = 0.0;
    double L = 0.0;
    double beta = 0.0;
    double v0 = 0.0;

    double duration() const { return tm - t0; }
    /// beta * T + integral of u*^2 / 2.
    double cost() const;
};

struct PlanPoint {
    double x = 0.0;
    double v = 0.0;
    double u = 0.0;
    bool clamped = false;
};

UnconstrainedPlan solve_unconstrained(double v0, double t0, double L, double beta);

/// Outside [t0, tm] the reference is held: before t0 at the entry state, after
/// tm at constant terminal speed with u = 0.
PlanPoint eval_plan(const UnconstrainedPlan& plan, double t);

/// Smallest t at which x_ip(t) + ip_offset - x_i(t) = phi v_i(t) + delta, if any.
std::optional<double> first_active_time(const UnconstrainedPlan& plan_i,
                                        const UnconstrainedPlan& plan_ip, double phi,
                                        double delta, double ip_offset = 0.0);

double place_lane_change_mp(const UnconstrainedPlan& plan_i, std::optional<double> t_a,
                            double L2, double L3);

}  // namespace ocbf
