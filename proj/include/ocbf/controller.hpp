#pragma once

#include "ocbf/cbf.hpp"
#include "ocbf/refplan.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ocbf {

struct ControllerConfig {
    CbfConfig cbf;
    VehicleLimits limits;
    Plant plant;
    double weight_e = 1.0;       ///< weight on e^2
    double slack_weight = 1.0;   ///< quadratic weight on each relaxation variable
    double best_effort_weight = 1e4;  ///< quadratic weight on slacks in the infeasibility retry
    /// Control period. When > 0, lateral rows are tightened so that the constraint also
    /// holds between samples under piecewise-constant control.
    double dt = 0.0;
    /// Extra distance added to delta in rear-end and lateral rows, covering measurement error.
    double rear_margin = 0.0;
    double lateral_margin = 0.0;
};

struct LateralPartner {
    int cav_id = 0;
    MpToken mp;
    Kinematics state;  ///< already transformed into the controlled CAV's coordinates
    double x_mp = 0.0;
};

struct ControlInput {
    Kinematics self;
    PlanPoint ref;
    std::optional<int> ip_id;
    Kinematics ip;  ///< meaningful iff ip_id
    double ip_accel = 0.0;  ///< assumed acceleration of the preceding CAV
    std::vector<LateralPartner> lateral;
};

enum class StepOutcome { Optimal, BestEffort, Fallback };

struct ControlOutput {
    double u = 0.0;  ///< applied control (force for the nonlinear plant)
    double u_norm = 0.0;  ///< control per unit mass
    double e = 0.0;
    StepOutcome outcome = StepOutcome::Optimal;
    std::vector<ConstraintRow> rows;
    std::vector<double> slack;  ///< aligned with rows; 0 when not relaxed
    std::vector<std::string> conflict_tags;
    std::vector<int> active;
};

/// Assembles the CBF/CLF rows for one CAV and step.
std::vector<ConstraintRow> build_rows(const ControlInput& in, const ControllerConfig& cfg);

/// One OCBF step. `warm` carries the previous active set and is updated in place.
ControlOutput ocbf_step(const ControlInput& in, const ControllerConfig& cfg,
                        std::vector<int>* warm = nullptr);

}  // namespace ocbf
