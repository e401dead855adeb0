#pragma once

#include "ocbf/cbf.hpp"
#include "ocbf/coordinator.hpp"
#include "ocbf/dynamics.hpp"
#include "ocbf/geometry.hpp"
#include "ocbf/metrics.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>

namespace ocbf {

inline constexpr int kScenarioSchemaVersion = 1;

struct ManeuverMix {
    double straight = 1.0;
    double left = 0.0;
    double right = 0.0;
};

struct ScenarioConfig {
    std::string name = "default";
    GeometryConfig geometry;
    double rate = 270.0;                  ///< veh/h/lane unless overridden
    std::map<int, double> lane_rates;     ///< per-lane overrides
    ManeuverMix mix;                      ///< default mix for every lane
    std::map<int, ManeuverMix> lane_mix;  ///< per-lane overrides
    bool lane_changes = false;  ///< re-draw the lane of turning CAVs, forcing lane changes
    double v_entry_min = 8.0;
    double v_entry_max = 12.0;
    double beta = 1.0;
    std::optional<double> weight_e;  ///< defaults to max(beta, 1e-4)
    CbfConfig cbf;
    VehicleLimits limits;
    DynamicsKind dynamics = DynamicsKind::DoubleIntegrator;
    NonlinearParams nonlinear;
    NoiseSpec noise;
    FuelParams fuel;
    Sequencing sequencing = Sequencing::Fifo;
    double dt = 0.1;
    double replan_period = 0.1;
    double horizon = 600.0;   ///< arrivals are generated on [0, horizon)
    double max_time = 3600.0; ///< hard stop for draining
    unsigned seed = 1;

    double rate_for(int lane) const;
    ManeuverMix mix_for(int lane) const;
    double effective_weight_e() const { return weight_e.value_or(std::max(beta, 1e-4)); }
    /// Throws ConfigError.
    void validate() const;
};

ScenarioConfig scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::string& path);

}  // namespace ocbf
