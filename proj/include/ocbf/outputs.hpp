#pragma once

#include "ocbf/geometry.hpp"
#include "ocbf/scenario.hpp"
#include "ocbf/sim.hpp"

#include <string>
#include <vector>

namespace ocbf {

/// Per-CAV and fleet metrics. Contains no wall-clock data, so equal runs give equal text.
std::string metrics_json(const ScenarioConfig& cfg, const SimResult& r);
std::string trajectories_csv(const SimResult& r);
std::string constraints_csv(const SimResult& r);
std::string geometry_json(const IntersectionGeometry& g);

/// Writes trajectories.csv, metrics.json, events.log and, if recorded, constraints.csv.
void write_outputs(const std::string& dir, const ScenarioConfig& cfg, const SimResult& r);

struct SweepRow {
    std::string label;
    SimResult result;
    double beta = 0.0;
};

/// Fixed-width table with Energy, Travel time, Fuel and Ave. obj. columns.
std::string sweep_table(const std::string& header, const std::vector<SweepRow>& rows);

}  // namespace ocbf
