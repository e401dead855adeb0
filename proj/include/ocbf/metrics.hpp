#pragma once

#include <vector>

namespace ocbf {

/// Fuel-rate model coefficients (mL/s).
struct FuelParams {
    double b0 = 0.1569;
    double b1 = 2.450e-2;
    double b2 = -7.415e-4;
    double b3 = 5.975e-5;
    double c0 = 0.07224;
    double c1 = 9.681e-2;
    double c2 = 1.075e-3;
};

/// Instantaneous fuel rate; the acceleration term vanishes for a <= 0.
double fuel_rate(double v, double a, const FuelParams& p);

/// Fuel over one step with constant acceleration a starting from speed v (exact).
double step_fuel(double v, double a, double dt, const FuelParams& p);

/// Fuel over a piecewise-constant-acceleration profile: speeds[k] at the start of step k.
double compute_fuel(const std::vector<double>& speeds, const std::vector<double>& accels, double dt,
                    const FuelParams& p);

}  // namespace ocbf
