#include "ocbf/metrics.hpp"

#include <cstddef>

namespace ocbf {

double fuel_rate(double v, double a, const FuelParams& p) {
    const double cruise = p.b0 + p.b1 * v + p.b2 * v * v + p.b3 * v * v * v;
    const double accel = a > 0.0 ? a * (p.c0 + p.c1 * v + p.c2 * v * v) : 0.0;
    return cruise + accel;
}

double step_fuel(double v, double a, double dt, const FuelParams& p) {
    // The integrand is a cubic in time, so Simpson's rule is exact.
    const double f0 = fuel_rate(v, a, p);
    const double fm = fuel_rate(v + 0.5 * a * dt, a, p);
    const double f1 = fuel_rate(v + a * dt, a, p);
    return dt / 6.0 * (f0 + 4.0 * fm + f1);
}

double compute_fuel(const std::vector<double>& speeds, const std::vector<double>& accels, double dt,
                    const FuelParams& p) {
    double total = 0.0;
    for (std::size_t k = 0; k < speeds.size() && k < accels.size(); ++k)
        total += step_fuel(speeds[k], accels[k], dt, p);
    return total;
}

}  // namespace ocbf
