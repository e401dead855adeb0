#include "ocbf/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace ocbf {

std::string to_string(DynamicsKind k) {
    return k == DynamicsKind::Nonlinear ? "nonlinear" : "double_integrator";
}

DynamicsKind dynamics_from_string(const std::string& s) {
    if (s == "double_integrator") return DynamicsKind::DoubleIntegrator;
    if (s == "nonlinear") return DynamicsKind::Nonlinear;
    throw ConfigError("unknown dynamics kind '" + s + "'");
}

void NonlinearParams::validate() const {
    if (!(m > 0.0)) throw ConfigError("dynamics: mass must be > 0");
    if (!(alpha0 > 0.0 && alpha1 > 0.0 && alpha2 > 0.0))
        throw ConfigError("dynamics: resistance coefficients must be > 0");
}

void NoiseSpec::validate() const {
    if (!(w_p >= 0.0 && w_v >= 0.0 && w_u >= 0.0))
        throw ConfigError("noise: bounds must be >= 0");
}

double resistance_force(double v, const NonlinearParams& p) {
    const double sgn = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    return p.alpha0 * sgn + p.alpha1 * v + p.alpha2 * v * v;
}

Kinematics step_double_integrator(Kinematics s, double u, double dt, NoiseSample n) {
    return {s.x + (s.v + n.w1) * dt, std::max(0.0, s.v + (u + n.w2) * dt)};
}

Kinematics step_nonlinear(Kinematics s, double u, double dt, const NonlinearParams& p,
                          NoiseSample n) {
    const double accel = (u - resistance_force(s.v, p)) / p.m;
    return {s.x + (s.v + n.w1) * dt, std::max(0.0, s.v + (accel + n.w2) * dt)};
}

}  // namespace ocbf
