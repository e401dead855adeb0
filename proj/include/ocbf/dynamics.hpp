#pragma once

#include "ocbf/geometry.hpp"

namespace ocbf {

enum class DynamicsKind { DoubleIntegrator, Nonlinear };

std::string to_string(DynamicsKind k);
DynamicsKind dynamics_from_string(const std::string& s);

/// Resistance model for the nonlinear plant. Defaults are illustrative
/// passenger-car values, not calibrated data.
struct NonlinearParams {
    double m = 1650.0;
    double alpha0 = 0.1;
    double alpha1 = 5.0;
    double alpha2 = 0.25;

    void validate() const;
};

/// Uniform noise bounds. w_p and w_v corrupt the measured state seen by the
/// controller, w_u is added to the applied control.
struct NoiseSpec {
    double w_p = 0.0;
    double w_v = 0.0;
    double w_u = 0.0;

    bool any() const { return w_p > 0.0 || w_v > 0.0 || w_u > 0.0; }
    void validate() const;
};

struct NoiseSample {
    double w1 = 0.0;  ///< added to the position rate
    double w2 = 0.0;  ///< added to the control
};

struct Kinematics {
    double x = 0.0;
    double v = 0.0;
};

double resistance_force(double v, const NonlinearParams& p);

Kinematics step_double_integrator(Kinematics s, double u, double dt, NoiseSample n = {});
/// u is the traction force (N).
Kinematics step_nonlinear(Kinematics s, double u, double dt, const NonlinearParams& p,
                          NoiseSample n = {});

enum class CavStatus { InCZ, Departed };

struct CavState {
    int id = 0;
    int original_lane = 0;
    int current_lane = 0;
    Maneuver maneuver = Maneuver::Straight;
    double x = 0.0;
    double v = 0.0;
    double u_applied = 0.0;
    double t0 = 0.0;
    PathSpec path;
    CavStatus status = CavStatus::InCZ;

    Kinematics kin() const { return {x, v}; }
};

}  // namespace ocbf
