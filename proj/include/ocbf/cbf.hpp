#pragma once

#include "ocbf/dynamics.hpp"

#include <optional>
#include <string>

namespace ocbf {

struct CbfConfig {
    double phi_rear = 0.0;
    double phi_lateral = 1.8;
    double delta = 10.0;
    double gamma_k = 0.5;
    double p = 1.0;         ///< HOCBF penalty for the distance-only rear-end constraint
    double epsilon = 10.0;  ///< CLF rate
    double eta = 1.0;       ///< reward on noise relaxation variables
    bool braking_enabled = false;

    void validate() const;
};

struct VehicleLimits {
    double v_min = 0.0;
    double v_max = 15.0;
    double u_min = -3.0;
    double u_max = 3.0;

    void validate() const;
};

/// Speed dynamics v' = inv_m * (u - drag(v)); the double integrator has inv_m = 1, drag = 0.
struct Plant {
    DynamicsKind kind = DynamicsKind::DoubleIntegrator;
    NonlinearParams params;

    double inv_m() const { return kind == DynamicsKind::Nonlinear ? 1.0 / params.m : 1.0; }
    double drag(double v) const {
        return kind == DynamicsKind::Nonlinear ? resistance_force(v, params) : 0.0;
    }
};

enum class RowKind { RearEnd, Lateral, Braking, SpeedMax, SpeedMin, Clf };

std::string to_string(RowKind k);

struct RowTag {
    RowKind kind = RowKind::Clf;
    int counterpart = -1;  ///< CAV id, -1 when none
    MpToken mp;

    std::string str() const;
};

enum class Sense { Geq, Leq };

/// coef_u u + coef_e e + coef_c c (sense) rhs
struct ConstraintRow {
    double coef_u = 0.0;
    double coef_e = 0.0;
    double coef_c = 0.0;
    double rhs = 0.0;
    Sense sense = Sense::Geq;
    RowTag tag;
    // CBF form L_f + L_g u + gamma * barrier >= 0; for the CLF, barrier holds V.
    double lie_f = 0.0;
    double lie_g = 0.0;
    double barrier = 0.0;
    double gamma = 0.0;

    bool relaxed() const { return coef_c != 0.0; }
    /// Row residual (>= 0 means satisfied) at a candidate (u, e, c).
    double margin(double u, double e = 0.0, double c = 0.0) const;
};

/// States are in CAV i's coordinates (cross-lane transforms applied upstream).
/// ip_accel is the preceding CAV's acceleration; it enters only the distance-only
/// (second-order) form, where it is the second Lie derivative of the barrier.
ConstraintRow rear_end_row(Kinematics i, Kinematics ip, const CbfConfig& cfg, const Plant& plant,
                           int ip_id = -1, double ip_accel = 0.0);
ConstraintRow lateral_row(Kinematics i, Kinematics j, double x_mp, const CbfConfig& cfg,
                          const Plant& plant, int j_id = -1, MpToken mp = {});
std::optional<ConstraintRow> braking_row(Kinematics i, Kinematics j, double x_mp,
                                         const CbfConfig& cfg, const Plant& plant,
                                         double u_min, int j_id = -1, MpToken mp = {});
std::array<ConstraintRow, 2> limit_rows(Kinematics i, const VehicleLimits& lim,
                                        const CbfConfig& cfg, const Plant& plant);
ConstraintRow clf_row(Kinematics i, double v_ref, double epsilon, const Plant& plant);

/// Swaps gamma * b for a rewarded slack c >= 0 while b < 0; identity otherwise.
ConstraintRow relax_row(const ConstraintRow& row, double b_value);

/// Barrier values evaluated directly from states, used by the finite-difference checks.
double rear_end_barrier(Kinematics i, Kinematics ip, const CbfConfig& cfg);
double lateral_barrier(Kinematics i, Kinematics j, double x_mp, const CbfConfig& cfg);
double braking_barrier(Kinematics i, Kinematics j, double x_mp, const CbfConfig& cfg, double u_min);

}  // namespace ocbf
