#include "ocbf/cbf.hpp"

#include <cmath>

namespace ocbf {

namespace {

ConstraintRow cbf(double lie_f, double lie_g, double barrier, double gamma, RowTag tag) {
    ConstraintRow r;
    r.coef_u = lie_g;
    r.rhs = -(lie_f + gamma * barrier);
    r.sense = Sense::Geq;
    r.tag = tag;
    r.lie_f = lie_f;
    r.lie_g = lie_g;
    r.barrier = barrier;
    r.gamma = gamma;
    return r;
}

// Contribution of the speed channel: db/dv * v' split into drift and control parts.
struct SpeedTerm {
    double drift;
    double control;
};

SpeedTerm speed_term(double db_dv, double v, const Plant& plant) {
    return {-db_dv * plant.inv_m() * plant.drag(v), db_dv * plant.inv_m()};
}

}  // namespace

void CbfConfig::validate() const {
    if (!(phi_rear >= 0.0 && phi_lateral >= 0.0)) throw ConfigError("cbf: phi must be >= 0");
    if (!(delta >= 0.0)) throw ConfigError("cbf: delta must be >= 0");
    if (!(gamma_k > 0.0 && p > 0.0 && epsilon > 0.0 && eta > 0.0))
        throw ConfigError("cbf: gamma_k, p, epsilon and eta must be > 0");
}

void VehicleLimits::validate() const {
    if (!(v_min >= 0.0 && v_max > v_min)) throw ConfigError("limits: need 0 <= v_min < v_max");
    if (!(u_min < 0.0 && u_max > 0.0)) throw ConfigError("limits: need u_min < 0 < u_max");
}

std::string to_string(RowKind k) {
    switch (k) {
    case RowKind::RearEnd: return "rear";
    case RowKind::Lateral: return "lateral";
    case RowKind::Braking: return "braking";
    case RowKind::SpeedMax: return "vmax";
    case RowKind::SpeedMin: return "vmin";
    case RowKind::Clf: return "clf";
    }
    return "?";
}

std::string RowTag::str() const {
    std::string s = to_string(kind);
    if (counterpart >= 0) s += ":" + std::to_string(counterpart);
    if (kind == RowKind::Lateral || kind == RowKind::Braking) s += "@" + to_string(mp);
    return s;
}

double ConstraintRow::margin(double u, double e, double c) const {
    const double lhs = coef_u * u + coef_e * e + coef_c * c;
    return sense == Sense::Geq ? lhs - rhs : rhs - lhs;
}

double rear_end_barrier(Kinematics i, Kinematics ip, const CbfConfig& cfg) {
    const double z = ip.x - i.x;
    if (cfg.phi_rear > 0.0) return z - cfg.phi_rear * i.v - cfg.delta;
    return (ip.v - i.v) + cfg.p * (z - cfg.delta);
}

double lateral_barrier(Kinematics i, Kinematics j, double x_mp, const CbfConfig& cfg) {
    return (j.x - i.x) - cfg.phi_lateral / x_mp * i.x * i.v - cfg.delta;
}

double braking_barrier(Kinematics i, Kinematics j, double x_mp, const CbfConfig& cfg, double u_min) {
    const double D = std::abs(u_min);
    const double k = cfg.phi_lateral / x_mp;
    return (j.x - i.x) - k * (i.x + 0.5 * (i.v * i.v - j.v * j.v) / D) * j.v -
           0.5 * (j.v - i.v) * (j.v - i.v) / D - cfg.delta;
}

ConstraintRow rear_end_row(Kinematics i, Kinematics ip, const CbfConfig& cfg, const Plant& plant,
                           int ip_id, double ip_accel) {
    const RowTag tag{RowKind::RearEnd, ip_id, {}};
    if (cfg.phi_rear > 0.0) {
        const SpeedTerm s = speed_term(-cfg.phi_rear, i.v, plant);
        return cbf(ip.v - i.v + s.drift, s.control, rear_end_barrier(i, ip, cfg), cfg.gamma_k, tag);
    }
    const SpeedTerm s = speed_term(-1.0, i.v, plant);
    return cbf(ip_accel + cfg.p * (ip.v - i.v) + s.drift, s.control, rear_end_barrier(i, ip, cfg), cfg.p, tag);
}

ConstraintRow lateral_row(Kinematics i, Kinematics j, double x_mp, const CbfConfig& cfg,
                          const Plant& plant, int j_id, MpToken mp) {
    const double k = cfg.phi_lateral / x_mp;
    const SpeedTerm s = speed_term(-k * i.x, i.v, plant);
    return cbf(j.v - i.v - k * i.v * i.v + s.drift, s.control, lateral_barrier(i, j, x_mp, cfg),
               cfg.gamma_k, {RowKind::Lateral, j_id, mp});
}

std::optional<ConstraintRow> braking_row(Kinematics i, Kinematics j, double x_mp,
                                         const CbfConfig& cfg, const Plant& plant,
                                         double u_min, int j_id, MpToken mp) {
    if (i.v < j.v) return std::nullopt;
    const double D = std::abs(u_min);
    const double k = cfg.phi_lateral / x_mp;
    const double db_dv = -k * j.v * i.v / D + (j.v - i.v) / D;
    const SpeedTerm s = speed_term(db_dv, i.v, plant);
    return cbf(j.v - i.v - k * j.v * i.v + s.drift, s.control,
               braking_barrier(i, j, x_mp, cfg, u_min), cfg.gamma_k, {RowKind::Braking, j_id, mp});
}

std::array<ConstraintRow, 2> limit_rows(Kinematics i, const VehicleLimits& lim,
                                        const CbfConfig& cfg, const Plant& plant) {
    const SpeedTerm up = speed_term(-1.0, i.v, plant);
    const SpeedTerm down = speed_term(1.0, i.v, plant);
    return {cbf(up.drift, up.control, lim.v_max - i.v, cfg.gamma_k, {RowKind::SpeedMax, -1, {}}),
            cbf(down.drift, down.control, i.v - lim.v_min, cfg.gamma_k, {RowKind::SpeedMin, -1, {}})};
}

ConstraintRow clf_row(Kinematics i, double v_ref, double epsilon, const Plant& plant) {
    const double err = i.v - v_ref;
    const SpeedTerm s = speed_term(2.0 * err, i.v, plant);
    ConstraintRow r;
    r.coef_u = s.control;
    r.coef_e = -1.0;
    r.rhs = -(s.drift + epsilon * err * err);
    r.sense = Sense::Leq;
    r.tag = {RowKind::Clf, -1, {}};
    r.lie_f = s.drift;
    r.lie_g = s.control;
    r.barrier = err * err;
    r.gamma = epsilon;
    return r;
}

ConstraintRow relax_row(const ConstraintRow& row, double b_value) {
    if (b_value >= 0.0 || row.sense != Sense::Geq) return row;
    ConstraintRow r = row;
    r.coef_c = -1.0;
    r.rhs = -row.lie_f;
    return r;
}

}  // namespace ocbf
