#include "ocbf/controller.hpp"

#include "ocbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ocbf {

namespace {

bool is_safety(RowKind k) {
    return k == RowKind::RearEnd || k == RowKind::Lateral || k == RowKind::Braking;
}

struct Assembled {
    QpProblem qp;
    std::vector<int> slack_var;  ///< per row, -1 when the row has no slack
};

// Decision variables: [u/m, e, c_0, c_1, ...].
Assembled assemble(const std::vector<ConstraintRow>& rows, double u_ref_norm, double mass,
                   const ControllerConfig& cfg, bool best_effort) {
    Assembled out;
    int n = 2;
    for (const auto& r : rows) {
        if (r.relaxed()) out.slack_var.push_back(n++);
        else out.slack_var.push_back(-1);
    }
    QpProblem& qp = out.qp;
    qp.H = Eigen::MatrixXd::Zero(n, n);
    qp.f = Eigen::VectorXd::Zero(n);
    qp.lb = Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    qp.ub = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    qp.H(0, 0) = 1.0;
    qp.f[0] = -u_ref_norm;
    qp.H(1, 1) = 2.0 * cfg.weight_e;
    qp.lb[0] = cfg.limits.u_min;
    qp.ub[0] = cfg.limits.u_max;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const ConstraintRow& r = rows[k];
        const int c = out.slack_var[k];
        if (c >= 0) {
            if (best_effort) {
                qp.H(c, c) = cfg.best_effort_weight;
            } else {
                qp.H(c, c) = cfg.slack_weight;
                qp.f[c] = -cfg.cbf.eta;
                qp.lb[c] = 0.0;
            }
        }
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        a[0] = r.coef_u * mass;
        a[1] = r.coef_e;
        if (c >= 0) a[c] = r.coef_c;
        const double s = r.sense == Sense::Geq ? -1.0 : 1.0;
        qp.rows.push_back({s * a, s * r.rhs, r.tag.str()});
    }
    return out;
}

}  // namespace

std::vector<ConstraintRow> build_rows(const ControlInput& in, const ControllerConfig& cfg) {
    std::vector<ConstraintRow> rows;
    CbfConfig rear_cfg = cfg.cbf;
    rear_cfg.delta += cfg.rear_margin;
    CbfConfig lat_cfg = cfg.cbf;
    lat_cfg.delta += cfg.lateral_margin;
    if (in.ip_id) rows.push_back(rear_end_row(in.self, in.ip, rear_cfg, cfg.plant, *in.ip_id, in.ip_accel));
    for (const auto& j : in.lateral) {
        if (in.self.x > j.x_mp || j.x_mp <= 0.0) continue;
        ConstraintRow lat = lateral_row(in.self, j.state, j.x_mp, lat_cfg, cfg.plant, j.cav_id, j.mp);
        if (cfg.dt > 0.0) {
            // Euler stepping adds -k v a dt^2 to b over one step, and b sags by up to
            // k v |a| dt^2 / 4 between samples.
            const double k = cfg.cbf.phi_lateral / j.x_mp;
            const double corr = k * in.self.v * cfg.dt;
            const double a_max = std::max(-cfg.limits.u_min, cfg.limits.u_max) +
                                 cfg.plant.drag(cfg.limits.v_max) * cfg.plant.inv_m();
            const double sag = k * cfg.limits.v_max * a_max * cfg.dt * cfg.dt / 4.0;
            lat.coef_u -= corr * cfg.plant.inv_m();
            lat.rhs -= corr * cfg.plant.inv_m() * cfg.plant.drag(in.self.v);
            lat.rhs += lat.gamma * sag;
        }
        rows.push_back(lat);
        if (cfg.cbf.braking_enabled) {
            if (auto b = braking_row(in.self, j.state, j.x_mp, lat_cfg, cfg.plant, cfg.limits.u_min,
                                     j.cav_id, j.mp))
                rows.push_back(*b);
        }
    }
    for (const auto& r : limit_rows(in.self, cfg.limits, cfg.cbf, cfg.plant)) rows.push_back(r);
    rows.push_back(clf_row(in.self, in.ref.v, cfg.cbf.epsilon, cfg.plant));
    return rows;
}

ControlOutput ocbf_step(const ControlInput& in, const ControllerConfig& cfg, std::vector<int>* warm) {
    const double mass = 1.0 / cfg.plant.inv_m();
    const double u_ref_norm = in.ref.u + cfg.plant.drag(in.self.v) * cfg.plant.inv_m();
    std::vector<ConstraintRow> rows = build_rows(in, cfg);
    for (auto& r : rows)
        if (r.tag.kind != RowKind::Clf) r = relax_row(r, r.barrier);

    ControlOutput out;
    auto finish = [&](const Assembled& as, const QpResult& res) {
        out.u_norm = std::clamp(res.x[0], cfg.limits.u_min, cfg.limits.u_max);
        out.u = out.u_norm * mass;
        out.e = res.x[1];
        out.rows = rows;
        out.slack.assign(rows.size(), 0.0);
        for (std::size_t k = 0; k < rows.size(); ++k)
            if (as.slack_var[k] >= 0) out.slack[k] = res.x[as.slack_var[k]];
        out.active = res.active;
        if (warm) *warm = res.active;
    };

    Assembled first = assemble(rows, u_ref_norm, mass, cfg, false);
    QpResult res = solve_qp(first.qp, warm ? *warm : std::vector<int>{});
    if (res.status == QpStatus::Optimal) {
        finish(first, res);
        return out;
    }
    out.conflict_tags = res.conflict_tags;

    for (auto& r : rows) {
        if (is_safety(r.tag.kind) && !r.relaxed()) r.coef_c = -1.0;
    }
    Assembled second = assemble(rows, u_ref_norm, mass, cfg, true);
    res = solve_qp(second.qp);
    if (res.status == QpStatus::Optimal) {
        finish(second, res);
        out.outcome = StepOutcome::BestEffort;
        return out;
    }
    out.rows = rows;
    out.slack.assign(rows.size(), 0.0);
    out.u_norm = cfg.limits.u_min;
    out.u = out.u_norm * mass;
    out.outcome = StepOutcome::Fallback;
    if (warm) warm->clear();
    return out;
}

}  // namespace ocbf
