// Finite-difference check of every row kind's Lie derivatives, with barriers written out
// independently of the library.
#pragma once

#include "ocbf/cbf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

namespace lie {

enum class Kind { RearPhi, RearHocbf, Lateral, Braking, SpeedMax, SpeedMin, Clf };

inline std::array<Kind, 7> all_kinds() {
    return {Kind::RearPhi, Kind::RearHocbf, Kind::Lateral, Kind::Braking, Kind::SpeedMax, Kind::SpeedMin, Kind::Clf};
}

inline std::string name(Kind k) {
    switch (k) {
    case Kind::RearPhi: return "rear(phi>0)";
    case Kind::RearHocbf: return "rear(hocbf)";
    case Kind::Lateral: return "lateral";
    case Kind::Braking: return "braking";
    case Kind::SpeedMax: return "vmax";
    case Kind::SpeedMin: return "vmin";
    case Kind::Clf: return "clf";
    }
    return "?";
}

struct Stats {
    double worst = 0.0;  ///< largest error beyond the scale-relative tolerance
    double tolerance = 0.0;
    int samples = 0;
};

struct State {
    double xi, vi, xj, vj;
};

inline Stats check_kind(Kind kind, const ocbf::Plant& plant, std::mt19937_64& rng, int samples, double h = 1e-5) {
    std::uniform_real_distribution<double> X(1, 300), V(0.5, 15), Gap(5, 60), Ahead(0, 100), A(-3, 3);
    ocbf::CbfConfig cfg;
    cfg.phi_rear = kind == Kind::RearPhi ? 1.8 : 0.0;
    ocbf::VehicleLimits lim;
    const double u_min = -3.0;
    const bool nl = plant.kind == ocbf::DynamicsKind::Nonlinear;
    const double m = plant.params.m;
    auto drag = [&](double v) {
        if (!nl) return 0.0;
        const double s = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
        return plant.params.alpha0 * s + plant.params.alpha1 * v + plant.params.alpha2 * v * v;
    };

    Stats st;
    st.tolerance = 1e-6;
    for (int n = 0; n < samples; ++n) {
        State s{X(rng), V(rng), 0, V(rng)};
        s.xj = s.xi + Gap(rng);
        if (kind == Kind::Braking && s.vi < s.vj) std::swap(s.vi, s.vj);
        const double x_mp = s.xi + Ahead(rng) + 1.0;
        const double v_ref = V(rng);
        const double accel = A(rng);
        const double u = nl ? m * accel + drag(s.vi) : accel;  // force for the nonlinear plant
        const double aj = kind == Kind::RearHocbf ? A(rng) : 0.0;

        auto b = [&](const State& q) {
            switch (kind) {
            case Kind::RearPhi: return (q.xj - q.xi) - cfg.phi_rear * q.vi - cfg.delta;
            case Kind::RearHocbf: return (q.vj - q.vi) + cfg.p * ((q.xj - q.xi) - cfg.delta);
            case Kind::Lateral: return (q.xj - q.xi) - cfg.phi_lateral * q.xi * q.vi / x_mp - cfg.delta;
            case Kind::Braking: {
                const double D = -u_min;
                return (q.xj - q.xi) - cfg.phi_lateral * (q.xi + 0.5 * (q.vi * q.vi - q.vj * q.vj) / D) * q.vj / x_mp -
                       0.5 * (q.vj - q.vi) * (q.vj - q.vi) / D - cfg.delta;
            }
            case Kind::SpeedMax: return lim.v_max - q.vi;
            case Kind::SpeedMin: return q.vi - lim.v_min;
            case Kind::Clf: return (q.vi - v_ref) * (q.vi - v_ref);
            }
            return 0.0;
        };
        ocbf::ConstraintRow row;
        const ocbf::Kinematics ki{s.xi, s.vi}, kj{s.xj, s.vj};
        switch (kind) {
        case Kind::RearPhi: row = ocbf::rear_end_row(ki, kj, cfg, plant); break;
        case Kind::RearHocbf: row = ocbf::rear_end_row(ki, kj, cfg, plant, -1, aj); break;
        case Kind::Lateral: row = ocbf::lateral_row(ki, kj, x_mp, cfg, plant); break;
        case Kind::Braking: row = *ocbf::braking_row(ki, kj, x_mp, cfg, plant, u_min); break;
        case Kind::SpeedMax: row = ocbf::limit_rows(ki, lim, cfg, plant)[0]; break;
        case Kind::SpeedMin: row = ocbf::limit_rows(ki, lim, cfg, plant)[1]; break;
        case Kind::Clf: row = ocbf::clf_row(ki, v_ref, cfg.epsilon, plant); break;
        }

        // Second-order local flow under constant input; central differences cancel the
        // symmetric error terms.
        const double ai = nl ? (u - drag(s.vi)) / m : u;
        auto flow = [&](double t) {
            return State{s.xi + s.vi * t + 0.5 * ai * t * t, s.vi + ai * t, s.xj + s.vj * t + 0.5 * aj * t * t,
                         s.vj + aj * t};
        };
        const double fd = (b(flow(h)) - b(flow(-h))) / (2 * h);
        const double analytic = row.lie_f + row.lie_g * u;
        const double err = std::abs(fd - analytic) / (1.0 + std::abs(analytic));
        st.worst = std::max(st.worst, err);
        // The row's barrier must also be the independently written one.
        st.worst = std::max(st.worst, std::abs(row.barrier - b(s)) / (1.0 + std::abs(b(s))));
        ++st.samples;
    }
    return st;
}

}  // namespace lie
