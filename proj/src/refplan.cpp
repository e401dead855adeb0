#include "ocbf/refplan.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ocbf {

namespace {

double quartic(double T, double v0, double L, double beta) {
    return beta * T * T * T * T - 1.5 * v0 * v0 * T * T + 6.0 * v0 * L * T - 4.5 * L * L;
}

double quartic_slope(double T, double v0, double L, double beta) {
    return 4.0 * beta * T * T * T - 3.0 * v0 * v0 * T + 6.0 * v0 * L;
}

double accel_for(double T, double v0, double L) { return 3.0 * (v0 * T - L) / (T * T * T); }

double shifted_cost(double T, double v0, double L, double beta) {
    const double a = accel_for(T, v0, L);
    return beta * T + a * a * T * T * T / 6.0;
}

}  // namespace

double UnconstrainedPlan::cost() const {
    const double T = duration();
    return beta * T + a * a * T * T * T / 6.0;
}

UnconstrainedPlan solve_unconstrained(double v0, double t0, double L, double beta) {
    if (!(beta >= 0.0)) throw NoSolution("beta must be >= 0");
    if (!(L > 0.0)) throw NoSolution("terminal distance must be > 0");
    if (!(v0 >= 0.0)) throw NoSolution("entry speed must be >= 0");

    double T = 0.0;
    double a = 0.0;
    if (beta == 0.0) {
        if (v0 <= 0.0) throw NoSolution("beta = 0 with zero entry speed has no finite solution");
        T = L / v0;
    } else {
        const double v_floor = std::max(v0, 0.1);
        double hi = 10.0 * L / v_floor;
        for (int k = 0; k < 200 && quartic(hi, v0, L, beta) <= 0.0; ++k) hi *= 2.0;
        const double lo = 1e-6 * L / v_floor;
        const int n = 4000;
        const double ratio = std::pow(hi / lo, 1.0 / n);
        std::vector<double> roots;
        double t_prev = lo;
        double h_prev = quartic(lo, v0, L, beta);
        for (int k = 1; k <= n; ++k) {
            const double t_cur = lo * std::pow(ratio, k);
            const double h_cur = quartic(t_cur, v0, L, beta);
            if ((h_prev <= 0.0) != (h_cur <= 0.0)) {
                double x0 = t_prev, x1 = t_cur, f0 = h_prev;
                for (int it = 0; it < 200 && x1 - x0 > 1e-14 * x1; ++it) {
                    const double mid = 0.5 * (x0 + x1);
                    const double fm = quartic(mid, v0, L, beta);
                    if ((fm <= 0.0) == (f0 <= 0.0)) { x0 = mid; f0 = fm; }
                    else x1 = mid;
                }
                double r = 0.5 * (x0 + x1);
                for (int it = 0; it < 3; ++it) {
                    const double s = quartic_slope(r, v0, L, beta);
                    if (s == 0.0) break;
                    const double next = r - quartic(r, v0, L, beta) / s;
                    if (next < t_prev || next > t_cur) break;
                    r = next;
                }
                roots.push_back(r);
            }
            t_prev = t_cur;
            h_prev = h_cur;
        }
        if (roots.empty()) throw NoSolution("no root of the terminal-time equation in bracket");
        T = *std::min_element(roots.begin(), roots.end(), [&](double x, double y) {
            return shifted_cost(x, v0, L, beta) < shifted_cost(y, v0, L, beta);
        });
        a = accel_for(T, v0, L);
    }

    const double bs = -a * T;
    UnconstrainedPlan p;
    p.t0 = t0;
    p.tm = t0 + T;
    p.L = L;
    p.beta = beta;
    p.v0 = v0;
    p.a = a;
    p.b = bs - a * t0;
    p.c = 0.5 * a * t0 * t0 - bs * t0 + v0;
    p.d = -a * t0 * t0 * t0 / 6.0 + 0.5 * bs * t0 * t0 - v0 * t0;
    return p;
}

PlanPoint eval_plan(const UnconstrainedPlan& p, double t) {
    const double T = p.duration();
    const double as = p.a;
    const double bs = -as * T;
    auto at = [&](double tau) {
        return PlanPoint{as * tau * tau * tau / 6.0 + 0.5 * bs * tau * tau + p.v0 * tau,
                         0.5 * as * tau * tau + bs * tau + p.v0, as * tau + bs, false};
    };
    if (t < p.t0) {
        PlanPoint q = at(0.0);
        q.clamped = true;
        return q;
    }
    if (t > p.tm) {
        PlanPoint q = at(T);
        q.x = p.L + q.v * (t - p.tm);
        q.u = 0.0;
        q.clamped = true;
        return q;
    }
    return at(t - p.t0);
}

std::optional<double> first_active_time(const UnconstrainedPlan& plan_i,
                                        const UnconstrainedPlan& plan_ip, double phi,
                                        double delta, double ip_offset) {
    auto gap = [&](double t) {
        const PlanPoint pi = eval_plan(plan_i, t);
        const PlanPoint pp = eval_plan(plan_ip, t);
        return pp.x + ip_offset - pi.x - phi * pi.v - delta;
    };
    const double start = std::max(plan_i.t0, plan_ip.t0);
    const double end = std::min(plan_i.tm, plan_ip.tm);
    if (end < start) return std::nullopt;
    if (gap(start) <= 0.0) return start;
    const double step = 0.05;
    double t_prev = start;
    while (t_prev < end) {
        const double t_cur = std::min(end, t_prev + step);
        if (gap(t_cur) <= 0.0) {
            double lo = t_prev, hi = t_cur;
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                if (gap(mid) <= 0.0) hi = mid;
                else lo = mid;
            }
            return hi;
        }
        t_prev = t_cur;
    }
    return std::nullopt;
}

double place_lane_change_mp(const UnconstrainedPlan& plan_i, std::optional<double> t_a,
                            double L2, double L3) {
    const double at = t_a ? eval_plan(plan_i, *t_a).x : L2 + L3;
    return std::clamp(at, L2, L2 + L3);
}

}  // namespace ocbf
