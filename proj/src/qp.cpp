#include "ocbf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ocbf {

namespace {

// Internal form c . x >= d.
struct Con {
    Eigen::VectorXd c;
    double d = 0.0;
    bool present = false;
};

std::vector<Con> gather(const QpProblem& p) {
    const int n = p.size();
    std::vector<Con> out;
    out.reserve(p.constraint_count());
    for (const auto& r : p.rows) out.push_back({-r.a, -r.b, true});
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e[k] = 1.0;
        const bool has_lb = p.lb.size() == n && std::isfinite(p.lb[k]);
        const bool has_ub = p.ub.size() == n && std::isfinite(p.ub[k]);
        out.push_back({e, has_lb ? p.lb[k] : 0.0, has_lb});
        out.push_back({-e, has_ub ? -p.ub[k] : 0.0, has_ub});
    }
    return out;
}

double slack(const Con& c, const Eigen::VectorXd& x) { return c.c.dot(x) - c.d; }

double tolerance(const Con& c, const Eigen::VectorXd& x) {
    return 1e-11 * std::max({1.0, std::abs(c.d), c.c.cwiseAbs().maxCoeff() * x.cwiseAbs().maxCoeff()});
}

std::string tag_of(const QpProblem& p, int idx) {
    const int m = static_cast<int>(p.rows.size());
    if (idx < m) return p.rows[idx].tag;
    const int k = (idx - m) / 2;
    return ((idx - m) % 2 == 0 ? "lb" : "ub") + std::to_string(k);
}

Eigen::MatrixXd stack(const std::vector<Con>& cons, const std::vector<int>& active, int n) {
    Eigen::MatrixXd N(n, static_cast<int>(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) N.col(static_cast<int>(j)) = cons[active[j]].c;
    return N;
}

bool try_warm(const QpProblem& p, const std::vector<Con>& cons, const Eigen::MatrixXd& Hinv,
              const std::vector<int>& warm, QpResult& out) {
    const int n = p.size();
    std::vector<int> act;
    for (int i : warm)
        if (i >= 0 && i < static_cast<int>(cons.size()) && cons[i].present) act.push_back(i);
    if (act.empty() || static_cast<int>(act.size()) > n) return false;
    const Eigen::MatrixXd N = stack(cons, act, n);
    const Eigen::MatrixXd M = N.transpose() * Hinv * N;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.rank() < static_cast<int>(act.size())) return false;
    Eigen::VectorXd d(static_cast<int>(act.size()));
    for (std::size_t j = 0; j < act.size(); ++j) d[static_cast<int>(j)] = cons[act[j]].d;
    const Eigen::VectorXd u = lu.solve(d + N.transpose() * Hinv * p.f);
    if ((u.array() < 0.0).any()) return false;
    const Eigen::VectorXd x = Hinv * (N * u - p.f);
    for (const auto& c : cons)
        if (c.present && slack(c, x) < -tolerance(c, x)) return false;
    out.status = QpStatus::Optimal;
    out.x = x;
    out.active = act;
    out.multipliers.assign(u.data(), u.data() + u.size());
    out.objective = p.objective(x);
    return true;
}

}  // namespace

double max_violation(const QpProblem& p, const Eigen::VectorXd& x) {
    double worst = 0.0;
    for (const auto& c : gather(p))
        if (c.present) worst = std::max(worst, -slack(c, x));
    return worst;
}

QpResult solve_qp(const QpProblem& p, const std::vector<int>& warm_active) {
    const int n = p.size();
    const std::vector<Con> cons = gather(p);
    const Eigen::MatrixXd Hinv = p.H.llt().solve(Eigen::MatrixXd::Identity(n, n));

    QpResult res;
    if (!warm_active.empty() && try_warm(p, cons, Hinv, warm_active, res)) return res;

    Eigen::VectorXd x = -Hinv * p.f;
    std::vector<int> A;
    std::vector<double> u;
    const int max_iter = 20 * (static_cast<int>(cons.size()) + n) + 100;
    constexpr double inf = std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        int pidx = -1;
        double worst = 0.0;
        for (int i = 0; i < static_cast<int>(cons.size()); ++i) {
            if (!cons[i].present || std::find(A.begin(), A.end(), i) != A.end()) continue;
            const double s = slack(cons[i], x);
            if (s < -tolerance(cons[i], x) && s < worst) {
                worst = s;
                pidx = i;
            }
        }
        if (pidx < 0) {
            res.status = QpStatus::Optimal;
            res.x = x;
            res.active = A;
            res.multipliers = u;
            res.objective = p.objective(x);
            return res;
        }

        const Eigen::VectorXd& np = cons[pidx].c;
        double u_plus = 0.0;
        for (;;) {
            Eigen::VectorXd z;
            Eigen::VectorXd r;
            if (A.empty()) {
                z = Hinv * np;
            } else {
                const Eigen::MatrixXd N = stack(cons, A, n);
                const Eigen::MatrixXd M = N.transpose() * Hinv * N;
                r = M.ldlt().solve(N.transpose() * Hinv * np);
                z = Hinv * (np - N * r);
            }
            const double curv = z.dot(np);
            const bool z_zero = curv <= 1e-14 * np.dot(Hinv * np);

            double t1 = inf;
            int drop = -1;
            for (int j = 0; j < r.size(); ++j) {
                if (r[j] > 1e-12) {
                    const double ratio = u[j] / r[j];
                    if (ratio < t1) { t1 = ratio; drop = j; }
                }
            }
            const double t2 = z_zero ? inf : -slack(cons[pidx], x) / curv;
            const double t = std::min(t1, t2);

            if (t == inf) {
                res.status = QpStatus::Infeasible;
                res.x = x;
                res.active = A;
                res.multipliers = u;
                for (int i : A) res.conflict_tags.push_back(tag_of(p, i));
                res.conflict_tags.push_back(tag_of(p, pidx));
                res.objective = p.objective(x);
                return res;
            }
            if (!z_zero) x += t * z;
            for (int j = 0; j < r.size(); ++j) u[j] -= t * r[j];
            u_plus += t;
            if (t == t2) {
                A.push_back(pidx);
                u.push_back(u_plus);
                break;
            }
            A.erase(A.begin() + drop);
            u.erase(u.begin() + drop);
            if (++res.iterations > max_iter) break;
        }
    }
    res.status = QpStatus::Infeasible;
    res.x = x;
    res.conflict_tags.push_back("iteration-limit");
    return res;
}

}  // namespace ocbf
