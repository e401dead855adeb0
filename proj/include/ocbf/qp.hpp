#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ocbf {

/// a . x <= b
struct QpRow {
    Eigen::VectorXd a;
    double b = 0.0;
    std::string tag;
};

/// minimize 1/2 x'Hx + f'x subject to rows and lb <= x <= ub (infinite bounds allowed).
struct QpProblem {
    Eigen::MatrixXd H;
    Eigen::VectorXd f;
    std::vector<QpRow> rows;
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;

    int size() const { return static_cast<int>(f.size()); }
    /// Bounds become constraints m + 2k (lower) and m + 2k + 1 (upper).
    int constraint_count() const { return static_cast<int>(rows.size()) + 2 * size(); }
    double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(H * x) + f.dot(x); }
};

enum class QpStatus { Optimal, Infeasible };

struct QpResult {
    QpStatus status = QpStatus::Infeasible;
    Eigen::VectorXd x;
    std::vector<int> active;          ///< constraint indices active at the solution
    std::vector<double> multipliers;  ///< aligned with active
    std::vector<std::string> conflict_tags;  ///< Infeasible only
    double objective = 0.0;
    int iterations = 0;
};

/// Dual active-set (Goldfarb-Idnani) solver for small dense strictly convex QPs.
/// A warm-start active set is tried first and accepted only if it satisfies KKT.
QpResult solve_qp(const QpProblem& p, const std::vector<int>& warm_active = {});

double max_violation(const QpProblem& p, const Eigen::VectorXd& x);

}  // namespace ocbf
