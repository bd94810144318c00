#include "qfal/exact_solver.hpp"

#include "qfal/errors.hpp"
#include "qfal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qfal {

QMatrix bellman_apply(const ValidatedMdp& mdp, const Matrix& cost, const Matrix& q) {
    const std::size_t s = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    if (!q.same_shape(cost) || cost.rows() != s || cost.cols() != na)
        throw ShapeMismatch("bellman_apply: Q and cost must both be S x A");
    const Vector v = state_values(q);
    const double beta = mdp.discount();
    QMatrix out(s, na);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t a = 0; a < na; ++a)
            out(i, a) = cost(i, a) + beta * kernels::dot(mdp.row(i, a), v);
    return out;
}

CostMatrix cost_from_q(const ValidatedMdp& mdp, const Matrix& q) {
    const std::size_t s = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    if (q.rows() != s || q.cols() != na) throw ShapeMismatch("cost_from_q: Q must be S x A");
    const Vector v = state_values(q);
    const double beta = mdp.discount();
    CostMatrix c(s, na);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t a = 0; a < na; ++a)
            c(i, a) = q(i, a) - beta * kernels::dot(mdp.row(i, a), v);
    return c;
}

std::size_t default_max_iterations(double discount, double tol, double cost_norm) {
    const double lb = std::log(discount);
    double n = 10.0 * std::log(tol) / lb;
    if (cost_norm > 0.0) n = std::max(n, std::log(tol * (1.0 - discount) / cost_norm) / lb);
    return static_cast<std::size_t>(std::ceil(std::max(n, 0.0))) + 1;
}

FixedPointReport solve_q_fixed_point(const ValidatedMdp& mdp, const CostMatrix& cost, double tol,
                                     std::optional<std::size_t> max_iter) {
    if (!(tol > 0.0)) throw RangeError("fixed-point tolerance must be positive");
    check_cost(mdp, cost);
    const std::size_t cap =
        max_iter.value_or(default_max_iterations(mdp.discount(), tol, max_norm(cost)));

    FixedPointReport report{QMatrix(mdp.num_states(), mdp.num_actions()), 0, 0.0};
    for (std::size_t it = 0;; ++it) {
        QMatrix next = bellman_apply(mdp, cost, report.q);
        report.residual = max_norm_diff(next, report.q);
        report.iterations = it;
        if (report.residual <= tol) return report;
        if (it >= cap)
            throw NoConvergence("value iteration residual " + std::to_string(report.residual) +
                                " above tolerance after " + std::to_string(cap) + " sweeps");
        report.q = std::move(next);
    }
}

QMatrix fixed_point(const ValidatedMdp& mdp, const CostMatrix& cost) {
    return solve_q_fixed_point(mdp, cost).q;
}

Vector policy_q_values(const ValidatedMdp& mdp, const Matrix& cost, const Policy& w) {
    check_cost(mdp, cost);
    Matrix system = Matrix::identity(mdp.num_states());
    system -= mdp.discount() * policy_transition(mdp, w);
    return linear_solve(system, policy_column(cost, w));
}

QMatrix q_from_policy_values(const ValidatedMdp& mdp, const Matrix& cost, const Policy& w) {
    const Vector qw = policy_q_values(mdp, cost, w);
    const double beta = mdp.discount();
    QMatrix q(mdp.num_states(), mdp.num_actions());
    for (std::size_t i = 0; i < q.rows(); ++i)
        for (std::size_t a = 0; a < q.cols(); ++a)
            q(i, a) = beta * kernels::dot(mdp.row(i, a), qw) + cost(i, a);
    return q;
}

} // namespace qfal
