#include "qfal/sensitivity.hpp"

#include "qfal/errors.hpp"
#include "qfal/exact_solver.hpp"
#include "qfal/kernels.hpp"

#include <algorithm>
#include <limits>

namespace qfal {

LipschitzReport lipschitz_check(const Matrix& c, const Matrix& c_tilde, const Matrix& q,
                                const Matrix& q_tilde, double beta) {
    if (!c.same_shape(c_tilde) || !q.same_shape(q_tilde) || !c.same_shape(q))
        throw ShapeMismatch("lipschitz_check: all four matrices must share a shape");
    if (!(beta > 0.0 && beta < 1.0)) throw RangeError("discount must lie in (0,1)");
    LipschitzReport r;
    r.lhs = max_norm_diff(q_tilde, q);
    r.rhs = max_norm_diff(c_tilde, c) / (1.0 - beta);
    r.holds = r.lhs <= r.rhs + 1e-9;
    return r;
}

double policy_set_distance(const Matrix& q_star, const Policy& w_dagger) {
    if (w_dagger.size() != q_star.rows()) throw ShapeMismatch("policy length does not match Q rows");
    double worst = 0.0;
    for (std::size_t i = 0; i < q_star.rows(); ++i) {
        const std::size_t target = w_dagger[i];
        if (target >= q_star.cols()) throw RangeError("policy action out of range");
        double competitor = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < q_star.cols(); ++a)
            if (a != target) competitor = std::min(competitor, q_star(i, a));
        worst = std::max(worst, (q_star(i, target) - competitor) / 2.0);
    }
    return worst;
}

RobustRegionReport robust_region(const ValidatedMdp& mdp, const CostMatrix& c,
                                 const Policy& w_dagger) {
    check_policy(mdp, w_dagger);
    RobustRegionReport r;
    r.target_policy = w_dagger;
    r.center = c;
    r.q_star = fixed_point(mdp, c);
    r.distance = policy_set_distance(r.q_star, w_dagger);
    r.radius = (1.0 - mdp.discount()) * r.distance;
    return r;
}

Matrix frechet_apply(const ValidatedMdp& mdp, const Policy& w, const Matrix& h) {
    if (h.rows() != mdp.num_states() || h.cols() != mdp.num_actions())
        throw ShapeMismatch("perturbation must be S x A");
    Matrix system = Matrix::identity(mdp.num_states());
    system -= mdp.discount() * policy_transition(mdp, w);
    const Vector response = linear_solve(system, policy_column(h, w));
    Matrix out(h.rows(), h.cols());
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t a = 0; a < h.cols(); ++a)
            out(i, a) = mdp.discount() * kernels::dot(mdp.row(i, a), response) + h(i, a);
    return out;
}

Matrix frechet_materialize(const ValidatedMdp& mdp, const Policy& w) {
    const std::size_t n = mdp.num_states() * mdp.num_actions();
    Matrix g(n, n);
    Matrix basis(mdp.num_states(), mdp.num_actions());
    for (std::size_t k = 0; k < n; ++k) {
        basis.flat()[k] = 1.0;
        const Matrix col = frechet_apply(mdp, w, basis);
        for (std::size_t r = 0; r < n; ++r) g(r, k) = col.flat()[r];
        basis.flat()[k] = 0.0;
    }
    return g;
}

} // namespace qfal
