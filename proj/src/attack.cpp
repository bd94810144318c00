#include "qfal/attack.hpp"

#include "qfal/exact_solver.hpp"
#include "qfal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace qfal {

namespace {

Matrix policy_system(const ValidatedMdp& mdp, const Policy& w) {
    Matrix system = Matrix::identity(mdp.num_states());
    system -= mdp.discount() * policy_transition(mdp, w);
    return system;
}

// Row i of (I - beta P_a)(I - beta P_w)^{-1}, given the inverse.
Vector bound_row(const ValidatedMdp& mdp, const Matrix& inv, std::size_t i, std::size_t a) {
    const std::size_t s = mdp.num_states();
    Vector g(inv.row(i).begin(), inv.row(i).end());
    const auto p = mdp.row(i, a);
    for (std::size_t k = 0; k < s; ++k) {
        if (p[k] == 0.0) continue;
        for (std::size_t c = 0; c < s; ++c) g[c] -= mdp.discount() * p[k] * inv(k, c);
    }
    return g;
}

void require_margin(double xi, bool strict) {
    if (strict ? !(xi > 0.0) : !(xi >= 0.0))
        throw RangeError(strict ? "margin xi must be positive" : "margin xi must be nonnegative");
}

void finish(const ValidatedMdp& mdp, const Policy& w, AttackCertificate& cert) {
    cert.q = fixed_point(mdp, cert.falsified_cost);
    cert.verified = in_policy_region(cert.q, w);
}

} // namespace

Matrix target_condition_bounds(const ValidatedMdp& mdp, const Vector& anchor, const Policy& w) {
    if (anchor.size() != mdp.num_states()) throw ShapeMismatch("anchor must have one entry per state");
    const Vector qw = linear_solve(policy_system(mdp, w), anchor);
    Matrix bounds(mdp.num_states(), mdp.num_actions());
    for (std::size_t i = 0; i < bounds.rows(); ++i)
        for (std::size_t a = 0; a < bounds.cols(); ++a)
            bounds(i, a) = qw[i] - mdp.discount() * kernels::dot(mdp.row(i, a), qw);
    return bounds;
}

Matrix target_condition_matrix(const ValidatedMdp& mdp, const Policy& w, std::size_t action) {
    if (action >= mdp.num_actions()) throw RangeError("action out of range");
    Matrix lhs = Matrix::identity(mdp.num_states());
    lhs -= mdp.discount() * mdp.transition(action);
    return matmul(lhs, inverse(policy_system(mdp, w)));
}

bool check_target_conditions(const ValidatedMdp& mdp, const Matrix& c_tilde, const Policy& w,
                             double xi) {
    require_margin(xi, false);
    check_cost(mdp, c_tilde);
    check_policy(mdp, w);
    const Matrix bounds = target_condition_bounds(mdp, policy_column(c_tilde, w), w);
    for (std::size_t i = 0; i < bounds.rows(); ++i) {
        for (std::size_t a = 0; a < bounds.cols(); ++a) {
            if (a == w[i]) continue;
            const double excess = c_tilde(i, a) - bounds(i, a);
            if (xi > 0.0 ? !(excess >= xi) : !(excess > 0.0)) return false;
        }
    }
    return true;
}

AttackCertificate synthesize_from_anchor(const ValidatedMdp& mdp, const Vector& anchor,
                                         const Policy& w, double xi) {
    require_margin(xi, true);
    check_policy(mdp, w);
    const Matrix bounds = target_condition_bounds(mdp, anchor, w);
    AttackCertificate cert;
    cert.falsified_cost = CostMatrix(bounds.rows(), bounds.cols());
    for (std::size_t i = 0; i < bounds.rows(); ++i)
        for (std::size_t a = 0; a < bounds.cols(); ++a)
            cert.falsified_cost(i, a) = a == w[i] ? anchor[i] : bounds(i, a) + xi;
    cert.margin = xi;
    cert.anchor = anchor;
    cert.route = AttackRoute::Anchor;
    finish(mdp, w, cert);
    return cert;
}

namespace {

AttackCertificate min_cost_max_norm(const ValidatedMdp& mdp, const CostMatrix& c, const Policy& w,
                                    double xi, const Matrix& inv) {
    const std::size_t s = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    // Variables: anchor u (s), off-policy entries in row-major order, then t.
    std::vector<std::pair<std::size_t, std::size_t>> off;
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t a = 0; a < na; ++a)
            if (a != w[i]) off.emplace_back(i, a);
    const std::size_t nv = s + off.size() + 1;
    const std::size_t t_var = nv - 1;

    LinearProgram lp(nv);
    for (std::size_t j = 0; j < t_var; ++j) lp.set_free(j);
    lp.objective[t_var] = 1.0;

    auto box = [&](std::size_t var, double centre) {
        Vector up(nv, 0.0), down(nv, 0.0);
        up[var] = 1.0;
        up[t_var] = -1.0;
        down[var] = -1.0;
        down[t_var] = -1.0;
        lp.add(std::move(up), Relation::LessEqual, centre);
        lp.add(std::move(down), Relation::LessEqual, -centre);
    };
    for (std::size_t i = 0; i < s; ++i) box(i, c(i, w[i]));
    for (std::size_t k = 0; k < off.size(); ++k) {
        const auto [i, a] = off[k];
        box(s + k, c(i, a));
        Vector row(nv, 0.0);
        row[s + k] = 1.0;
        const Vector g = bound_row(mdp, inv, i, a);
        for (std::size_t j = 0; j < s; ++j) row[j] = -g[j];
        lp.add(std::move(row), Relation::GreaterEqual, xi);
    }

    const LpResult res = solve_lp(lp);
    if (res.status != LpStatus::Optimal)
        throw Infeasible("max-norm attack program is not solvable", std::nullopt, res.status);

    AttackCertificate cert;
    cert.anchor.assign(res.x.begin(), res.x.begin() + static_cast<std::ptrdiff_t>(s));
    cert.falsified_cost = CostMatrix(s, na);
    for (std::size_t i = 0; i < s; ++i) cert.falsified_cost(i, w[i]) = res.x[i];
    for (std::size_t k = 0; k < off.size(); ++k)
        cert.falsified_cost(off[k].first, off[k].second) = res.x[s + k];
    cert.attack_norm = max_norm_diff(cert.falsified_cost, c);
    cert.route = AttackRoute::MinCostMaxNorm;
    return cert;
}

AttackCertificate min_cost_frobenius(const ValidatedMdp& mdp, const CostMatrix& c, const Policy& w,
                                     double xi, const Matrix& inv) {
    const std::size_t s = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    struct OffPair {
        std::size_t i, a;
        Vector g;
    };
    std::vector<OffPair> off;
    double lipschitz = 1.0;
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t a = 0; a < na; ++a) {
            if (a == w[i]) continue;
            Vector g = bound_row(mdp, inv, i, a);
            lipschitz += std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
            off.push_back({i, a, std::move(g)});
        }
    }
    lipschitz *= 2.0;
    const Vector cw = policy_column(c, w);

    // phi(u) = |u - c_w|^2 + sum max(0, g.u + xi - c(i,a))^2, strongly convex (mu = 2).
    auto gradient = [&](const Vector& u) {
        Vector grad(s);
        for (std::size_t j = 0; j < s; ++j) grad[j] = 2.0 * (u[j] - cw[j]);
        for (const OffPair& p : off) {
            const double viol = kernels::dot(p.g, u) + xi - c(p.i, p.a);
            if (viol > 0.0)
                for (std::size_t j = 0; j < s; ++j) grad[j] += 2.0 * viol * p.g[j];
        }
        return grad;
    };

    constexpr double kGradTol = 2e-6; // ||u - u*||_2 <= ||grad||_2 / mu = 1e-6
    constexpr std::size_t kMaxIter = 2000000;
    Vector u = cw;
    Vector prev = u;
    Vector look = u;
    double momentum = 1.0;
    std::size_t it = 0;
    for (;; ++it) {
        const Vector g_at_u = gradient(u);
        if (std::sqrt(std::inner_product(g_at_u.begin(), g_at_u.end(), g_at_u.begin(), 0.0)) <= kGradTol)
            break;
        if (it >= kMaxIter) throw SolverStall("Frobenius attack did not reach gradient tolerance");
        const Vector g = gradient(look);
        prev = u;
        for (std::size_t j = 0; j < s; ++j) u[j] = look[j] - g[j] / lipschitz;
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta_m = (momentum - 1.0) / next_momentum;
        for (std::size_t j = 0; j < s; ++j) look[j] = u[j] + beta_m * (u[j] - prev[j]);
        momentum = next_momentum;
        // Restart momentum when it stops helping.
        double progress = 0.0;
        for (std::size_t j = 0; j < s; ++j) progress += g[j] * (u[j] - prev[j]);
        if (progress > 0.0) {
            momentum = 1.0;
            look = u;
        }
    }

    AttackCertificate cert;
    cert.anchor = u;
    cert.falsified_cost = c;
    for (std::size_t i = 0; i < s; ++i) cert.falsified_cost(i, w[i]) = u[i];
    for (const OffPair& p : off)
        cert.falsified_cost(p.i, p.a) = std::max(c(p.i, p.a), kernels::dot(p.g, u) + xi);
    Matrix diff = cert.falsified_cost - c;
    cert.attack_norm = std::sqrt(kernels::dot(diff.flat(), diff.flat()));
    cert.route = AttackRoute::MinCostFrobenius;
    return cert;
}

} // namespace

AttackCertificate min_cost_attack(const ValidatedMdp& mdp, const CostMatrix& c, const Policy& w,
                                  double xi, AttackNorm norm) {
    require_margin(xi, true);
    check_cost(mdp, c);
    check_policy(mdp, w);
    const Matrix inv = inverse(policy_system(mdp, w));
    AttackCertificate cert = norm == AttackNorm::Max ? min_cost_max_norm(mdp, c, w, xi, inv)
                                                     : min_cost_frobenius(mdp, c, w, xi, inv);
    cert.margin = xi;
    finish(mdp, w, cert);
    return cert;
}

PartitionMatrices partition_matrices(const ValidatedMdp& mdp, const Policy& w,
                                     const std::set<std::size_t>& falsifiable) {
    check_policy(mdp, w);
    const std::size_t s = mdp.num_states();
    if (falsifiable.empty()) throw RangeError("at least one falsifiable state is required");
    if (*falsifiable.rbegin() >= s) throw RangeError("falsifiable state out of range");

    PartitionMatrices pm;
    pm.falsifiable.assign(falsifiable.begin(), falsifiable.end());
    for (std::size_t i = 0; i < s; ++i)
        if (!falsifiable.contains(i)) pm.fixed.push_back(i);
    std::vector<std::size_t> order = pm.falsifiable;
    order.insert(order.end(), pm.fixed.begin(), pm.fixed.end());
    const std::size_t nf = pm.falsifiable.size();
    const std::size_t nt = pm.fixed.size();

    const Matrix inv = inverse(policy_system(mdp, w));
    std::vector<Vector> h_rows;
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        Matrix full(s, s);
        for (std::size_t r = 0; r < s; ++r) {
            const Vector g = bound_row(mdp, inv, order[r], a);
            for (std::size_t c = 0; c < s; ++c) full(r, c) = g[order[c]];
        }
        Matrix ff(nf, nf), fx(nf, nt), xf(nt, nf), xx(nt, nt);
        for (std::size_t r = 0; r < s; ++r) {
            for (std::size_t c = 0; c < s; ++c) {
                const double v = full(r, c);
                if (r < nf) (c < nf ? ff(r, c) : fx(r, c - nf)) = v;
                else (c < nf ? xf(r - nf, c) : xx(r - nf, c - nf)) = v;
            }
        }
        for (std::size_t r = 0; r < nt; ++r) {
            const std::size_t state = pm.fixed[r];
            if (w[state] == a) continue;
            h_rows.emplace_back(xf.row(r).begin(), xf.row(r).end());
            pm.h_rows.emplace_back(state, a);
        }
        pm.permuted.push_back(std::move(full));
        pm.fal_fal.push_back(std::move(ff));
        pm.fal_fixed.push_back(std::move(fx));
        pm.fixed_fal.push_back(std::move(xf));
        pm.fixed_fixed.push_back(std::move(xx));
    }
    pm.h = h_rows.empty() ? Matrix(0, nf) : Matrix::from_rows(h_rows);
    return pm;
}

GordanResult gordan_feasible(const Matrix& h, double tol) {
    const std::size_t m = h.rows();
    const std::size_t n = h.cols();
    if (m == 0) return GordanDirection{Vector(n, 0.0), 0.0, 0.0};

    // min u  s.t.  -u <= (H^T y)_k <= u,  sum y = 1,  y >= 0.
    LinearProgram dual(m + 1);
    dual.objective[m] = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        Vector up(m + 1, 0.0), down(m + 1, 0.0);
        for (std::size_t r = 0; r < m; ++r) {
            up[r] = h(r, k);
            down[r] = -h(r, k);
        }
        up[m] = -1.0;
        down[m] = -1.0;
        dual.add(std::move(up), Relation::LessEqual, 0.0);
        dual.add(std::move(down), Relation::LessEqual, 0.0);
    }
    Vector simplex(m + 1, 1.0);
    simplex[m] = 0.0;
    dual.add(std::move(simplex), Relation::Equal, 1.0);
    const LpResult d = solve_lp(dual);
    if (d.status != LpStatus::Optimal) throw SolverStall("Gordan norm program did not solve");

    if (d.value <= tol) {
        Vector y(d.x.begin(), d.x.begin() + static_cast<std::ptrdiff_t>(m));
        return GordanCertificate{std::move(y), d.value};
    }

    // max t  s.t.  H x + t 1 <= 0,  -1 <= x <= 1.
    LinearProgram primal(n + 1);
    for (std::size_t j = 0; j < n; ++j) primal.set_bounds(j, -1.0, 1.0);
    primal.set_free(n);
    primal.objective[n] = -1.0;
    for (std::size_t r = 0; r < m; ++r) {
        Vector row(h.row(r).begin(), h.row(r).end());
        row.push_back(1.0);
        primal.add(std::move(row), Relation::LessEqual, 0.0);
    }
    const LpResult p = solve_lp(primal);
    if (p.status != LpStatus::Optimal) throw SolverStall("Gordan direction program did not solve");
    Vector x(p.x.begin(), p.x.begin() + static_cast<std::ptrdiff_t>(n));
    return GordanDirection{std::move(x), p.x[n], d.value};
}

AttackCertificate partial_attack(const ValidatedMdp& mdp, const CostMatrix& true_cost,
                                 const Policy& w, const std::set<std::size_t>& falsifiable,
                                 double xi) {
    require_margin(xi, true);
    check_cost(mdp, true_cost);
    check_policy(mdp, w);
    const std::size_t s = mdp.num_states();
    if (falsifiable.size() == s && !falsifiable.empty() && *falsifiable.rbegin() < s)
        return synthesize_from_anchor(mdp, policy_column(true_cost, w), w, xi);

    const PartitionMatrices pm = partition_matrices(mdp, w, falsifiable);
    const std::size_t nf = pm.falsifiable.size();
    Vector true_anchor_fixed(pm.fixed.size());
    for (std::size_t r = 0; r < pm.fixed.size(); ++r) true_anchor_fixed[r] = true_cost(pm.fixed[r], w[pm.fixed[r]]);

    // Slack available to each unfalsifiable row: c(i,a) - N_a[i] . c_w^true - xi.
    Vector budget(pm.h.rows());
    {
        std::size_t k = 0;
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            for (std::size_t r = 0; r < pm.fixed.size(); ++r) {
                const std::size_t state = pm.fixed[r];
                if (w[state] == a) continue;
                budget[k++] = true_cost(state, a) -
                              kernels::dot(pm.fixed_fixed[a].row(r), true_anchor_fixed) - xi;
            }
        }
    }
    auto rows_hold = [&](const Vector& u) {
        for (std::size_t k = 0; k < pm.h.rows(); ++k)
            if (!(kernels::dot(pm.h.row(k), u) <= budget[k])) return false;
        return true;
    };

    auto build = [&](const Vector& u, double scale, AttackRoute route) {
        Vector anchor = policy_column(true_cost, w);
        for (std::size_t k = 0; k < nf; ++k) anchor[pm.falsifiable[k]] = u[k];
        const Matrix bounds = target_condition_bounds(mdp, anchor, w);
        AttackCertificate cert;
        cert.falsified_cost = true_cost;
        for (std::size_t i : pm.falsifiable)
            for (std::size_t a = 0; a < mdp.num_actions(); ++a)
                cert.falsified_cost(i, a) = a == w[i] ? anchor[i] : bounds(i, a) + xi;
        cert.anchor = std::move(anchor);
        cert.margin = xi;
        cert.scale = scale;
        cert.route = route;
        finish(mdp, w, cert);
        return cert;
    };

    const GordanResult gordan = gordan_feasible(pm.h);
    if (const auto* dir = std::get_if<GordanDirection>(&gordan)) {
        double scale = 1.0;
        for (int k = 0; k <= 40; ++k, scale *= 2.0) {
            Vector u = dir->x;
            for (double& v : u) v *= scale;
            if (rows_hold(u)) {
                AttackCertificate cert = build(u, scale, AttackRoute::GordanScaling);
                if (cert.verified) return cert;
                break;
            }
        }
    }

    // The Gordan condition covers every true cost; this instance may still be reachable.
    LinearProgram lp(nf);
    for (std::size_t j = 0; j < nf; ++j) lp.set_free(j);
    for (std::size_t k = 0; k < pm.h.rows(); ++k)
        lp.add(Vector(pm.h.row(k).begin(), pm.h.row(k).end()), Relation::LessEqual, budget[k]);
    const LpResult res = solve_lp(lp);
    std::optional<GordanCertificate> cert_y;
    if (const auto* y = std::get_if<GordanCertificate>(&gordan)) cert_y = *y;
    if (res.status != LpStatus::Optimal)
        throw Infeasible("target policy unreachable by falsifying only the given states",
                         std::move(cert_y), res.status);
    AttackCertificate cert = build(res.x, 1.0, AttackRoute::InstanceLp);
    return cert;
}

} // namespace qfal
