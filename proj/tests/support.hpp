#pragma once

// Shared fixtures for the test suites: seeded random instances and
// independent reference computations built on Eigen.

#include "qfal/mdp.hpp"
#include "qfal/lp.hpp"
#include "qfal/presets.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace testing {

using qfal::CostMatrix;
using qfal::Matrix;
using qfal::Policy;
using qfal::QMatrix;
using qfal::ValidatedMdp;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_); }
    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

/// Random rows; with `sparse`, each entry is zeroed with probability 1/2 (one entry kept).
inline ValidatedMdp random_mdp(Rng& rng, std::size_t s, std::size_t a, double beta, bool sparse = false) {
    qfal::Mdp m;
    m.discount = beta;
    for (std::size_t k = 0; k < a; ++k) {
        Matrix p(s, s);
        for (std::size_t i = 0; i < s; ++i) {
            double sum = 0.0;
            const std::size_t keep = rng.index(s);
            for (std::size_t j = 0; j < s; ++j) {
                double v = rng.uniform();
                if (sparse && j != keep && rng.uniform() < 0.5) v = 0.0;
                p(i, j) = v;
                sum += v;
            }
            for (std::size_t j = 0; j < s; ++j) p(i, j) /= sum;
        }
        m.transitions.push_back(std::move(p));
    }
    return qfal::validate_mdp(std::move(m));
}

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo, double hi) {
    Matrix m(r, c);
    for (double& x : m.flat()) x = rng.uniform(lo, hi);
    return m;
}

inline CostMatrix random_cost(Rng& rng, std::size_t s, std::size_t a, double lo = -10.0, double hi = 10.0) {
    return CostMatrix(random_matrix(rng, s, a, lo, hi));
}

inline Policy random_policy(Rng& rng, std::size_t s, std::size_t a) {
    std::vector<std::size_t> w(s);
    for (auto& x : w) x = rng.index(a);
    return Policy(std::move(w));
}

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
    return e;
}

/// Optimal Q by enumerating every deterministic policy: the optimal value is the
/// elementwise minimum of the policy values (I - beta P_w)^{-1} c_w.
inline Eigen::MatrixXd brute_force_q_star(const ValidatedMdp& mdp, const Matrix& c) {
    const std::size_t s = mdp.num_states(), a = mdp.num_actions();
    Eigen::VectorXd v = Eigen::VectorXd::Constant(s, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> w(s, 0);
    while (true) {
        Eigen::MatrixXd pw(s, s);
        Eigen::VectorXd cw(s);
        for (std::size_t i = 0; i < s; ++i) {
            for (std::size_t j = 0; j < s; ++j) pw(i, j) = mdp.transition(w[i])(i, j);
            cw(i) = c(i, w[i]);
        }
        const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(s, s) - mdp.discount() * pw;
        v = v.cwiseMin(sys.fullPivLu().solve(cw));
        std::size_t k = 0;
        while (k < s && ++w[k] == a) w[k++] = 0;
        if (k == s) break;
    }
    Eigen::MatrixXd q(s, a);
    for (std::size_t act = 0; act < a; ++act) {
        const Eigen::VectorXd next = to_eigen(mdp.transition(act)) * v;
        for (std::size_t i = 0; i < s; ++i) q(i, act) = c(i, act) + mdp.discount() * next(i);
    }
    return q;
}

inline double max_diff(const Eigen::MatrixXd& e, const Matrix& m) {
    double d = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) d = std::max(d, std::fabs(e(r, c) - m(r, c)));
    return d;
}

/// Exact greedy policy check by row scan: strict unique minimizer equals w(i).
inline bool strict_greedy_is(const Eigen::MatrixXd& q, const Policy& w) {
    for (Eigen::Index i = 0; i < q.rows(); ++i)
        for (Eigen::Index a = 0; a < q.cols(); ++a)
            if (static_cast<std::size_t>(a) != w[i] && !(q(i, w[i]) < q(i, a))) return false;
    return true;
}

/// Brute-force LP optimum by vertex enumeration. Every bound is turned into an
/// explicit row; each n-subset of rows is solved as an equality system and the
/// best feasible vertex is kept. Requires a bounded feasible region.
struct VertexResult {
    bool feasible = false;
    double value = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x;
};

inline VertexResult vertex_enumeration(const qfal::LinearProgram& lp, double tol = 1e-9) {
    const std::size_t n = lp.num_vars();
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    std::vector<bool> equality;
    auto push = [&](Eigen::VectorXd r, double b, bool eq) {
        rows.push_back(std::move(r));
        rhs.push_back(b);
        equality.push_back(eq);
    };
    // canonical form: r.x <= b (or == b)
    for (const auto& con : lp.constraints) {
        Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(con.coefficients.data(), static_cast<Eigen::Index>(n));
        if (con.relation == qfal::Relation::GreaterEqual) push(-r, -con.rhs, false);
        else push(r, con.rhs, con.relation == qfal::Relation::Equal);
    }
    for (std::size_t j = 0; j < n; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        e(static_cast<Eigen::Index>(j)) = 1.0;
        if (std::isfinite(lp.upper[j])) push(e, lp.upper[j], false);
        if (std::isfinite(lp.lower[j])) push(-e, -lp.lower[j], false);
    }
    const std::size_t m = rows.size();
    const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(lp.objective.data(), static_cast<Eigen::Index>(n));
    VertexResult best;
    std::vector<bool> pick(m, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(std::min(n, m)), true);
    do {
        Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        Eigen::VectorXd b(static_cast<Eigen::Index>(n));
        Eigen::Index k = 0;
        for (std::size_t r = 0; r < m; ++r) {
            if (pick[r]) {
                a.row(k) = rows[r].transpose();
                b(k++) = rhs[r];
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (lu.rank() < static_cast<Eigen::Index>(n)) continue;
        const Eigen::VectorXd x = lu.solve(b);
        bool ok = true;
        for (std::size_t r = 0; r < m && ok; ++r) {
            const double lhs = rows[r].dot(x);
            ok = equality[r] ? std::fabs(lhs - rhs[r]) <= tol * (1 + std::fabs(rhs[r])) * 100
                             : lhs <= rhs[r] + tol * (1 + std::fabs(rhs[r])) * 100;
        }
        if (ok && c.dot(x) < best.value) {
            best.feasible = true;
            best.value = c.dot(x);
            best.x = x;
        }
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return best;
}

/// Distance from q to the open region where w is the strict greedy policy, found
/// by nested grid refinement on the radius d. For a candidate d, each row is
/// searched over a grid of perturbations in [-d, d]^A for a point inside the region.
inline double grid_policy_set_distance(const Matrix& q, const Policy& w, double upper) {
    const int k = 6; // grid points per coordinate: -d, ..., d
    auto row_reachable = [&](std::size_t i, double d) {
        const std::size_t a = q.cols();
        std::vector<int> idx(a, 0);
        while (true) {
            std::vector<double> r(a);
            for (std::size_t j = 0; j < a; ++j) r[j] = q(i, j) - d + 2.0 * d * idx[j] / (k - 1);
            bool inside = true;
            for (std::size_t j = 0; j < a; ++j)
                if (j != w[i] && !(r[w[i]] < r[j])) inside = false;
            if (inside) return true;
            std::size_t t = 0;
            while (t < a && ++idx[t] == k) idx[t++] = 0;
            if (t == a) return false;
        }
    };
    auto reachable = [&](double d) {
        for (std::size_t i = 0; i < q.rows(); ++i)
            if (!row_reachable(i, d)) return false;
        return true;
    };
    double lo = 0.0, hi = upper;
    while (hi - lo > 1e-5) {
        const int steps = 10;
        double new_lo = lo, new_hi = hi;
        for (int s = 0; s <= steps; ++s) {
            const double d = lo + (hi - lo) * s / steps;
            if (reachable(d)) {
                new_hi = d;
                new_lo = s == 0 ? d : lo + (hi - lo) * (s - 1) / steps;
                break;
            }
        }
        if (new_hi - new_lo >= hi - lo) break;
        lo = new_lo;
        hi = new_hi;
    }
    return hi;
}

} // namespace testing
