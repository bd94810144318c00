#pragma once

#include "qfal/mdp.hpp"

#include <cstddef>
#include <optional>

namespace qfal {

struct FixedPointReport {
    QMatrix q;
    std::size_t iterations = 0;
    /// max-norm of F(q) - q at the returned q
    double residual = 0.0;
};

inline constexpr double kDefaultFixedPointTol = 1e-10;

/// One application of the Bellman operator:
/// F(Q)(i,a) = c(i,a) + beta * sum_j p(i,j,a) min_b Q(j,b).
QMatrix bellman_apply(const ValidatedMdp& mdp, const Matrix& cost, const Matrix& q);

/// Inverse of the fixed-point map: the unique cost whose fixed point is q,
/// c(i,a) = Q(i,a) - beta * P_ia^T min_b Q(., b).
CostMatrix cost_from_q(const ValidatedMdp& mdp, const Matrix& q);

/// Iteration cap used when none is given: the larger of 10*log(tol)/log(beta)
/// and the contraction bound log(tol*(1-beta)/||c||)/log(beta), plus one.
std::size_t default_max_iterations(double discount, double tol, double cost_norm);

/// Value iteration on F from Q = 0 until ||F(Q) - Q|| <= tol.
/// Throws NoConvergence if the residual is still above tol after max_iter sweeps.
FixedPointReport solve_q_fixed_point(const ValidatedMdp& mdp, const CostMatrix& cost,
                                     double tol = kDefaultFixedPointTol,
                                     std::optional<std::size_t> max_iter = std::nullopt);

/// Q_w = (I - beta P_w)^{-1} c_w.
Vector policy_q_values(const ValidatedMdp& mdp, const Matrix& cost, const Policy& w);

/// Q(i,a) = beta P_ia^T Q_w + c(i,a). Equals the fixed point whenever w is greedy for the result.
QMatrix q_from_policy_values(const ValidatedMdp& mdp, const Matrix& cost, const Policy& w);

/// Convenience: fixed point at the default tolerance.
QMatrix fixed_point(const ValidatedMdp& mdp, const CostMatrix& cost);

} // namespace qfal
