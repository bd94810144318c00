#pragma once

#include "qfal/mdp.hpp"

namespace qfal {

struct LipschitzReport {
    double lhs = 0.0; ///< ||q_tilde - q||
    double rhs = 0.0; ///< ||c_tilde - c|| / (1 - beta)
    bool holds = false;
};

/// Checks ||q_tilde - q|| <= ||c_tilde - c|| / (1 - beta) + 1e-9.
LipschitzReport lipschitz_check(const Matrix& c, const Matrix& c_tilde, const Matrix& q,
                                const Matrix& q_tilde, double beta);

/// Max-norm distance from q_star to the open policy region of w_dagger:
/// max_i max(0, Q(i,w(i)) - min_{a != w(i)} Q(i,a)) / 2.
/// The infimum is not attained since the region is open.
double policy_set_distance(const Matrix& q_star, const Policy& w_dagger);

struct RobustRegionReport {
    Policy target_policy;
    double distance = 0.0;
    /// (1 - beta) * distance; no cost strictly inside this max-norm ball around
    /// `center` yields target_policy as its greedy policy.
    double radius = 0.0;
    CostMatrix center;
    QMatrix q_star;
};

RobustRegionReport robust_region(const ValidatedMdp& mdp, const CostMatrix& c,
                                 const Policy& w_dagger);

/// Action of the derivative of the cost-to-fixed-point map on the region where w is greedy:
/// [Gh](i,a) = beta P_ia^T (I - beta P_w)^{-1} h_w + h(i,a).
/// Only a derivative away from argmin ties; the formula is evaluated regardless.
Matrix frechet_apply(const ValidatedMdp& mdp, const Policy& w, const Matrix& h);

/// G as an (S*A) x (S*A) matrix acting on row-major flattened costs.
Matrix frechet_materialize(const ValidatedMdp& mdp, const Policy& w);

} // namespace qfal
