#pragma once

#include "qfal/errors.hpp"
#include "qfal/lp.hpp"
#include "qfal/mdp.hpp"

#include <optional>
#include <set>
#include <utility>
#include <variant>
#include <vector>

namespace qfal {

/// Right-hand side of the target-policy conditions for a given on-policy cost vector:
/// entry (i,a) is (1_i - beta P_ia)^T (I - beta P_w)^{-1} anchor. On-policy entries
/// reproduce the anchor itself.
Matrix target_condition_bounds(const ValidatedMdp& mdp, const Vector& anchor, const Policy& w);

/// (I - beta P_a)(I - beta P_w)^{-1}
Matrix target_condition_matrix(const ValidatedMdp& mdp, const Policy& w, std::size_t action);

/// True iff every off-policy entry c_tilde(i,a) exceeds its bound by at least xi
/// (strictly, when xi == 0). With xi == 0 this holds exactly when w is the strict
/// greedy policy of the fixed point of c_tilde.
bool check_target_conditions(const ValidatedMdp& mdp, const Matrix& c_tilde, const Policy& w,
                             double xi = 0.0);

enum class AttackRoute { Anchor, MinCostMaxNorm, MinCostFrobenius, GordanScaling, InstanceLp };

struct AttackCertificate {
    CostMatrix falsified_cost;
    double margin = 0.0;
    /// Exact fixed point of falsified_cost has w as its strict greedy policy.
    bool verified = false;
    Vector anchor;
    /// Power-of-two scale applied to the Gordan direction (partial attacks), else 1.
    double scale = 1.0;
    QMatrix q;
    AttackRoute route = AttackRoute::Anchor;
    /// ||falsified - true|| in the norm that was minimized (min-cost attacks only).
    std::optional<double> attack_norm;
};

/// Sets c(i,w(i)) = anchor(i) and every off-policy entry to its bound plus xi,
/// then verifies by exact solve.
AttackCertificate synthesize_from_anchor(const ValidatedMdp& mdp, const Vector& anchor,
                                         const Policy& w, double xi);

enum class AttackNorm { Max, Frobenius };

/// Closest falsification (in `norm`) to the true cost whose fixed point has greedy policy w
/// with margin xi. Max norm: epigraph LP. Frobenius: off-policy entries are eliminated
/// in closed form, then accelerated gradient descent on the anchor (strongly convex).
/// Throws Infeasible (defensive) or SolverStall.
AttackCertificate min_cost_attack(const ValidatedMdp& mdp, const CostMatrix& c, const Policy& w,
                                  double xi, AttackNorm norm = AttackNorm::Max);

/// Blocks of (I - beta P_a)(I - beta P_w)^{-1} with falsifiable states ordered first.
struct PartitionMatrices {
    std::vector<std::size_t> falsifiable; ///< ascending, 0-based
    std::vector<std::size_t> fixed;       ///< complement, ascending
    /// Per action: the full permuted matrix and its four blocks.
    std::vector<Matrix> permuted;
    std::vector<Matrix> fal_fal;   ///< |S'| x |S'|
    std::vector<Matrix> fal_fixed; ///< |S'| x (S - |S'|)
    std::vector<Matrix> fixed_fal; ///< (S - |S'|) x |S'|
    std::vector<Matrix> fixed_fixed;
    /// fixed_fal blocks stacked over actions, without rows (i, a) where w(i) == a.
    Matrix h;
    /// (state, action) of each row of h.
    std::vector<std::pair<std::size_t, std::size_t>> h_rows;
};

/// Throws RangeError if `falsifiable` is empty or names a state out of range.
PartitionMatrices partition_matrices(const ValidatedMdp& mdp, const Policy& w,
                                     const std::set<std::size_t>& falsifiable);

struct GordanDirection {
    Vector x;           ///< H x <= -depth componentwise, -1 <= x <= 1
    double depth = 0.0; ///< > 0 unless H is empty
    double min_norm = 0.0;
};

struct GordanCertificate {
    Vector y;           ///< y >= 0, sum y = 1, ||H^T y||_inf = min_norm <= tol
    double min_norm = 0.0;
};

using GordanResult = std::variant<GordanDirection, GordanCertificate>;

/// Decides which side of Gordan's alternative holds: either H x < 0 is solvable or
/// H^T y = 0 for some y >= 0, y != 0. Solves min ||H^T y||_inf over the simplex;
/// above tol a strictly negative direction is computed by maximizing the depth over
/// the unit box. An empty H is reported feasible with x = 0.
GordanResult gordan_feasible(const Matrix& h, double tol = 1e-9);

/// Raised when no falsification restricted to the given states reaches the target.
class Infeasible : public Error {
public:
    Infeasible(const std::string& what, std::optional<GordanCertificate> gordan, LpStatus lp)
        : Error(what), gordan_(std::move(gordan)), lp_status_(lp) {}
    const std::optional<GordanCertificate>& gordan() const noexcept { return gordan_; }
    LpStatus lp_status() const noexcept { return lp_status_; }

private:
    std::optional<GordanCertificate> gordan_;
    LpStatus lp_status_;
};

/// Falsifies only the costs at `falsifiable` states. Uses the Gordan direction scaled
/// by the smallest power of two (up to 2^40) that satisfies the unfalsifiable rows with
/// margin xi; otherwise falls back to an LP for this particular true cost.
/// Throws Infeasible when that LP has no solution.
AttackCertificate partial_attack(const ValidatedMdp& mdp, const CostMatrix& true_cost,
                                 const Policy& w, const std::set<std::size_t>& falsifiable,
                                 double xi);

} // namespace qfal
