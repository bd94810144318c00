#pragma once

#include "qfal/mdp.hpp"
#include "qfal/q_learning.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <vector>

namespace qfal {

/// How much a falsification costs the attacker.
struct AttackCostModel {
    enum class Kind { DiscountedMetric, CountPairs, SubsetIndicator };
    enum class Metric { Absolute, Discrete };

    Kind kind = Kind::CountPairs;
    Metric metric = Metric::Discrete;
    double alpha = 0.5;
    std::set<std::size_t> states;

    /// sum_t alpha^t d(c_t, observed_t); throws RangeError unless 0 < alpha < 1.
    static AttackCostModel discounted(Metric metric, double alpha);
    /// Number of distinct (state, action) pairs whose observed cost ever differed.
    static AttackCostModel count_pairs();
    /// 0 if falsification only happened at `states`, +infinity otherwise.
    static AttackCostModel subset(std::set<std::size_t> states);
};

double evaluate_attack_cost(const AttackCostModel& model, std::span<const Observation> trajectory);

/// 1{greedy policy of the exact fixed point of c_tilde is w (strictly)} minus the attack cost.
double evaluate_adversary_objective(const ValidatedMdp& mdp, const CostMatrix& true_cost,
                                    const CostMatrix& c_tilde, const Policy& w,
                                    const AttackCostModel& model,
                                    std::span<const Observation> trajectory);

/// Every (state, action) pair observed once with the stealthy falsification.
std::vector<Observation> stealthy_observations(const CostMatrix& true_cost, const CostMatrix& c_tilde);

struct LipschitzRow {
    std::size_t run;
    double dc_norm;
    double dq_norm;
    double bound;
    bool holds;
};

/// Random nonnegative falsifications h = k * U(0,1)^{SxA}, with one integer scale
/// k in {1..max_scale} drawn per matrix, checked against the 1/(1-beta) bound.
std::vector<LipschitzRow> lipschitz_sweep(const ValidatedMdp& mdp, const CostMatrix& c,
                                          std::size_t runs, std::uint64_t seed, int max_scale = 10);

struct PiecewiseRow {
    double swept_value;
    QMatrix q;
    Policy policy;
    bool policy_changed; ///< greedy policy differs from the previous row
};

/// Fixed points as one cost entry runs over `values`, others held at `base`.
std::vector<PiecewiseRow> piecewise_sweep(const ValidatedMdp& mdp, const CostMatrix& base,
                                          std::size_t state, std::size_t action,
                                          std::span<const double> values);

/// Evenly spaced grid of `points` values on [from, to].
std::vector<double> linspace(double from, double to, std::size_t points);

} // namespace qfal
