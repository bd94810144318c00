#include "qfal/experiments.hpp"

#include "qfal/errors.hpp"
#include "qfal/exact_solver.hpp"
#include "qfal/sensitivity.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <utility>

namespace qfal {

AttackCostModel AttackCostModel::discounted(Metric metric, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw RangeError("attack-cost discount must lie in (0,1)");
    AttackCostModel m;
    m.kind = Kind::DiscountedMetric;
    m.metric = metric;
    m.alpha = alpha;
    return m;
}

AttackCostModel AttackCostModel::count_pairs() { return AttackCostModel{}; }

AttackCostModel AttackCostModel::subset(std::set<std::size_t> states) {
    AttackCostModel m;
    m.kind = Kind::SubsetIndicator;
    m.states = std::move(states);
    return m;
}

double evaluate_attack_cost(const AttackCostModel& model, std::span<const Observation> trajectory) {
    switch (model.kind) {
    case AttackCostModel::Kind::DiscountedMetric: {
        double total = 0.0;
        double weight = 1.0;
        for (const Observation& o : trajectory) {
            const double d = model.metric == AttackCostModel::Metric::Absolute
                                 ? std::fabs(o.true_cost - o.observed_cost)
                                 : (o.true_cost != o.observed_cost ? 1.0 : 0.0);
            total += weight * d;
            weight *= model.alpha;
        }
        return total;
    }
    case AttackCostModel::Kind::CountPairs: {
        std::set<std::pair<std::size_t, std::size_t>> touched;
        for (const Observation& o : trajectory)
            if (o.true_cost != o.observed_cost) touched.emplace(o.state, o.action);
        return static_cast<double>(touched.size());
    }
    case AttackCostModel::Kind::SubsetIndicator:
        for (const Observation& o : trajectory)
            if (o.true_cost != o.observed_cost && !model.states.contains(o.state))
                return std::numeric_limits<double>::infinity();
        return 0.0;
    }
    return 0.0;
}

double evaluate_adversary_objective(const ValidatedMdp& mdp, const CostMatrix& true_cost,
                                    const CostMatrix& c_tilde, const Policy& w,
                                    const AttackCostModel& model,
                                    std::span<const Observation> trajectory) {
    check_cost(mdp, true_cost);
    check_policy(mdp, w);
    const double reached = in_policy_region(fixed_point(mdp, c_tilde), w) ? 1.0 : 0.0;
    return reached - evaluate_attack_cost(model, trajectory);
}

std::vector<Observation> stealthy_observations(const CostMatrix& true_cost, const CostMatrix& c_tilde) {
    if (!true_cost.same_shape(c_tilde)) throw ShapeMismatch("cost shapes differ");
    std::vector<Observation> out;
    for (std::size_t i = 0; i < true_cost.rows(); ++i)
        for (std::size_t a = 0; a < true_cost.cols(); ++a)
            out.push_back({i, a, true_cost(i, a), c_tilde(i, a)});
    return out;
}

std::vector<LipschitzRow> lipschitz_sweep(const ValidatedMdp& mdp, const CostMatrix& c,
                                          std::size_t runs, std::uint64_t seed, int max_scale) {
    if (max_scale < 1) throw RangeError("falsification scale must be at least 1");
    std::mt19937_64 eng(seed);
    auto uniform = [&] { return static_cast<double>(eng() >> 11) * 0x1.0p-53; };
    auto scale_draw = [&] {
        // multiply-shift maps 32 random bits onto {1..max_scale}
        return 1.0 + static_cast<double>(((eng() >> 32) * static_cast<std::uint64_t>(max_scale)) >> 32);
    };

    const QMatrix q = fixed_point(mdp, c);
    std::vector<LipschitzRow> rows;
    rows.reserve(runs);
    for (std::size_t r = 0; r < runs; ++r) {
        const double k = scale_draw();
        CostMatrix falsified = c;
        for (double& x : falsified.flat()) x += k * uniform();
        const QMatrix q_tilde = fixed_point(mdp, falsified);
        const LipschitzReport rep = lipschitz_check(c, falsified, q, q_tilde, mdp.discount());
        rows.push_back({r + 1, rep.rhs * (1.0 - mdp.discount()), rep.lhs, rep.rhs, rep.holds});
    }
    return rows;
}

std::vector<PiecewiseRow> piecewise_sweep(const ValidatedMdp& mdp, const CostMatrix& base,
                                          std::size_t state, std::size_t action,
                                          std::span<const double> values) {
    check_cost(mdp, base);
    if (state >= mdp.num_states() || action >= mdp.num_actions())
        throw RangeError("swept entry out of range");
    std::vector<PiecewiseRow> rows;
    rows.reserve(values.size());
    CostMatrix cost = base;
    for (double v : values) {
        cost(state, action) = v;
        QMatrix q = fixed_point(mdp, cost);
        Policy p = greedy_policy(q);
        const bool changed = !rows.empty() && rows.back().policy != p;
        rows.push_back({v, std::move(q), std::move(p), changed});
    }
    return rows;
}

std::vector<double> linspace(double from, double to, std::size_t points) {
    if (points < 2) return {from};
    std::vector<double> out(points);
    for (std::size_t k = 0; k < points; ++k)
        out[k] = from + (to - from) * static_cast<double>(k) / static_cast<double>(points - 1);
    return out;
}

} // namespace qfal
