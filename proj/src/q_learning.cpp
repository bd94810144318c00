#include "qfal/q_learning.hpp"

#include "qfal/errors.hpp"
#include "qfal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <string>

namespace qfal {

AttackChannel AttackChannel::none(InfoStructure info) { return AttackChannel(None{}, info); }

AttackChannel AttackChannel::stealthy(CostMatrix falsified, InfoStructure info) {
    for (double x : falsified.flat())
        if (!std::isfinite(x)) throw RangeError("stealthy falsification must be finite");
    return AttackChannel(StealthyMatrix{std::move(falsified)}, info);
}

AttackChannel AttackChannel::subset_stealthy(const CostMatrix& true_cost, CostMatrix falsified,
                                             std::set<std::size_t> states, InfoStructure info) {
    if (!true_cost.same_shape(falsified))
        throw ShapeMismatch("subset falsification shape differs from true cost");
    for (double x : falsified.flat())
        if (!std::isfinite(x)) throw RangeError("subset falsification must be finite");
    for (std::size_t i = 0; i < true_cost.rows(); ++i) {
        if (states.contains(i)) continue;
        for (std::size_t a = 0; a < true_cost.cols(); ++a)
            if (falsified(i, a) != true_cost(i, a))
                throw RangeError("falsified cost differs from truth at unfalsifiable state " +
                                 std::to_string(i + 1));
    }
    return AttackChannel(SubsetStealthy{std::move(falsified), std::move(states)}, info);
}

AttackChannel AttackChannel::time_varying(TimeVaryingRule::Function rule, InfoStructure info) {
    return AttackChannel(TimeVaryingRule{std::move(rule)}, info);
}

double AttackChannel::observe(std::size_t state, std::size_t action, double true_cost,
                              std::uint64_t t) const {
    struct Visitor {
        std::size_t i, a;
        double c;
        std::uint64_t t;
        double operator()(const None&) const { return c; }
        double operator()(const StealthyMatrix& m) const { return m.falsified(i, a); }
        double operator()(const SubsetStealthy& m) const { return m.falsified(i, a); }
        double operator()(const TimeVaryingRule& r) const { return r.rule(i, a, c, t); }
    };
    return std::visit(Visitor{state, action, true_cost, t}, kind_);
}

double StepSchedule::step(std::uint64_t prior_visits) const {
    return std::pow(1.0 + static_cast<double>(prior_visits), -exponent);
}

namespace {

constexpr std::uint32_t kTransitionStream = 0x7472616eu; // "tran"
constexpr std::uint32_t kExploreStream = 0x6578706cu;    // "expl"

std::mt19937_64 make_stream(std::uint64_t seed, std::uint32_t tag, std::size_t i, std::size_t a) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag,
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(a)};
    return std::mt19937_64(seq);
}

/// 53-bit uniform in [0,1); spelled out so results do not depend on the
/// standard library's distribution implementation.
double uniform01(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

std::size_t sample_next(std::span<const double> probs, double u) {
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        if (probs[j] <= 0.0) continue;
        cum += probs[j];
        last = j;
        if (u < cum) return j;
    }
    return last;
}

void validate_options(const ValidatedMdp& mdp, const CostMatrix& true_cost, const SimOptions& o) {
    check_cost(mdp, true_cost);
    if (o.iterations < 1) throw RangeError("simulation needs at least one iteration");
    if (!(o.schedule.exponent > 0.5 && o.schedule.exponent <= 1.0))
        throw RangeError("step exponent must lie in (0.5, 1]");
    if (!(o.epsilon >= 0.0 && o.epsilon <= 1.0)) throw RangeError("epsilon must lie in [0, 1]");
    if (o.start_state >= mdp.num_states()) throw RangeError("start state out of range");
}

std::size_t argmin_row(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < row.size(); ++a)
        if (row[a] < row[best]) best = a;
    return best;
}

bool snapshot_due(std::uint64_t done, const SimOptions& o) {
    return o.snapshot_stride > 0 && done % o.snapshot_stride == 0 && done != o.iterations;
}

} // namespace

SimTrace run_q_learning(const ValidatedMdp& mdp, const CostMatrix& true_cost,
                        const AttackChannel& channel, const SimOptions& options) {
    validate_options(mdp, true_cost, options);
    const std::size_t s = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    const double beta = mdp.discount();

    std::vector<std::mt19937_64> streams;
    streams.reserve(s * na);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t a = 0; a < na; ++a)
            streams.push_back(make_stream(options.seed, kTransitionStream, i, a));

    SimTrace trace;
    trace.seed = options.seed;
    trace.iterations = options.iterations;
    QMatrix q(s, na);
    trace.snapshots.push_back({0, q});

    auto record = [&](std::size_t i, std::size_t a, double c, double observed) {
        if (trace.observations.size() < options.record_limit)
            trace.observations.push_back({i, a, c, observed});
    };

    if (options.mode == SimMode::Synchronous) {
        Matrix target(s, na);
        Vector steps(s * na);
        for (std::uint64_t n = 0; n < options.iterations; ++n) {
            const Vector v = state_values(q);
            for (std::size_t i = 0; i < s; ++i) {
                for (std::size_t a = 0; a < na; ++a) {
                    const std::size_t next = sample_next(mdp.row(i, a), uniform01(streams[i * na + a]));
                    const double observed = channel.observe(i, a, true_cost(i, a), n);
                    record(i, a, true_cost(i, a), observed);
                    target(i, a) = observed + beta * v[next];
                }
            }
            std::fill(steps.begin(), steps.end(), options.schedule.step(n));
            kernels::relax(q.flat(), target.flat(), steps);
            if (snapshot_due(n + 1, options)) trace.snapshots.push_back({n + 1, q});
        }
    } else {
        std::mt19937_64 explore = make_stream(options.seed, kExploreStream, 0, 0);
        std::vector<std::uint64_t> visits(s * na, 0);
        std::size_t state = options.start_state;
        for (std::uint64_t t = 0; t < options.iterations; ++t) {
            std::size_t action;
            if (uniform01(explore) < options.epsilon)
                action = static_cast<std::size_t>(uniform01(explore) * static_cast<double>(na));
            else
                action = argmin_row(q.row(state));
            action = std::min(action, na - 1);
            const std::size_t k = state * na + action;
            const std::size_t next = sample_next(mdp.row(state, action), uniform01(streams[k]));
            const double observed = channel.observe(state, action, true_cost(state, action), t);
            record(state, action, true_cost(state, action), observed);
            const auto next_row = q.row(next);
            double vmin = next_row[0];
            for (double x : next_row) vmin = std::min(vmin, x);
            const double a_n = options.schedule.step(visits[k]++);
            q(state, action) += a_n * (observed + beta * vmin - q(state, action));
            state = next;
            if (snapshot_due(t + 1, options)) trace.snapshots.push_back({t + 1, q});
        }
    }
    if (trace.snapshots.back().iteration != options.iterations)
        trace.snapshots.push_back({options.iterations, q});
    trace.final_q = std::move(q);
    return trace;
}

std::vector<SimTrace> run_q_learning_batch(const ValidatedMdp& mdp, const CostMatrix& true_cost,
                                           const AttackChannel& channel, SimOptions options,
                                           const std::vector<std::uint64_t>& seeds) {
    std::vector<std::future<SimTrace>> jobs;
    jobs.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
        SimOptions o = options;
        o.seed = seed;
        jobs.push_back(std::async(std::launch::async, [&mdp, &true_cost, &channel, o] {
            return run_q_learning(mdp, true_cost, channel, o);
        }));
    }
    std::vector<SimTrace> out;
    out.reserve(jobs.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

ConvergenceReport convergence_diagnostics(const SimTrace& trace, const Matrix& reference) {
    if (!trace.final_q.same_shape(reference))
        throw ShapeMismatch("reference shape differs from simulated Q");
    ConvergenceReport report;
    report.error_curve.reserve(trace.snapshots.size());
    for (const Snapshot& snap : trace.snapshots) {
        if (!snap.q.same_shape(reference)) throw ShapeMismatch("snapshot shape differs from reference");
        report.error_curve.push_back(max_norm_diff(snap.q, reference));
    }
    report.final_error = max_norm_diff(trace.final_q, reference);
    return report;
}

} // namespace qfal
