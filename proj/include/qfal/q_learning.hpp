#pragma once

#include "qfal/mdp.hpp"

#include <cstdint>
#include <functional>
#include <set>
#include <variant>
#include <vector>

namespace qfal {

/// What the attacker knows when producing a falsified signal. Metadata only;
/// it does not change how a channel is simulated.
enum class InfoStructure { Omniscient, Peer, Ignorant, Blind };

/// Cost signal falsification channel.
class AttackChannel {
public:
    struct None {};
    /// Constant per (state, action) across time.
    struct StealthyMatrix {
        CostMatrix falsified;
    };
    /// Stealthy, but only differs from truth at the falsifiable states.
    struct SubsetStealthy {
        CostMatrix falsified;
        std::set<std::size_t> states;
    };
    /// Arbitrary time-dependent rule: (state, action, true cost, time) -> observed cost.
    struct TimeVaryingRule {
        using Function = std::function<double(std::size_t, std::size_t, double, std::uint64_t)>;
        Function rule;
    };
    using Kind = std::variant<None, StealthyMatrix, SubsetStealthy, TimeVaryingRule>;

    AttackChannel() = default;

    static AttackChannel none(InfoStructure info = InfoStructure::Blind);
    static AttackChannel stealthy(CostMatrix falsified, InfoStructure info = InfoStructure::Omniscient);
    /// Throws RangeError unless `falsified` equals `true_cost` on every row outside `states`.
    static AttackChannel subset_stealthy(const CostMatrix& true_cost, CostMatrix falsified,
                                         std::set<std::size_t> states,
                                         InfoStructure info = InfoStructure::Omniscient);
    static AttackChannel time_varying(TimeVaryingRule::Function rule,
                                      InfoStructure info = InfoStructure::Peer);

    /// Cost seen by the learner at time t.
    double observe(std::size_t state, std::size_t action, double true_cost, std::uint64_t t) const;

    bool is_stealthy() const noexcept { return !std::holds_alternative<TimeVaryingRule>(kind_); }

    const Kind& kind() const noexcept { return kind_; }
    InfoStructure info() const noexcept { return info_; }

private:
    AttackChannel(Kind kind, InfoStructure info) : kind_(std::move(kind)), info_(info) {}
    Kind kind_ = None{};
    InfoStructure info_ = InfoStructure::Blind;
};

/// Per-pair polynomial step a = 1 / (1 + visits)^exponent, exponent in (0.5, 1].
struct StepSchedule {
    double exponent = 0.8;

    double step(std::uint64_t prior_visits) const;
};

enum class SimMode { Synchronous, Trajectory };

struct SimOptions {
    StepSchedule schedule{};
    /// Synchronous: number of all-pairs sweeps. Trajectory: number of transitions.
    std::uint64_t iterations = 1;
    std::uint64_t seed = 0;
    SimMode mode = SimMode::Synchronous;
    /// Exploration rate for trajectory mode.
    double epsilon = 0.1;
    /// Snapshot every `snapshot_stride` iterations (0: initial and final only).
    std::uint64_t snapshot_stride = 0;
    /// Keep at most this many (state, action, true, observed) records.
    std::size_t record_limit = 0;
    std::size_t start_state = 0;
};

struct Observation {
    std::size_t state;
    std::size_t action;
    double true_cost;
    double observed_cost;
};

struct Snapshot {
    std::uint64_t iteration;
    QMatrix q;
};

struct SimTrace {
    std::vector<Snapshot> snapshots;
    QMatrix final_q;
    std::uint64_t seed = 0;
    std::uint64_t iterations = 0;
    std::vector<Observation> observations;
};

/// Q-learning on the observed (possibly falsified) cost:
/// Q(i,a) += a_n * (beta * min_b Q(next,b) + observed(i,a) - Q(i,a)).
/// Next states come from per-pair mt19937_64 streams seeded from (seed, i, a), so
/// results depend only on (seed, inputs, options).
SimTrace run_q_learning(const ValidatedMdp& mdp, const CostMatrix& true_cost,
                        const AttackChannel& channel, const SimOptions& options);

/// Independent runs for several seeds, executed concurrently; results in seed order.
std::vector<SimTrace> run_q_learning_batch(const ValidatedMdp& mdp, const CostMatrix& true_cost,
                                           const AttackChannel& channel, SimOptions options,
                                           const std::vector<std::uint64_t>& seeds);

struct ConvergenceReport {
    double final_error = 0.0;
    std::vector<double> error_curve;
};

/// Max-norm distance of each snapshot (and the final iterate) to `reference`.
ConvergenceReport convergence_diagnostics(const SimTrace& trace, const Matrix& reference);

} // namespace qfal
