#pragma once

// Scenario configuration and the subcommand pipelines behind the qfal CLI.
//
// Configs are JSON documents with 1-based state/action indices and row-major
// matrices; see README.md for the schema.

#include "qfal/attack.hpp"
#include "qfal/errors.hpp"
#include "qfal/experiments.hpp"
#include "qfal/mdp.hpp"
#include "qfal/q_learning.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace qfal {

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class IoError : public Error {
public:
    using Error::Error;
};

struct AttackBlock {
    enum class Kind { None, Stealthy, Anchor, MinCost, Partial };
    Kind kind = Kind::None;
    std::optional<Policy> target;
    std::set<std::size_t> falsifiable; ///< 0-based
    double xi = 1.0;
    std::optional<Vector> anchor;
    std::optional<CostMatrix> falsified_cost;
    AttackNorm norm = AttackNorm::Max;
    InfoStructure info = InfoStructure::Omniscient;
};

struct SimulationBlock {
    std::uint64_t iterations = 200000;
    std::vector<std::uint64_t> seeds{1};
    SimMode mode = SimMode::Synchronous;
    StepSchedule schedule{};
    std::uint64_t snapshot_stride = 0;
    double epsilon = 0.1;
    std::size_t record_limit = 0;
};

struct DerivativeBlock {
    std::optional<Policy> policy;
    std::optional<Matrix> perturbation;
    std::optional<CostMatrix> base_cost;
};

struct SweepBlock {
    std::size_t state = 0;
    std::size_t action = 0;
    double from = -20.0;
    double to = 40.0;
    std::size_t points = 121;
    std::optional<CostMatrix> base_cost;
};

struct LipschitzBlock {
    std::size_t runs = 100;
    std::uint64_t seed = 1;
    int max_scale = 10;
};

struct OutputBlock {
    /// "json" or "csv"; unset means csv for the sweep commands and json otherwise.
    std::optional<std::string> format;
    std::string path; ///< empty: standard output
};

struct ScenarioConfig {
    ScenarioConfig(ValidatedMdp m, CostMatrix c) : mdp(std::move(m)), true_cost(std::move(c)) {}

    ValidatedMdp mdp;
    CostMatrix true_cost;
    AttackBlock attack;
    SimulationBlock simulation;
    std::optional<AttackCostModel> attack_cost;
    DerivativeBlock derivative;
    SweepBlock sweep;
    LipschitzBlock lipschitz;
    OutputBlock output;
};

/// Throws ConfigError naming the offending field (or line, for syntax errors).
ScenarioConfig parse_config(std::string_view text);
/// Throws IoError if the file cannot be read.
ScenarioConfig load_config(const std::filesystem::path& path);

/// The reservoir case study with its attack, derivative and sweep settings.
ScenarioConfig reservoir_scenario();

enum class Command {
    Solve,
    Simulate,
    RobustRegion,
    Derivative,
    Synthesize,
    MinCostAttack,
    PartialAttack,
    LipschitzSweep,
    PiecewiseSweep,
    ReproduceReservoir,
};

std::optional<Command> parse_command(std::string_view name);
std::string_view command_name(Command command);
const std::vector<Command>& all_commands();

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerification = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> xi;
    std::optional<std::string> format;
    std::optional<std::string> out;
    std::optional<std::size_t> runs;
};

struct ScenarioOutput {
    int exit_code = kExitOk;
    std::string format;
    std::string body;
    /// Human-readable description of every failed internal verification.
    std::vector<std::string> failures;
};

/// Runs one subcommand pipeline. Solver errors become exit code 3; ConfigError
/// propagates so the caller can report it with exit code 2.
ScenarioOutput run_scenario(Command command, const ScenarioConfig& config,
                            const RunOverrides& overrides = {});

/// run_scenario plus output: writes the body to the configured path (or `out`)
/// and diagnostics to `err`. Returns the process exit code.
int run_and_emit(Command command, const ScenarioConfig& config, const RunOverrides& overrides,
                 std::ostream& out, std::ostream& err);

} // namespace qfal
