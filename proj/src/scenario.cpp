#include "qfal/scenario.hpp"

#include "qfal/exact_solver.hpp"
#include "qfal/presets.hpp"
#include "qfal/sensitivity.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace qfal {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Parsing helpers. Every accessor carries the dotted field path for errors.

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(path.empty() ? key : path + "." + key, "missing field");
    return *it;
}

const json* optional_field(const json& obj, const std::string& key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
    return x;
}

std::uint64_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw ConfigError(path, "expected a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path, "expected a string");
    return v.get<std::string>();
}

Vector as_vector(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    Vector out;
    for (std::size_t k = 0; k < v.size(); ++k)
        out.push_back(as_number(v[k], path + "[" + std::to_string(k) + "]"));
    return out;
}

Matrix as_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a nonempty array of rows");
    std::vector<Vector> rows;
    for (std::size_t r = 0; r < v.size(); ++r) {
        rows.push_back(as_vector(v[r], path + "[" + std::to_string(r) + "]"));
        if (rows.back().size() != rows.front().size())
            throw ConfigError(path + "[" + std::to_string(r) + "]", "row length differs from row 1");
    }
    return Matrix::from_rows(rows);
}

std::size_t as_index(const json& v, std::size_t limit, const std::string& path, const char* what) {
    const std::uint64_t k = as_count(v, path);
    if (k < 1 || k > limit)
        throw ConfigError(path, std::string(what) + " must be in 1.." + std::to_string(limit));
    return static_cast<std::size_t>(k - 1);
}

Policy as_policy(const json& v, const ValidatedMdp& mdp, const std::string& path) {
    if (!v.is_array() || v.size() != mdp.num_states())
        throw ConfigError(path, "expected " + std::to_string(mdp.num_states()) + " actions (1-based)");
    std::vector<std::size_t> actions;
    for (std::size_t i = 0; i < v.size(); ++i)
        actions.push_back(as_index(v[i], mdp.num_actions(), path + "[" + std::to_string(i) + "]", "action"));
    return Policy(std::move(actions));
}

std::set<std::size_t> as_state_set(const json& v, const ValidatedMdp& mdp, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of states (1-based)");
    std::set<std::size_t> out;
    for (std::size_t k = 0; k < v.size(); ++k)
        out.insert(as_index(v[k], mdp.num_states(), path + "[" + std::to_string(k) + "]", "state"));
    return out;
}

CostMatrix as_cost(const json& v, const ValidatedMdp& mdp, const std::string& path) {
    Matrix m = as_matrix(v, path);
    if (m.rows() != mdp.num_states() || m.cols() != mdp.num_actions())
        throw ConfigError(path, "expected a " + std::to_string(mdp.num_states()) + "x" +
                                    std::to_string(mdp.num_actions()) + " matrix");
    return CostMatrix(std::move(m));
}

ValidatedMdp parse_mdp(const json& v) {
    const std::string path = "mdp";
    const double discount = as_number(require(v, "discount", path), "mdp.discount");
    const json& tr = require(v, "transitions", path);
    if (!tr.is_array() || tr.empty()) throw ConfigError("mdp.transitions", "expected one matrix per action");
    Mdp mdp;
    mdp.discount = discount;
    for (std::size_t a = 0; a < tr.size(); ++a)
        mdp.transitions.push_back(as_matrix(tr[a], "mdp.transitions[" + std::to_string(a) + "]"));
    if (const json* s = optional_field(v, "states"); s && as_count(*s, "mdp.states") != mdp.num_states())
        throw ConfigError("mdp.states", "does not match the transition matrices");
    if (const json* a = optional_field(v, "actions"); a && as_count(*a, "mdp.actions") != mdp.num_actions())
        throw ConfigError("mdp.actions", "does not match the number of transition matrices");
    try {
        return validate_mdp(std::move(mdp));
    } catch (const Error& e) {
        throw ConfigError("mdp", e.what());
    }
}

template <class Enum>
Enum as_enum(const json& v, const std::string& path,
             std::initializer_list<std::pair<std::string_view, Enum>> options) {
    const std::string s = as_string(v, path);
    for (const auto& [name, value] : options)
        if (name == s) return value;
    std::string allowed;
    for (const auto& [name, value] : options) allowed += (allowed.empty() ? "" : ", ") + std::string(name);
    throw ConfigError(path, "unknown value '" + s + "' (expected one of: " + allowed + ")");
}

std::size_t line_of(std::string_view text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// ---------------------------------------------------------------------------
// Report helpers

json to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(Vector(m.row(r).begin(), m.row(r).end()));
    return rows;
}

json to_json(const Policy& w) {
    json out = json::array();
    for (std::size_t a : w.actions()) out.push_back(a + 1);
    return out;
}

json to_json(const std::set<std::size_t>& states) {
    json out = json::array();
    for (std::size_t s : states) out.push_back(s + 1);
    return out;
}

std::string_view route_name(AttackRoute r) {
    switch (r) {
    case AttackRoute::Anchor: return "anchor";
    case AttackRoute::MinCostMaxNorm: return "min-cost-max-norm";
    case AttackRoute::MinCostFrobenius: return "min-cost-frobenius";
    case AttackRoute::GordanScaling: return "gordan-scaling";
    case AttackRoute::InstanceLp: return "instance-lp";
    }
    return "unknown";
}

json to_json(const AttackCertificate& c) {
    json j{{"falsified_cost", to_json(c.falsified_cost)},
           {"q", to_json(c.q)},
           {"greedy_policy", to_json(greedy_policy(c.q))},
           {"anchor", c.anchor},
           {"margin", c.margin},
           {"scale", c.scale},
           {"route", route_name(c.route)},
           {"verified", c.verified}};
    if (c.attack_norm) j["attack_norm"] = *c.attack_norm;
    return j;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string fmt(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

std::string render_csv(const Table& t) {
    std::ostringstream os;
    for (std::size_t k = 0; k < t.header.size(); ++k) os << (k ? "," : "") << t.header[k];
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << row[k];
        os << '\n';
    }
    return os.str();
}

bool is_number_matrix(const json& v) {
    if (!v.is_array() || v.empty()) return false;
    return std::all_of(v.begin(), v.end(), [](const json& r) {
        return r.is_array() && std::all_of(r.begin(), r.end(), [](const json& x) { return x.is_number(); });
    });
}

// Long-form CSV: quantity,state,action,value (1-based indices; blanks where n/a).
void flatten(const json& v, const std::string& name, Table& t) {
    if (v.is_object()) {
        for (auto it = v.begin(); it != v.end(); ++it) flatten(*it, join(name, it.key()), t);
    } else if (is_number_matrix(v)) {
        for (std::size_t r = 0; r < v.size(); ++r)
            for (std::size_t c = 0; c < v[r].size(); ++c)
                t.rows.push_back({name, std::to_string(r + 1), std::to_string(c + 1), fmt(v[r][c].get<double>())});
    } else if (v.is_array()) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (v[k].is_number())
                t.rows.push_back({name, std::to_string(k + 1), "", fmt(v[k].get<double>())});
            else
                flatten(v[k], name + "[" + std::to_string(k + 1) + "]", t);
        }
    } else if (v.is_boolean()) {
        t.rows.push_back({name, "", "", v.get<bool>() ? "1" : "0"});
    } else if (v.is_number()) {
        t.rows.push_back({name, "", "", fmt(v.get<double>())});
    } else if (v.is_string()) {
        t.rows.push_back({name, "", "", v.get<std::string>()});
    }
}

struct Outcome {
    json report;
    std::optional<Table> table;
    std::vector<std::string> failures;
};

void expect(Outcome& o, bool ok, const std::string& what) {
    if (!ok) o.failures.push_back(what);
}

Policy require_target(const ScenarioConfig& cfg) {
    if (!cfg.attack.target) throw ConfigError("attack.target_policy", "missing field");
    return *cfg.attack.target;
}

double xi_of(const ScenarioConfig& cfg, const RunOverrides& ov) {
    const double xi = ov.xi.value_or(cfg.attack.xi);
    if (!(xi > 0.0)) throw ConfigError("attack.xi", "margin must be positive");
    return xi;
}

// ---------------------------------------------------------------------------
// Pipelines

Outcome cmd_solve(const ScenarioConfig& cfg) {
    const FixedPointReport fp = solve_q_fixed_point(cfg.mdp, cfg.true_cost);
    const Policy w = greedy_policy(fp.q);
    Outcome o;
    o.report = {{"q_star", to_json(fp.q)},
                {"policy", to_json(w)},
                {"iterations", fp.iterations},
                {"residual", fp.residual},
                {"policy_margin", policy_margin(fp.q, w)}};
    expect(o, fp.residual <= kDefaultFixedPointTol, "fixed-point residual above tolerance");
    return o;
}

struct EffectiveAttack {
    AttackChannel channel;
    CostMatrix observed;
    std::optional<AttackCertificate> certificate;
};

EffectiveAttack effective_attack(const ScenarioConfig& cfg, const RunOverrides& ov) {
    const AttackBlock& a = cfg.attack;
    switch (a.kind) {
    case AttackBlock::Kind::None: return {AttackChannel::none(a.info), cfg.true_cost, std::nullopt};
    case AttackBlock::Kind::Stealthy:
        if (!a.falsified_cost) throw ConfigError("attack.falsified_cost", "missing field");
        return {AttackChannel::stealthy(*a.falsified_cost, a.info), *a.falsified_cost, std::nullopt};
    case AttackBlock::Kind::Anchor: {
        if (!a.anchor) throw ConfigError("attack.anchor", "missing field");
        AttackCertificate cert = synthesize_from_anchor(cfg.mdp, *a.anchor, require_target(cfg), xi_of(cfg, ov));
        return {AttackChannel::stealthy(cert.falsified_cost, a.info), cert.falsified_cost, cert};
    }
    case AttackBlock::Kind::MinCost: {
        AttackCertificate cert = min_cost_attack(cfg.mdp, cfg.true_cost, require_target(cfg), xi_of(cfg, ov), a.norm);
        return {AttackChannel::stealthy(cert.falsified_cost, a.info), cert.falsified_cost, cert};
    }
    case AttackBlock::Kind::Partial: {
        AttackCertificate cert =
            partial_attack(cfg.mdp, cfg.true_cost, require_target(cfg), a.falsifiable, xi_of(cfg, ov));
        return {AttackChannel::subset_stealthy(cfg.true_cost, cert.falsified_cost, a.falsifiable, a.info),
                cert.falsified_cost, cert};
    }
    }
    throw ConfigError("attack.kind", "unsupported");
}

Outcome cmd_simulate(const ScenarioConfig& cfg, const RunOverrides& ov) {
    const EffectiveAttack attack = effective_attack(cfg, ov);
    const QMatrix reference = fixed_point(cfg.mdp, attack.observed);
    const SimulationBlock& sb = cfg.simulation;
    SimOptions opts;
    opts.schedule = sb.schedule;
    opts.iterations = sb.iterations;
    opts.mode = sb.mode;
    opts.epsilon = sb.epsilon;
    opts.snapshot_stride = sb.snapshot_stride;
    opts.record_limit = sb.record_limit;
    if (cfg.attack_cost && opts.record_limit == 0) {
        // enough of the trajectory for discounted costs to settle and every pair to appear
        opts.record_limit = cfg.mdp.num_states() * cfg.mdp.num_actions() * 1000;
    }
    const std::vector<std::uint64_t> seeds = ov.seed ? std::vector<std::uint64_t>{*ov.seed} : sb.seeds;
    const std::vector<SimTrace> traces = run_q_learning_batch(cfg.mdp, cfg.true_cost, attack.channel, opts, seeds);

    Outcome o;
    o.table = Table{{"seed", "iteration", "error"}, {}};
    json runs = json::array();
    std::vector<double> finals;
    for (const SimTrace& tr : traces) {
        const ConvergenceReport conv = convergence_diagnostics(tr, reference);
        finals.push_back(conv.final_error);
        json run{{"seed", tr.seed},
                 {"final_error", conv.final_error},
                 {"final_q", to_json(tr.final_q)},
                 {"greedy_policy", to_json(greedy_policy(tr.final_q))}};
        json curve = json::array();
        for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
            curve.push_back({{"iteration", tr.snapshots[k].iteration}, {"error", conv.error_curve[k]}});
            o.table->rows.push_back({std::to_string(tr.seed), std::to_string(tr.snapshots[k].iteration),
                                     fmt(conv.error_curve[k])});
        }
        run["error_curve"] = std::move(curve);
        if (cfg.attack_cost) {
            const double cost = evaluate_attack_cost(*cfg.attack_cost, tr.observations);
            run["attack_cost"] = std::isinf(cost) ? json("inf") : json(cost);
            if (cfg.attack.target)
                run["adversary_objective"] = (greedy_policy(tr.final_q) == *cfg.attack.target ? 1.0 : 0.0) - cost;
        }
        runs.push_back(std::move(run));
    }
    std::vector<double> sorted = finals;
    std::sort(sorted.begin(), sorted.end());
    o.report = {{"reference_q", to_json(reference)},
                {"reference_policy", to_json(greedy_policy(reference))},
                {"median_final_error", sorted[sorted.size() / 2]},
                {"stealthy", attack.channel.is_stealthy()},
                {"runs", std::move(runs)}};
    if (attack.certificate) {
        o.report["certificate"] = to_json(*attack.certificate);
        expect(o, attack.certificate->verified, "falsified cost does not reach the target policy");
    }
    return o;
}

Outcome cmd_robust_region(const ScenarioConfig& cfg) {
    const RobustRegionReport r = robust_region(cfg.mdp, cfg.true_cost, require_target(cfg));
    Outcome o;
    o.report = {{"q_star", to_json(r.q_star)},
                {"optimal_policy", to_json(greedy_policy(r.q_star))},
                {"target_policy", to_json(r.target_policy)},
                {"distance", r.distance},
                {"radius", r.radius}};
    expect(o, r.distance >= 0.0, "negative distance");
    return o;
}

Outcome cmd_derivative(const ScenarioConfig& cfg) {
    const DerivativeBlock& d = cfg.derivative;
    if (!d.perturbation) throw ConfigError("derivative.perturbation", "missing field");
    if (d.perturbation->rows() != cfg.mdp.num_states() || d.perturbation->cols() != cfg.mdp.num_actions())
        throw ConfigError("derivative.perturbation", "must be S x A");
    const CostMatrix base = d.base_cost.value_or(cfg.true_cost);
    const QMatrix q = fixed_point(cfg.mdp, base);
    const Policy w = d.policy.value_or(greedy_policy(q));
    const Matrix gh = frechet_apply(cfg.mdp, w, *d.perturbation);
    const QMatrix q_pert = fixed_point(cfg.mdp, CostMatrix(base + *d.perturbation));
    const bool both_in_region = in_policy_region(q, w) && in_policy_region(q_pert, w);
    const double first_order_error = max_norm_diff(q_pert, q + gh);
    Outcome o;
    o.report = {{"policy", to_json(w)},
                {"gh", to_json(gh)},
                {"q_base", to_json(q)},
                {"q_perturbed", to_json(q_pert)},
                {"both_in_region", both_in_region},
                {"first_order_error", first_order_error}};
    if (both_in_region) expect(o, first_order_error <= 1e-6, "f(c+h) differs from f(c)+Gh inside the policy region");
    return o;
}

Outcome cmd_synthesize(const ScenarioConfig& cfg, const RunOverrides& ov) {
    if (!cfg.attack.anchor) throw ConfigError("attack.anchor", "missing field");
    const Policy w = require_target(cfg);
    const AttackCertificate cert = synthesize_from_anchor(cfg.mdp, *cfg.attack.anchor, w, xi_of(cfg, ov));
    Outcome o;
    o.report = {{"target_policy", to_json(w)},
                {"certificate", to_json(cert)},
                {"conditions_hold", check_target_conditions(cfg.mdp, cert.falsified_cost, w)}};
    expect(o, cert.verified, "certificate does not reach the target policy");
    return o;
}

Outcome cmd_min_cost(const ScenarioConfig& cfg, const RunOverrides& ov) {
    const Policy w = require_target(cfg);
    const double xi = xi_of(cfg, ov);
    const AttackCertificate cert = min_cost_attack(cfg.mdp, cfg.true_cost, w, xi, cfg.attack.norm);
    const RobustRegionReport rr = robust_region(cfg.mdp, cfg.true_cost, w);
    Outcome o;
    o.report = {{"target_policy", to_json(w)},
                {"norm", cfg.attack.norm == AttackNorm::Max ? "max" : "frobenius"},
                {"certificate", to_json(cert)},
                {"robust_radius", rr.radius}};
    expect(o, cert.verified, "certificate does not reach the target policy");
    if (cfg.attack.norm == AttackNorm::Max)
        expect(o, *cert.attack_norm >= rr.radius - xi - 1e-9, "attack cheaper than the robust-region bound");
    return o;
}

json gordan_json(const GordanResult& g) {
    if (const auto* d = std::get_if<GordanDirection>(&g))
        return {{"feasible", true}, {"x", d->x}, {"depth", d->depth}, {"min_norm", d->min_norm}};
    const auto& c = std::get<GordanCertificate>(g);
    return {{"feasible", false}, {"y", c.y}, {"min_norm", c.min_norm}};
}

json partition_json(const PartitionMatrices& pm) {
    json rows = json::array();
    for (const auto& [s, a] : pm.h_rows) rows.push_back({{"state", s + 1}, {"action", a + 1}});
    json full = json::array();
    for (const Matrix& m : pm.permuted) full.push_back(to_json(m));
    std::set<std::size_t> fal(pm.falsifiable.begin(), pm.falsifiable.end());
    return {{"falsifiable", to_json(fal)}, {"h", to_json(pm.h)}, {"h_rows", rows}, {"condition_matrices", full}};
}

Outcome cmd_partial(const ScenarioConfig& cfg, const RunOverrides& ov) {
    const Policy w = require_target(cfg);
    if (cfg.attack.falsifiable.empty()) throw ConfigError("attack.falsifiable_states", "must name at least one state");
    const PartitionMatrices pm = partition_matrices(cfg.mdp, w, cfg.attack.falsifiable);
    Outcome o;
    o.report = {{"target_policy", to_json(w)}, {"partition", partition_json(pm)}, {"gordan", gordan_json(gordan_feasible(pm.h))}};
    try {
        const AttackCertificate cert = partial_attack(cfg.mdp, cfg.true_cost, w, cfg.attack.falsifiable, xi_of(cfg, ov));
        o.report["certificate"] = to_json(cert);
        o.report["feasible"] = true;
        expect(o, cert.verified, "partial-state certificate does not reach the target policy");
    } catch (const Infeasible& e) {
        o.report["feasible"] = false;
        o.report["reason"] = e.what();
        expect(o, false, e.what());
    }
    return o;
}

Outcome cmd_lipschitz(const ScenarioConfig& cfg, const RunOverrides& ov) {
    const std::size_t runs = ov.runs.value_or(cfg.lipschitz.runs);
    const std::uint64_t seed = ov.seed.value_or(cfg.lipschitz.seed);
    const auto rows = lipschitz_sweep(cfg.mdp, cfg.true_cost, runs, seed, cfg.lipschitz.max_scale);
    Outcome o;
    o.table = Table{{"run", "dc_norm", "dq_norm", "bound", "holds"}, {}};
    json arr = json::array();
    std::size_t violations = 0;
    for (const LipschitzRow& r : rows) {
        o.table->rows.push_back({std::to_string(r.run), fmt(r.dc_norm), fmt(r.dq_norm), fmt(r.bound), r.holds ? "1" : "0"});
        arr.push_back({{"run", r.run}, {"dc_norm", r.dc_norm}, {"dq_norm", r.dq_norm}, {"bound", r.bound}, {"holds", r.holds}});
        if (!r.holds) ++violations;
    }
    o.report = {{"seed", seed}, {"runs", std::move(arr)}, {"violations", violations}};
    expect(o, violations == 0, std::to_string(violations) + " falsifications violate the Lipschitz bound");
    return o;
}

Outcome cmd_piecewise(const ScenarioConfig& cfg) {
    const SweepBlock& s = cfg.sweep;
    const CostMatrix base = s.base_cost.value_or(cfg.true_cost);
    const std::vector<double> grid = linspace(s.from, s.to, s.points);
    const auto rows = piecewise_sweep(cfg.mdp, base, s.state, s.action, grid);
    Outcome o;
    Table t;
    t.header.push_back("swept_value");
    for (std::size_t i = 0; i < cfg.mdp.num_states(); ++i)
        for (std::size_t a = 0; a < cfg.mdp.num_actions(); ++a)
            t.header.push_back("Q_" + std::to_string(i + 1) + "_a" + std::to_string(a + 1));
    t.header.push_back("policy_change_flag");
    json arr = json::array();
    for (const PiecewiseRow& r : rows) {
        std::vector<std::string> line{fmt(r.swept_value)};
        for (double x : r.q.flat()) line.push_back(fmt(x));
        line.push_back(r.policy_changed ? "1" : "0");
        t.rows.push_back(std::move(line));
        arr.push_back({{"swept_value", r.swept_value}, {"q", to_json(r.q)}, {"policy", to_json(r.policy)},
                       {"policy_change_flag", r.policy_changed}});
    }
    o.table = std::move(t);
    o.report = {{"state", s.state + 1}, {"action", s.action + 1}, {"rows", std::move(arr)}};
    return o;
}

Outcome cmd_reproduce(const RunOverrides& ov) {
    const ScenarioConfig cfg = reservoir_scenario();
    Outcome o;

    const QMatrix q_star = fixed_point(cfg.mdp, cfg.true_cost);
    const Policy w_star = greedy_policy(q_star);
    o.report["q_star"] = to_json(q_star);
    o.report["optimal_policy"] = to_json(w_star);
    expect(o, w_star == Policy{1, 1, 0}, "optimal policy differs from (a2,a2,a1)");

    const Policy overflow{0, 1, 0};
    const RobustRegionReport rr = robust_region(cfg.mdp, cfg.true_cost, overflow);
    o.report["robust_region"] = {{"target_policy", to_json(overflow)}, {"distance", rr.distance}, {"radius", rr.radius}};
    expect(o, std::fabs(rr.distance - 17.66) <= 0.02, "distance to target policy region is not 17.66");
    expect(o, std::fabs(rr.radius - 3.532) <= 0.005, "robust radius is not 3.532");

    const CostMatrix base = presets::reservoir_derivative_base_cost();
    const Policy w_base = greedy_policy(fixed_point(cfg.mdp, base));
    const Matrix h = *cfg.derivative.perturbation;
    const Matrix gh = frechet_apply(cfg.mdp, w_base, h);
    const QMatrix q_base = fixed_point(cfg.mdp, base);
    const QMatrix q_pert = fixed_point(cfg.mdp, CostMatrix(base + h));
    const double fo_err = max_norm_diff(q_pert, q_base + gh);
    o.report["derivative"] = {{"base_cost", to_json(base)}, {"policy", to_json(w_base)}, {"h", to_json(h)},
                              {"gh", to_json(gh)}, {"q_base", to_json(q_base)}, {"q_perturbed", to_json(q_pert)},
                              {"first_order_error", fo_err}};
    expect(o, fo_err <= 1e-6, "f(c+h) != f(c) + Gh on the derivative example");

    const double xi = ov.xi.value_or(cfg.attack.xi);
    const Policy target = *cfg.attack.target;
    const AttackCertificate cert = synthesize_from_anchor(cfg.mdp, *cfg.attack.anchor, target, xi);
    o.report["certificate"] = to_json(cert);
    expect(o, cert.verified, "anchor certificate does not reach the target policy");

    const CostMatrix reference{{3.0, 10.86}, {-1.34, 2.0}, {0.34, 1.0}};
    o.report["reference_falsification"] = {{"cost", to_json(reference)},
                                         {"q", to_json(fixed_point(cfg.mdp, reference))},
                                         {"conditions_hold", check_target_conditions(cfg.mdp, reference, target)}};

    json partial = json::array();
    for (const std::set<std::size_t>& states : {std::set<std::size_t>{0, 1}, std::set<std::size_t>{0}}) {
        const PartitionMatrices pm = partition_matrices(cfg.mdp, target, states);
        json entry{{"partition", partition_json(pm)}, {"gordan", gordan_json(gordan_feasible(pm.h))}};
        try {
            const AttackCertificate pc = partial_attack(cfg.mdp, cfg.true_cost, target, states, xi);
            entry["certificate"] = to_json(pc);
            expect(o, pc.verified, "partial-state certificate not verified");
        } catch (const Infeasible& e) {
            entry["reason"] = e.what();
            expect(o, false, e.what());
        }
        partial.push_back(std::move(entry));
    }
    o.report["partial_attacks"] = std::move(partial);

    const auto lip = lipschitz_sweep(cfg.mdp, cfg.true_cost, cfg.lipschitz.runs, ov.seed.value_or(cfg.lipschitz.seed));
    const bool lip_ok = std::all_of(lip.begin(), lip.end(), [](const LipschitzRow& r) { return r.holds; });
    o.report["lipschitz_sweep"] = {{"runs", lip.size()}, {"all_hold", lip_ok}};
    expect(o, lip_ok, "Lipschitz bound violated");
    return o;
}

} // namespace

// ---------------------------------------------------------------------------

ScenarioConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError("line " + std::to_string(line_of(text, e.byte ? e.byte - 1 : 0)), e.what());
    }
    if (!doc.is_object() || doc.empty()) throw ConfigError("", "configuration is empty");

    ValidatedMdp mdp = parse_mdp(require(doc, "mdp", ""));
    CostMatrix cost = as_cost(require(doc, "true_cost", ""), mdp, "true_cost");
    ScenarioConfig cfg(std::move(mdp), std::move(cost));

    if (const json* a = optional_field(doc, "attack")) {
        const std::string p = "attack";
        AttackBlock& b = cfg.attack;
        if (const json* k = optional_field(*a, "kind"))
            b.kind = as_enum<AttackBlock::Kind>(*k, join(p, "kind"),
                                                {{"none", AttackBlock::Kind::None},
                                                 {"stealthy", AttackBlock::Kind::Stealthy},
                                                 {"anchor", AttackBlock::Kind::Anchor},
                                                 {"min-cost", AttackBlock::Kind::MinCost},
                                                 {"partial", AttackBlock::Kind::Partial}});
        if (const json* t = optional_field(*a, "target_policy")) b.target = as_policy(*t, cfg.mdp, join(p, "target_policy"));
        if (const json* s = optional_field(*a, "falsifiable_states"))
            b.falsifiable = as_state_set(*s, cfg.mdp, join(p, "falsifiable_states"));
        if (const json* x = optional_field(*a, "xi")) {
            b.xi = as_number(*x, join(p, "xi"));
            if (!(b.xi > 0.0)) throw ConfigError(join(p, "xi"), "margin must be positive");
        }
        if (const json* v = optional_field(*a, "anchor")) {
            b.anchor = as_vector(*v, join(p, "anchor"));
            if (b.anchor->size() != cfg.mdp.num_states())
                throw ConfigError(join(p, "anchor"), "expected one entry per state");
        }
        if (const json* c = optional_field(*a, "falsified_cost"))
            b.falsified_cost = as_cost(*c, cfg.mdp, join(p, "falsified_cost"));
        if (const json* n = optional_field(*a, "norm"))
            b.norm = as_enum<AttackNorm>(*n, join(p, "norm"), {{"max", AttackNorm::Max}, {"frobenius", AttackNorm::Frobenius}});
        if (const json* i = optional_field(*a, "info"))
            b.info = as_enum<InfoStructure>(*i, join(p, "info"),
                                            {{"omniscient", InfoStructure::Omniscient},
                                             {"peer", InfoStructure::Peer},
                                             {"ignorant", InfoStructure::Ignorant},
                                             {"blind", InfoStructure::Blind}});
    }

    if (const json* s = optional_field(doc, "simulation")) {
        const std::string p = "simulation";
        SimulationBlock& b = cfg.simulation;
        if (const json* v = optional_field(*s, "iterations")) {
            b.iterations = as_count(*v, join(p, "iterations"));
            if (b.iterations == 0) throw ConfigError(join(p, "iterations"), "must be at least 1");
        }
        if (const json* v = optional_field(*s, "seeds")) {
            if (!v->is_array() || v->empty()) throw ConfigError(join(p, "seeds"), "expected a nonempty array");
            b.seeds.clear();
            for (std::size_t k = 0; k < v->size(); ++k)
                b.seeds.push_back(as_count((*v)[k], join(p, "seeds") + "[" + std::to_string(k) + "]"));
        }
        if (const json* v = optional_field(*s, "mode"))
            b.mode = as_enum<SimMode>(*v, join(p, "mode"),
                                      {{"synchronous", SimMode::Synchronous}, {"trajectory", SimMode::Trajectory}});
        if (const json* v = optional_field(*s, "schedule")) {
            if (const json* e = optional_field(*v, "exponent")) {
                b.schedule.exponent = as_number(*e, "simulation.schedule.exponent");
                if (!(b.schedule.exponent > 0.5 && b.schedule.exponent <= 1.0))
                    throw ConfigError("simulation.schedule.exponent", "must lie in (0.5, 1]");
            }
        }
        if (const json* v = optional_field(*s, "snapshot_stride")) b.snapshot_stride = as_count(*v, join(p, "snapshot_stride"));
        if (const json* v = optional_field(*s, "epsilon")) {
            b.epsilon = as_number(*v, join(p, "epsilon"));
            if (b.epsilon < 0.0 || b.epsilon > 1.0) throw ConfigError(join(p, "epsilon"), "must lie in [0, 1]");
        }
        if (const json* v = optional_field(*s, "record_limit")) b.record_limit = as_count(*v, join(p, "record_limit"));
    }

    if (const json* c = optional_field(doc, "attack_cost")) {
        const std::string p = "attack_cost";
        const std::string kind = as_string(require(*c, "kind", p), join(p, "kind"));
        if (kind == "discounted") {
            auto metric = AttackCostModel::Metric::Discrete;
            if (const json* m = optional_field(*c, "metric"))
                metric = as_enum<AttackCostModel::Metric>(*m, join(p, "metric"),
                                                          {{"absolute", AttackCostModel::Metric::Absolute},
                                                           {"discrete", AttackCostModel::Metric::Discrete}});
            const double alpha = as_number(require(*c, "alpha", p), join(p, "alpha"));
            if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError(join(p, "alpha"), "must lie in (0, 1)");
            cfg.attack_cost = AttackCostModel::discounted(metric, alpha);
        } else if (kind == "count_pairs") {
            cfg.attack_cost = AttackCostModel::count_pairs();
        } else if (kind == "subset") {
            cfg.attack_cost = AttackCostModel::subset(as_state_set(require(*c, "states", p), cfg.mdp, join(p, "states")));
        } else {
            throw ConfigError(join(p, "kind"), "unknown value '" + kind + "' (expected discounted, count_pairs, subset)");
        }
    }

    if (const json* d = optional_field(doc, "derivative")) {
        const std::string p = "derivative";
        if (const json* v = optional_field(*d, "policy")) cfg.derivative.policy = as_policy(*v, cfg.mdp, join(p, "policy"));
        if (const json* v = optional_field(*d, "perturbation"))
            cfg.derivative.perturbation = as_cost(*v, cfg.mdp, join(p, "perturbation"));
        if (const json* v = optional_field(*d, "base_cost")) cfg.derivative.base_cost = as_cost(*v, cfg.mdp, join(p, "base_cost"));
    }

    if (const json* s = optional_field(doc, "sweep")) {
        const std::string p = "sweep";
        SweepBlock& b = cfg.sweep;
        if (const json* v = optional_field(*s, "state")) b.state = as_index(*v, cfg.mdp.num_states(), join(p, "state"), "state");
        if (const json* v = optional_field(*s, "action")) b.action = as_index(*v, cfg.mdp.num_actions(), join(p, "action"), "action");
        if (const json* v = optional_field(*s, "from")) b.from = as_number(*v, join(p, "from"));
        if (const json* v = optional_field(*s, "to")) b.to = as_number(*v, join(p, "to"));
        if (const json* v = optional_field(*s, "points")) {
            b.points = as_count(*v, join(p, "points"));
            if (b.points < 2) throw ConfigError(join(p, "points"), "must be at least 2");
        }
        if (const json* v = optional_field(*s, "base_cost")) b.base_cost = as_cost(*v, cfg.mdp, join(p, "base_cost"));
    }

    if (const json* l = optional_field(doc, "lipschitz")) {
        const std::string p = "lipschitz";
        if (const json* v = optional_field(*l, "runs")) cfg.lipschitz.runs = as_count(*v, join(p, "runs"));
        if (const json* v = optional_field(*l, "seed")) cfg.lipschitz.seed = as_count(*v, join(p, "seed"));
        if (const json* v = optional_field(*l, "max_scale")) {
            const std::uint64_t k = as_count(*v, join(p, "max_scale"));
            if (k < 1 || k > 1000000) throw ConfigError(join(p, "max_scale"), "must be in 1..1000000");
            cfg.lipschitz.max_scale = static_cast<int>(k);
        }
    }

    if (const json* o = optional_field(doc, "output")) {
        if (const json* v = optional_field(*o, "format")) {
            cfg.output.format = as_string(*v, "output.format");
            if (*cfg.output.format != "json" && *cfg.output.format != "csv")
                throw ConfigError("output.format", "expected json or csv");
        }
        if (const json* v = optional_field(*o, "path")) cfg.output.path = as_string(*v, "output.path");
    }
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

ScenarioConfig reservoir_scenario() {
    ScenarioConfig cfg(presets::reservoir_mdp(), presets::reservoir_cost());
    cfg.attack.kind = AttackBlock::Kind::Anchor;
    cfg.attack.target = Policy{0, 1, 1};
    cfg.attack.falsifiable = {0, 1};
    cfg.attack.xi = 1.0;
    cfg.attack.anchor = Vector{3.0, 2.0, 1.0};
    cfg.simulation.seeds = {1, 2, 3, 4, 5};
    cfg.simulation.snapshot_stride = 10000;
    cfg.derivative.policy = Policy{1, 1, 0};
    cfg.derivative.perturbation = Matrix{{0.6, -0.2}, {1.0, 2.0}, {0.4, 0.7}};
    cfg.derivative.base_cost = presets::reservoir_derivative_base_cost();
    cfg.sweep.base_cost = presets::reservoir_derivative_base_cost();
    return cfg;
}

const std::vector<Command>& all_commands() {
    static const std::vector<Command> cmds{Command::Solve,          Command::Simulate,       Command::RobustRegion,
                                           Command::Derivative,     Command::Synthesize,     Command::MinCostAttack,
                                           Command::PartialAttack,  Command::LipschitzSweep, Command::PiecewiseSweep,
                                           Command::ReproduceReservoir};
    return cmds;
}

std::string_view command_name(Command command) {
    switch (command) {
    case Command::Solve: return "solve";
    case Command::Simulate: return "simulate";
    case Command::RobustRegion: return "robust-region";
    case Command::Derivative: return "derivative";
    case Command::Synthesize: return "synthesize";
    case Command::MinCostAttack: return "min-cost-attack";
    case Command::PartialAttack: return "partial-attack";
    case Command::LipschitzSweep: return "lipschitz-sweep";
    case Command::PiecewiseSweep: return "piecewise-sweep";
    case Command::ReproduceReservoir: return "reproduce-reservoir";
    }
    return "";
}

std::optional<Command> parse_command(std::string_view name) {
    for (Command c : all_commands())
        if (command_name(c) == name) return c;
    return std::nullopt;
}

ScenarioOutput run_scenario(Command command, const ScenarioConfig& config, const RunOverrides& overrides) {
    ScenarioOutput out;
    const bool sweep = command == Command::LipschitzSweep || command == Command::PiecewiseSweep;
    out.format = overrides.format.value_or(config.output.format.value_or(sweep ? "csv" : "json"));
    if (out.format != "json" && out.format != "csv") throw ConfigError("format", "expected json or csv");

    Outcome o;
    try {
        switch (command) {
        case Command::Solve: o = cmd_solve(config); break;
        case Command::Simulate: o = cmd_simulate(config, overrides); break;
        case Command::RobustRegion: o = cmd_robust_region(config); break;
        case Command::Derivative: o = cmd_derivative(config); break;
        case Command::Synthesize: o = cmd_synthesize(config, overrides); break;
        case Command::MinCostAttack: o = cmd_min_cost(config, overrides); break;
        case Command::PartialAttack: o = cmd_partial(config, overrides); break;
        case Command::LipschitzSweep: o = cmd_lipschitz(config, overrides); break;
        case Command::PiecewiseSweep: o = cmd_piecewise(config); break;
        case Command::ReproduceReservoir: o = cmd_reproduce(overrides); break;
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        out.exit_code = kExitSolver;
        out.failures.push_back(e.what());
        json err{{"command", command_name(command)}, {"error", e.what()}};
        out.body = out.format == "json" ? err.dump(2) + "\n" : "quantity,state,action,value\nerror,,," + std::string(e.what()) + "\n";
        return out;
    }

    o.report["command"] = command_name(command);
    o.report["verified"] = o.failures.empty();
    if (!o.failures.empty()) o.report["failures"] = o.failures;
    if (out.format == "json") {
        out.body = o.report.dump(2) + "\n";
    } else if (o.table) {
        out.body = render_csv(*o.table);
    } else {
        Table t{{"quantity", "state", "action", "value"}, {}};
        flatten(o.report, "", t);
        out.body = render_csv(t);
    }
    out.failures = std::move(o.failures);
    out.exit_code = out.failures.empty() ? kExitOk : kExitVerification;
    return out;
}

int run_and_emit(Command command, const ScenarioConfig& config, const RunOverrides& overrides,
                 std::ostream& out, std::ostream& err) {
    ScenarioOutput result;
    try {
        result = run_scenario(command, config, overrides);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    const std::string path = overrides.out.value_or(config.output.path);
    if (path.empty() || path == "-") {
        out << result.body;
    } else {
        std::ofstream file(path, std::ios::binary);
        if (!file || !(file << result.body)) {
            err << "io error: cannot write " << path << '\n';
            return kExitConfig;
        }
    }
    for (const std::string& f : result.failures) err << "verification failed: " << f << '\n';
    return result.exit_code;
}

} // namespace qfal
