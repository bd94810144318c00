// Acceptance checks for the reservoir case study and the property suites.
// Prints one PASS/FAIL line per criterion. Exit status is 0 iff the set of
// failing criteria equals the set given with --expect-fail (empty by default).

#include "support.hpp"

#include "qfal/attack.hpp"
#include "qfal/exact_solver.hpp"
#include "qfal/experiments.hpp"
#include "qfal/q_learning.hpp"
#include "qfal/sensitivity.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

using namespace qfal;
using testing::Rng;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

const Policy kTarget{0, 1, 1};

Verdict criterion1() {
    const auto t0 = Clock::now();
    const QMatrix q = fixed_point(presets::reservoir_mdp(), presets::reservoir_cost());
    const double t = seconds_since(t0);
    const double err = max_norm_diff(q, Matrix{{8.71, -26.61}, {-15.48, -27.19}, {-19.12, -15.30}});
    const bool policy = greedy_policy(q) == Policy{1, 1, 0};
    return {err <= 0.05 && policy && t < 1.0,
            "Q* error " + fmt("%.4f", err) + " (tol 0.05), policy (a2,a2,a1) " + (policy ? "yes" : "no") + ", " +
                fmt("%.4f", t) + " s"};
}

Verdict criterion2() {
    const RobustRegionReport r = robust_region(presets::reservoir_mdp(), presets::reservoir_cost(), Policy{0, 1, 0});
    const bool ok = std::fabs(r.distance - 17.66) <= 0.02 && std::fabs(r.radius - 3.532) <= 0.005;
    return {ok, "D = " + fmt("%.4f", r.distance) + " (17.66 +- 0.02), radius = " + fmt("%.4f", r.radius) +
                    " (3.532 +- 0.005)"};
}

Verdict criterion3() {
    const ValidatedMdp mdp = presets::reservoir_mdp();
    const Matrix h{{0.6, -0.2}, {1.0, 2.0}, {0.4, 0.7}};
    const Matrix gh = frechet_apply(mdp, Policy{1, 1, 0}, h);
    const double gh_err = max_norm_diff(gh, Matrix{{3.74, 3.92}, {4.70, 5.68}, {4.39, 4.21}});
    const CostMatrix base = presets::reservoir_derivative_base_cost();
    const double fo = max_norm_diff(fixed_point(mdp, CostMatrix(base + h)), fixed_point(mdp, base) + gh);
    return {gh_err <= 0.01 && fo <= 1e-6,
            "Gh error " + fmt("%.4f", gh_err) + " (tol 0.01), |f(c+h) - f(c) - Gh| = " + fmt("%.2e", fo) + " (tol 1e-6)"};
}

Verdict criterion4() {
    const ValidatedMdp mdp = presets::reservoir_mdp();
    const AttackCertificate cert = synthesize_from_anchor(mdp, Vector{3, 2, 1}, kTarget, 1.0);
    const Matrix expected_c{{3, 10.86}, {-1.34, 2}, {0.34, 1}};
    const Matrix expected_q{{15, 18.46}, {8.15, 7.14}, {5.99, 5}};
    const double c_err = max_norm_diff(cert.falsified_cost, expected_c);
    const double q_err = max_norm_diff(cert.q, expected_q);
    const bool policy = greedy_policy(cert.q) == kTarget;
    std::ostringstream os;
    os << "c~ error " << fmt("%.4f", c_err) << " (tol 0.01), Q~* error " << fmt("%.4f", q_err)
       << " (tol 0.05), policy (a1,a2,a2) " << (policy ? "yes" : "no") << "; c~(1,a2) = "
       << fmt("%.4f", cert.falsified_cost(0, 1)) << " vs 10.86, Q~*(1,a2) = " << fmt("%.4f", cert.q(0, 1))
       << " vs 18.46";
    return {c_err <= 0.01 && q_err <= 0.05 && policy && cert.verified, os.str()};
}

Verdict criterion5() {
    const auto t0 = Clock::now();
    const ValidatedMdp mdp = presets::reservoir_mdp();
    const PartitionMatrices pm = partition_matrices(mdp, kTarget, {0, 1});
    const bool h_ok = pm.h.rows() == 1 && pm.h.cols() == 2 && std::fabs(pm.h(0, 0) + 0.5905) <= 5e-4 &&
                      std::fabs(pm.h(0, 1) + 0.4762) <= 5e-4;
    Rng rng(2024);
    int verified = 0, total = 0;
    for (const std::set<std::size_t>& fal : {std::set<std::size_t>{0, 1}, std::set<std::size_t>{0}}) {
        for (int t = 0; t < 20; ++t) {
            CostMatrix c = presets::reservoir_cost();
            c(2, 0) = rng.uniform(-100, 100);
            c(2, 1) = rng.uniform(-100, 100);
            if (!fal.contains(1)) {
                c(1, 0) = rng.uniform(-100, 100);
                c(1, 1) = rng.uniform(-100, 100);
            }
            ++total;
            try {
                const AttackCertificate cert = partial_attack(mdp, c, kTarget, fal, 1.0);
                bool untouched = true;
                for (std::size_t i = 0; i < 3; ++i)
                    if (!fal.contains(i))
                        for (std::size_t a = 0; a < 2; ++a) untouched &= cert.falsified_cost(i, a) == c(i, a);
                verified += cert.verified && untouched &&
                            testing::strict_greedy_is(testing::brute_force_q_star(mdp, cert.falsified_cost), kTarget);
            } catch (const Infeasible&) {
            }
        }
    }
    const double t = seconds_since(t0);
    return {h_ok && verified == total && t < 5.0,
            "H = [" + fmt("%.4f", pm.h(0, 0)) + ", " + fmt("%.4f", pm.h(0, 1)) + "], verified " +
                std::to_string(verified) + "/" + std::to_string(total) + ", " + fmt("%.3f", t) + " s"};
}

Verdict criterion6() {
    const auto rows = lipschitz_sweep(presets::reservoir_mdp(), presets::reservoir_cost(), 100, 1);
    std::size_t holds = 0;
    double worst = 0.0;
    for (const LipschitzRow& r : rows) {
        holds += r.dq_norm <= r.dc_norm / 0.2 + 1e-9;
        worst = std::max(worst, r.dq_norm / r.bound);
    }
    return {holds == 100 && rows.size() == 100,
            std::to_string(holds) + "/100 satisfy the bound, worst ratio " + fmt("%.4f", worst)};
}

Verdict criterion7() {
    const auto t0 = Clock::now();
    const ValidatedMdp mdp = presets::reservoir_mdp();
    const CostMatrix certificate{{3.0, 10.86}, {-1.34, 2.0}, {0.34, 1.0}};
    const QMatrix reference = fixed_point(mdp, certificate);
    SimOptions o;
    o.iterations = 200000;
    const auto traces =
        run_q_learning_batch(mdp, presets::reservoir_cost(), AttackChannel::stealthy(certificate), o, {1, 2, 3, 4, 5});
    std::vector<double> errors;
    bool policies = true;
    for (const SimTrace& tr : traces) {
        errors.push_back(max_norm_diff(tr.final_q, reference));
        policies &= greedy_policy(tr.final_q) == kTarget;
    }
    std::sort(errors.begin(), errors.end());
    const double t = seconds_since(t0);
    return {errors[2] < 1.0 && policies && t < 30.0,
            "median error " + fmt("%.4f", errors[2]) + " (< 1.0), policy w+ on all seeds " + (policies ? "yes" : "no") +
                ", " + fmt("%.2f", t) + " s"};
}

Verdict criterion8() {
    Rng rng(8);
    std::ostringstream os;
    bool ok = true;

    int contraction = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t s = 2 + rng.index(5), a = 1 + rng.index(3);
        const ValidatedMdp mdp = testing::random_mdp(rng, s, a, rng.uniform(0.1, 0.99));
        const CostMatrix c = testing::random_cost(rng, s, a);
        const Matrix q1 = testing::random_matrix(rng, s, a, -50, 50), q2 = testing::random_matrix(rng, s, a, -50, 50);
        contraction += max_norm_diff(bellman_apply(mdp, c, q1), bellman_apply(mdp, c, q2)) <=
                       mdp.discount() * max_norm_diff(q1, q2) + 1e-12;
    }
    ok &= contraction == 100;
    os << "contraction " << contraction << "/100";

    int iff = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t s = 2 + rng.index(3), a = 2 + rng.index(2);
        const ValidatedMdp mdp = testing::random_mdp(rng, s, a, rng.uniform(0.1, 0.9));
        const Policy w = testing::random_policy(rng, s, a);
        CostMatrix ct = testing::random_cost(rng, s, a, -3, 3);
        if (t % 2 == 0)
            for (std::size_t i = 0; i < s; ++i) ct(i, w[i]) -= rng.uniform(0, 6);
        iff += check_target_conditions(mdp, ct, w) ==
               testing::strict_greedy_is(testing::brute_force_q_star(mdp, ct), w);
    }
    ok &= iff == 200;
    os << ", conditions iff " << iff << "/200";

    int gordan = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = 1 + rng.index(5), n = 1 + rng.index(3);
        Matrix h = testing::random_matrix(rng, m, n, -1, 1);
        if (t % 3 == 0 && m >= 2)
            for (std::size_t c = 0; c < n; ++c) h(m - 1, c) = -h(0, c) * rng.uniform(0.5, 2.0);
        const GordanResult g = gordan_feasible(h);
        bool valid = true;
        if (const auto* d = std::get_if<GordanDirection>(&g)) {
            valid = d->depth > 0.0;
            for (double v : matvec(h, d->x)) valid &= v <= -d->depth + 1e-9;
        } else {
            const Vector& y = std::get<GordanCertificate>(g).y;
            double sum = 0.0;
            for (double v : y) {
                valid &= v >= -1e-12;
                sum += v;
            }
            valid &= std::fabs(sum - 1.0) <= 1e-9 && max_norm(matvec(h.transposed(), y)) <= 1e-9;
        }
        gordan += valid;
    }
    ok &= gordan == 100;
    os << ", Gordan " << gordan << "/100";

    int lp_match = 0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = 2 + rng.index(2), m = 2 + rng.index(4);
        LinearProgram lp(n);
        Vector x0(n);
        for (std::size_t j = 0; j < n; ++j) {
            x0[j] = rng.uniform(-2, 2);
            lp.set_free(j);
            lp.objective[j] = rng.uniform(-1, 1);
            Vector e(n, 0.0);
            e[j] = 1.0;
            lp.add(e, Relation::LessEqual, 5.0);
            lp.add(e, Relation::GreaterEqual, -5.0);
        }
        for (std::size_t r = 0; r < m; ++r) {
            Vector row(n);
            double at = 0.0;
            for (std::size_t j = 0; j < n; ++j) at += (row[j] = rng.uniform(-1, 1)) * x0[j];
            lp.add(row, r == 0 ? Relation::Equal : Relation::LessEqual, at + (r == 0 ? 0.0 : rng.uniform(0, 1)));
        }
        const LpResult res = solve_lp(lp);
        const testing::VertexResult oracle = testing::vertex_enumeration(lp);
        lp_match += res.status == LpStatus::Optimal && oracle.feasible && std::fabs(res.value - oracle.value) <= 1e-6;
    }
    ok &= lp_match == 20;
    os << ", LP vs vertices " << lp_match << "/20";

    const ValidatedMdp mdp = presets::reservoir_mdp();
    const CostMatrix base = presets::reservoir_derivative_base_cost();
    const std::vector<double> grid = linspace(-20, 40, 121);
    int kinks = 0, stray = 0, changes = 0, silent = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t a = 0; a < 2; ++a) {
            const auto rows = piecewise_sweep(mdp, base, i, a, grid);
            std::vector<bool> kink(rows.size(), false);
            for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
                const Matrix d2 = rows[k + 1].q - 2.0 * rows[k].q + rows[k - 1].q;
                kink[k] = max_norm(d2) > 1e-6;
                kinks += kink[k];
                const bool same = rows[k - 1].policy == rows[k].policy && rows[k].policy == rows[k + 1].policy;
                stray += kink[k] && same;
            }
            for (std::size_t k = 1; k < rows.size(); ++k) {
                if (!rows[k].policy_changed) continue;
                ++changes;
                Matrix unit(3, 2);
                unit(i, a) = 1.0;
                const bool slope_changes = max_norm_diff(frechet_apply(mdp, rows[k].policy, unit),
                                                         frechet_apply(mdp, rows[k - 1].policy, unit)) > 1e-9;
                const bool seen = kink[k - 1] || (k < kink.size() && kink[k]);
                silent += slope_changes && !seen;
            }
        }
    }
    ok &= stray == 0 && silent == 0 && changes > 0;
    os << ", piecewise sweeps: " << changes << " policy changes, " << kinks << " kinks, " << stray
       << " kinks without a policy change, " << silent << " policy changes without a kink";
    return {ok, os.str()};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance checks"};
    std::vector<int> expect_fail;
    app.add_option("--expect-fail", expect_fail, "Criteria known to fail (documented deviations)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
        {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};
    std::set<int> failed;
    for (const auto& [id, check] : criteria) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) failed.insert(id);
        std::printf("criterion %d: %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
    }
    const std::set<int> expected(expect_fail.begin(), expect_fail.end());
    std::printf("%zu/%zu criteria pass\n", criteria.size() - failed.size(), criteria.size());
    if (!expected.empty() && failed == expected) std::printf("failures match the documented deviations\n");
    return failed == expected ? 0 : 1;
}
