#include "support.hpp"

#include "qfal/errors.hpp"
#include "qfal/exact_solver.hpp"

#include <doctest.h>

using namespace qfal;
using testing::Rng;

TEST_CASE("reservoir fixed point") {
    const ValidatedMdp mdp = presets::reservoir_mdp();
    const FixedPointReport r = solve_q_fixed_point(mdp, presets::reservoir_cost());
    const QMatrix expected{{8.71, -26.61}, {-15.48, -27.19}, {-19.12, -15.30}};
    CHECK(max_norm_diff(r.q, expected) < 0.01);
    CHECK(r.residual <= kDefaultFixedPointTol);
    CHECK(greedy_policy(r.q) == Policy{1, 1, 0});
    CHECK(testing::max_diff(testing::brute_force_q_star(mdp, presets::reservoir_cost()), r.q) < 1e-9);
}

TEST_CASE("fixed point matches policy enumeration on random models") {
    Rng rng(21);
    for (int t = 0; t < 40; ++t) {
        const std::size_t s = 1 + rng.index(6), a = 1 + rng.index(3);
        const double beta = rng.uniform(0.05, 0.95);
        const ValidatedMdp mdp = testing::random_mdp(rng, s, a, beta, t % 2 == 0);
        const CostMatrix c = testing::random_cost(rng, s, a);
        const QMatrix q = fixed_point(mdp, c);
        CHECK(testing::max_diff(testing::brute_force_q_star(mdp, c), q) < 1e-8);
    }
}

TEST_CASE("trivial fixed points") {
    const ValidatedMdp mdp = presets::reservoir_mdp();
    CHECK(max_norm(fixed_point(mdp, CostMatrix(3, 2))) == 0.0);
    const ValidatedMdp one = validate_mdp(Mdp{{Matrix{{1.0}}}, 0.75});
    CHECK(fixed_point(one, CostMatrix{{2.0}})(0, 0) == doctest::Approx(8.0).epsilon(1e-9));
}

TEST_CASE("policy_q_values") {
    const ValidatedMdp mdp = presets::reservoir_mdp();
    const Vector v = policy_q_values(mdp, presets::reservoir_cost(), Policy{1, 1, 0});
    const QMatrix q = fixed_point(mdp, presets::reservoir_cost());
    CHECK(v[0] == doctest::Approx(-26.61).epsilon(1e-3));
    CHECK(v[1] == doctest::Approx(-27.19).epsilon(1e-3));
    CHECK(v[2] == doctest::Approx(-19.12).epsilon(1e-3));
    CHECK(max_norm_diff(v, Vector{q(0, 1), q(1, 1), q(2, 0)}) < 1e-9);
    CHECK(max_norm(policy_q_values(mdp, CostMatrix(3, 2), Policy{0, 0, 0})) == 0.0);

    const ValidatedMdp id = validate_mdp(Mdp{{Matrix::identity(3)}, 0.5});
    CHECK(max_norm_diff(policy_q_values(id, CostMatrix(3, 1, 1.0), Policy{0, 0, 0}), Vector{2, 2, 2}) < 1e-12);

    const QMatrix full = q_from_policy_values(mdp, presets::reservoir_cost(), Policy{1, 1, 0});
    CHECK(max_norm_diff(full, q) < 1e-9);
}

TEST_CASE("linear_solve") {
    const Vector b{1.5, -2.0, 4.0};
    CHECK(linear_solve(Matrix::identity(3), b) == b);
    const ValidatedMdp mdp = presets::reservoir_mdp();
    const Policy w{1, 1, 0};
    const Matrix a = Matrix::identity(3) - 0.8 * policy_transition(mdp, w);
    const Vector x = linear_solve(a, policy_column(presets::reservoir_cost(), w));
    CHECK(max_norm_diff(x, policy_q_values(mdp, presets::reservoir_cost(), w)) < 1e-12);
    CHECK_THROWS_AS(linear_solve(Matrix{{1, 1}, {1, 1}}, Vector{1, 2}), SingularMatrix);
    CHECK_THROWS_AS(linear_solve(Matrix{{1, 1}, {1, 1}}, Vector{1}), ShapeMismatch);
    const Matrix m{{2, 1}, {1, 3}};
    CHECK(max_norm_diff(matmul(m, inverse(m)), Matrix::identity(2)) < 1e-12);
}

TEST_CASE("iteration cap") {
    CHECK(default_max_iterations(0.8, 1e-10, 30.0) >= 104);
    const ValidatedMdp mdp = presets::reservoir_mdp();
    CHECK_THROWS_AS(solve_q_fixed_point(mdp, presets::reservoir_cost(), 1e-10, 5), NoConvergence);
}

TEST_CASE("Bellman operator properties") {
    Rng rng(22);
    for (int t = 0; t < 100; ++t) {
        const std::size_t s = 2 + rng.index(5), a = 1 + rng.index(3);
        const double beta = rng.uniform(0.1, 0.99);
        const ValidatedMdp mdp = testing::random_mdp(rng, s, a, beta);
        const CostMatrix c = testing::random_cost(rng, s, a);
        const CostMatrix ct = testing::random_cost(rng, s, a);
        const Matrix q1 = testing::random_matrix(rng, s, a, -50, 50);
        const Matrix q2 = testing::random_matrix(rng, s, a, -50, 50);

        // contraction in the max norm
        const double lhs = max_norm_diff(bellman_apply(mdp, ct, q1), bellman_apply(mdp, ct, q2));
        CHECK(lhs <= beta * max_norm_diff(q1, q2) + 1e-12);

        // the operator is affine in the cost
        const Matrix diff = bellman_apply(mdp, ct, q1) - bellman_apply(mdp, c, q1);
        CHECK(max_norm_diff(diff, ct - c) < 1e-12);

        // cost -> fixed point -> cost round trip
        const FixedPointReport r = solve_q_fixed_point(mdp, c);
        CHECK(r.residual <= kDefaultFixedPointTol);
        CHECK(max_norm_diff(cost_from_q(mdp, r.q), c) < 1e-8);
    }
}
