#pragma once

#include "qfal/matrix.hpp"

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace qfal {

/// S x A matrix of one-step costs c(i,a), true or falsified.
class CostMatrix : public Matrix {
public:
    using Matrix::Matrix;
    CostMatrix() = default;
    explicit CostMatrix(Matrix m) : Matrix(std::move(m)) {}
};

/// S x A matrix of Q-factors.
class QMatrix : public Matrix {
public:
    using Matrix::Matrix;
    QMatrix() = default;
    explicit QMatrix(Matrix m) : Matrix(std::move(m)) {}
};

/// Deterministic stationary policy, 0-based action per state.
class Policy {
public:
    Policy() = default;
    explicit Policy(std::vector<std::size_t> actions) : actions_(std::move(actions)) {}
    Policy(std::initializer_list<std::size_t> actions) : actions_(actions) {}

    std::size_t size() const noexcept { return actions_.size(); }
    std::size_t operator[](std::size_t state) const noexcept { return actions_[state]; }
    const std::vector<std::size_t>& actions() const noexcept { return actions_; }

    friend bool operator==(const Policy&, const Policy&) = default;

private:
    std::vector<std::size_t> actions_;
};

/// Finite MDP: one S x S transition matrix per action plus a discount factor.
/// Unchecked; pass through validate_mdp before use.
struct Mdp {
    std::vector<Matrix> transitions;
    double discount = 0.0;

    std::size_t num_states() const noexcept {
        return transitions.empty() ? 0 : transitions.front().rows();
    }
    std::size_t num_actions() const noexcept { return transitions.size(); }
};

/// An Mdp whose invariants have been checked. Only validate_mdp constructs one.
class ValidatedMdp {
public:
    std::size_t num_states() const noexcept { return mdp_.num_states(); }
    std::size_t num_actions() const noexcept { return mdp_.num_actions(); }
    double discount() const noexcept { return mdp_.discount; }

    /// P_a
    const Matrix& transition(std::size_t action) const noexcept { return mdp_.transitions[action]; }
    /// P_ia, the distribution over next states from state i under action a.
    std::span<const double> row(std::size_t state, std::size_t action) const noexcept {
        return mdp_.transitions[action].row(state);
    }
    double p(std::size_t i, std::size_t j, std::size_t a) const noexcept {
        return mdp_.transitions[a](i, j);
    }

    const Mdp& raw() const noexcept { return mdp_; }

private:
    friend ValidatedMdp validate_mdp(Mdp mdp);
    explicit ValidatedMdp(Mdp mdp) : mdp_(std::move(mdp)) {}
    Mdp mdp_;
};

inline constexpr double kRowSumTolerance = 1e-12;

/// Checks shapes, probability ranges, row sums (within 1e-12) and 0 < beta < 1.
/// Throws ShapeMismatch, RangeError or RowSumError.
ValidatedMdp validate_mdp(Mdp mdp);

/// Throws ShapeMismatch/RangeError if the cost is not S x A or has non-finite entries.
void check_cost(const ValidatedMdp& mdp, const Matrix& cost);
/// Throws ShapeMismatch/RangeError if the policy length or any action is out of range.
void check_policy(const ValidatedMdp& mdp, const Policy& w);

/// P_w: row i is P_{i,w(i)}.
Matrix policy_transition(const ValidatedMdp& mdp, const Policy& w);

/// c_w: entry i is c(i, w(i)).
Vector policy_column(const Matrix& m, const Policy& w);

enum class TieRule { LowestIndex, HighestIndex };

/// Row-wise argmin of Q.
Policy greedy_policy(const Matrix& q, TieRule tie = TieRule::LowestIndex);

/// V(i) = min_a Q(i,a).
Vector state_values(const Matrix& q);

/// True iff Q(i,w(i)) < Q(i,a) for every state i and every a != w(i), compared exactly.
bool in_policy_region(const Matrix& q, const Policy& w);

/// min over i and a != w(i) of Q(i,a) - Q(i,w(i)); positive iff in_policy_region.
/// +infinity when there is a single action.
double policy_margin(const Matrix& q, const Policy& w);

} // namespace qfal
