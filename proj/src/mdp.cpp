#include "qfal/mdp.hpp"

#include "qfal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qfal {

ValidatedMdp validate_mdp(Mdp mdp) {
    const std::size_t s = mdp.num_states();
    if (mdp.num_actions() == 0) throw RangeError("MDP needs at least one action");
    if (s == 0) throw RangeError("MDP needs at least one state");
    if (!(mdp.discount > 0.0 && mdp.discount < 1.0))
        throw RangeError("discount must lie strictly inside (0,1), got " +
                         std::to_string(mdp.discount));

    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        const Matrix& p = mdp.transitions[a];
        if (p.rows() != s || p.cols() != s)
            throw ShapeMismatch("transition matrix for action " + std::to_string(a + 1) +
                                " is not " + std::to_string(s) + "x" + std::to_string(s));
        for (std::size_t i = 0; i < s; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < s; ++j) {
                const double x = p(i, j);
                if (!std::isfinite(x) || x < 0.0 || x > 1.0)
                    throw RangeError("p(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                     ",a" + std::to_string(a + 1) + ") = " + std::to_string(x) +
                                     " is not a probability");
                sum += x;
            }
            if (std::fabs(sum - 1.0) > kRowSumTolerance)
                throw RowSumError("row " + std::to_string(i + 1) + " of action " +
                                  std::to_string(a + 1) + " sums to " + std::to_string(sum));
        }
    }
    return ValidatedMdp(std::move(mdp));
}

void check_cost(const ValidatedMdp& mdp, const Matrix& cost) {
    if (cost.rows() != mdp.num_states() || cost.cols() != mdp.num_actions())
        throw ShapeMismatch("cost matrix must be " + std::to_string(mdp.num_states()) + "x" +
                            std::to_string(mdp.num_actions()));
    for (double x : cost.flat())
        if (!std::isfinite(x)) throw RangeError("cost entries must be finite");
}

void check_policy(const ValidatedMdp& mdp, const Policy& w) {
    if (w.size() != mdp.num_states())
        throw ShapeMismatch("policy length " + std::to_string(w.size()) + " != " +
                            std::to_string(mdp.num_states()) + " states");
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i] >= mdp.num_actions())
            throw RangeError("policy action at state " + std::to_string(i + 1) + " out of range");
}

Matrix policy_transition(const ValidatedMdp& mdp, const Policy& w) {
    check_policy(mdp, w);
    const std::size_t s = mdp.num_states();
    Matrix pw(s, s);
    for (std::size_t i = 0; i < s; ++i) {
        const auto src = mdp.row(i, w[i]);
        std::copy(src.begin(), src.end(), pw.row(i).begin());
    }
    return pw;
}

Vector policy_column(const Matrix& m, const Policy& w) {
    if (w.size() != m.rows()) throw ShapeMismatch("policy length does not match matrix rows");
    Vector v(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        if (w[i] >= m.cols()) throw RangeError("policy action out of range");
        v[i] = m(i, w[i]);
    }
    return v;
}

Policy greedy_policy(const Matrix& q, TieRule tie) {
    std::vector<std::size_t> actions(q.rows(), 0);
    for (std::size_t i = 0; i < q.rows(); ++i) {
        const auto row = q.row(i);
        std::size_t best = 0;
        for (std::size_t a = 1; a < row.size(); ++a) {
            const bool better = tie == TieRule::LowestIndex ? row[a] < row[best] : row[a] <= row[best];
            if (better) best = a;
        }
        actions[i] = best;
    }
    return Policy(std::move(actions));
}

Vector state_values(const Matrix& q) {
    Vector v(q.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        const auto row = q.row(i);
        double m = row[0];
        for (double x : row.subspan(1)) m = x < m ? x : m;
        v[i] = m;
    }
    return v;
}

double policy_margin(const Matrix& q, const Policy& w) {
    if (w.size() != q.rows()) throw ShapeMismatch("policy length does not match Q rows");
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < q.rows(); ++i) {
        if (w[i] >= q.cols()) throw RangeError("policy action out of range");
        const double target = q(i, w[i]);
        for (std::size_t a = 0; a < q.cols(); ++a)
            if (a != w[i]) margin = std::min(margin, q(i, a) - target);
    }
    return margin;
}

bool in_policy_region(const Matrix& q, const Policy& w) {
    if (w.size() != q.rows()) return false;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        if (w[i] >= q.cols()) return false;
        const double target = q(i, w[i]);
        for (std::size_t a = 0; a < q.cols(); ++a)
            if (a != w[i] && !(target < q(i, a))) return false;
    }
    return true;
}

} // namespace qfal
