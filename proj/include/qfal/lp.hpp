#pragma once

#include "qfal/matrix.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace qfal {

enum class Relation { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
    Vector coefficients;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

/// minimize objective^T x subject to the constraints and lower <= x <= upper.
/// Bounds may be infinite; a new program starts with every variable in [0, +inf).
struct LinearProgram {
    Vector objective;
    std::vector<LinearConstraint> constraints;
    Vector lower;
    Vector upper;

    LinearProgram() = default;
    explicit LinearProgram(std::size_t num_vars)
        : objective(num_vars, 0.0), lower(num_vars, 0.0),
          upper(num_vars, std::numeric_limits<double>::infinity()) {}

    std::size_t num_vars() const noexcept { return objective.size(); }

    void set_free(std::size_t j) {
        lower[j] = -std::numeric_limits<double>::infinity();
        upper[j] = std::numeric_limits<double>::infinity();
    }
    void set_bounds(std::size_t j, double lo, double hi) {
        lower[j] = lo;
        upper[j] = hi;
    }
    void add(Vector coefficients, Relation relation, double rhs) {
        constraints.push_back({std::move(coefficients), relation, rhs});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vector x;          ///< set when Optimal
    double value = 0.0;
    std::size_t pivots = 0;
};

inline constexpr double kDefaultLpTol = 1e-9;

/// Dense two-phase primal simplex with Bland's rule.
/// Throws ShapeMismatch/RangeError for malformed programs and IterationLimit
/// when `max_pivots` is exhausted.
LpResult solve_lp(const LinearProgram& lp, double tol = kDefaultLpTol,
                  std::size_t max_pivots = 100000);

/// Largest violation of any constraint or bound at x (0 when feasible).
double lp_violation(const LinearProgram& lp, const Vector& x);

} // namespace qfal
