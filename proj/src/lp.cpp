#include "qfal/lp.hpp"

#include "qfal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qfal {

namespace {

// How an original variable is expressed through nonnegative tableau columns.
enum class VarMap { Shift, Reflect, Split };

struct StandardForm {
    std::vector<VarMap> map;
    std::vector<std::size_t> column; // first tableau column of each original variable
    std::size_t num_structural = 0;
};

constexpr double kPivotTol = 1e-11;

class Tableau {
public:
    Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * (cols + 1), 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return at(r, cols_); }
    double rhs(std::size_t r) const { return at(r, cols_); }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    void pivot(std::size_t pr, std::size_t pc, Vector& reduced, double& objective) {
        const double p = at(pr, pc);
        for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
        for (std::size_t r = 0; r < rows_; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        const double f = reduced[pc];
        if (f != 0.0) {
            for (std::size_t c = 0; c < cols_; ++c) reduced[c] -= f * at(pr, c);
            objective -= f * rhs(pr);
            reduced[pc] = 0.0;
        }
    }

    void drop_row(std::size_t r) {
        data_.erase(data_.begin() + static_cast<std::ptrdiff_t>(r * (cols_ + 1)),
                    data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * (cols_ + 1)));
        --rows_;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    Vector data_;
};

enum class PhaseResult { Optimal, Unbounded };

// Minimizes cost^T z over the tableau; `allowed` masks columns that may enter.
PhaseResult run_phase(Tableau& t, std::vector<std::size_t>& basis, const Vector& cost,
                      const std::vector<bool>& allowed, double tol, std::size_t& pivots,
                      std::size_t max_pivots) {
    Vector reduced = cost;
    double objective = 0.0;
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const double cb = cost[basis[r]];
        if (cb == 0.0) continue;
        for (std::size_t c = 0; c < t.cols(); ++c) reduced[c] -= cb * t.at(r, c);
        objective -= cb * t.rhs(r);
    }

    for (;;) {
        // Bland: lowest-index improving column.
        std::size_t enter = t.cols();
        for (std::size_t c = 0; c < t.cols(); ++c) {
            if (allowed[c] && reduced[c] < -tol) {
                enter = c;
                break;
            }
        }
        if (enter == t.cols()) return PhaseResult::Optimal;

        std::size_t leave = t.rows();
        double best = 0.0;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            const double a = t.at(r, enter);
            if (a <= kPivotTol) continue;
            const double ratio = std::max(t.rhs(r), 0.0) / a;
            if (leave == t.rows() || ratio < best - 1e-15 ||
                (ratio <= best + 1e-15 && basis[r] < basis[leave])) {
                leave = r;
                best = ratio;
            }
        }
        if (leave == t.rows()) return PhaseResult::Unbounded;

        if (++pivots > max_pivots)
            throw IterationLimit("simplex exceeded " + std::to_string(max_pivots) + " pivots");
        t.pivot(leave, enter, reduced, objective);
        basis[leave] = enter;
    }
}

void check_program(const LinearProgram& lp) {
    const std::size_t n = lp.num_vars();
    if (lp.lower.size() != n || lp.upper.size() != n)
        throw ShapeMismatch("LP bounds must have one entry per variable");
    for (double c : lp.objective)
        if (!std::isfinite(c)) throw RangeError("LP objective coefficients must be finite");
    for (std::size_t k = 0; k < lp.constraints.size(); ++k) {
        const auto& con = lp.constraints[k];
        if (con.coefficients.size() != n)
            throw ShapeMismatch("LP constraint " + std::to_string(k) + " has wrong length");
        for (double c : con.coefficients)
            if (!std::isfinite(c)) throw RangeError("LP constraint coefficients must be finite");
        if (!std::isfinite(con.rhs)) throw RangeError("LP right-hand sides must be finite");
    }
    for (std::size_t j = 0; j < n; ++j)
        if (std::isnan(lp.lower[j]) || std::isnan(lp.upper[j]) || lp.lower[j] == INFINITY ||
            lp.upper[j] == -INFINITY)
            throw RangeError("LP bound of variable " + std::to_string(j) + " is invalid");
}

} // namespace

double lp_violation(const LinearProgram& lp, const Vector& x) {
    double worst = 0.0;
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        worst = std::max(worst, lp.lower[j] - x[j]);
        worst = std::max(worst, x[j] - lp.upper[j]);
    }
    for (const auto& con : lp.constraints) {
        double lhs = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) lhs += con.coefficients[j] * x[j];
        switch (con.relation) {
        case Relation::LessEqual: worst = std::max(worst, lhs - con.rhs); break;
        case Relation::GreaterEqual: worst = std::max(worst, con.rhs - lhs); break;
        case Relation::Equal: worst = std::max(worst, std::fabs(lhs - con.rhs)); break;
        }
    }
    return worst;
}

LpResult solve_lp(const LinearProgram& lp, double tol, std::size_t max_pivots) {
    check_program(lp);
    const std::size_t n = lp.num_vars();
    LpResult result;

    for (std::size_t j = 0; j < n; ++j)
        if (lp.lower[j] > lp.upper[j]) return result; // Infeasible

    StandardForm sf;
    sf.map.resize(n);
    sf.column.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        sf.column[j] = sf.num_structural;
        if (std::isfinite(lp.lower[j])) {
            sf.map[j] = VarMap::Shift;
            sf.num_structural += 1;
        } else if (std::isfinite(lp.upper[j])) {
            sf.map[j] = VarMap::Reflect;
            sf.num_structural += 1;
        } else {
            sf.map[j] = VarMap::Split;
            sf.num_structural += 2;
        }
    }

    struct Row {
        Vector coef;
        Relation rel;
        double rhs;
    };
    std::vector<Row> rows;
    auto translate = [&](const Vector& coef, Relation rel, double rhs) {
        Row row{Vector(sf.num_structural, 0.0), rel, rhs};
        for (std::size_t j = 0; j < n; ++j) {
            const double a = coef[j];
            if (a == 0.0) continue;
            const std::size_t c = sf.column[j];
            switch (sf.map[j]) {
            case VarMap::Shift:
                row.coef[c] += a;
                row.rhs -= a * lp.lower[j];
                break;
            case VarMap::Reflect:
                row.coef[c] -= a;
                row.rhs -= a * lp.upper[j];
                break;
            case VarMap::Split:
                row.coef[c] += a;
                row.coef[c + 1] -= a;
                break;
            }
        }
        if (row.rhs < 0.0) {
            for (double& x : row.coef) x = -x;
            row.rhs = -row.rhs;
            if (row.rel == Relation::LessEqual) row.rel = Relation::GreaterEqual;
            else if (row.rel == Relation::GreaterEqual) row.rel = Relation::LessEqual;
        }
        rows.push_back(std::move(row));
    };
    for (const auto& con : lp.constraints) translate(con.coefficients, con.relation, con.rhs);
    for (std::size_t j = 0; j < n; ++j) {
        if (sf.map[j] == VarMap::Shift && std::isfinite(lp.upper[j])) {
            Vector e(n, 0.0);
            e[j] = 1.0;
            translate(e, Relation::LessEqual, lp.upper[j]);
        }
    }

    const std::size_t m = rows.size();
    std::size_t num_slack = 0;
    std::size_t num_art = 0;
    for (const Row& r : rows) {
        if (r.rel != Relation::Equal) ++num_slack;
        if (r.rel != Relation::LessEqual) ++num_art;
    }
    const std::size_t slack0 = sf.num_structural;
    const std::size_t art0 = slack0 + num_slack;
    const std::size_t cols = art0 + num_art;

    Tableau t(m, cols);
    std::vector<std::size_t> basis(m);
    std::size_t next_slack = slack0;
    std::size_t next_art = art0;
    double rhs_scale = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
        const Row& row = rows[r];
        for (std::size_t c = 0; c < sf.num_structural; ++c) t.at(r, c) = row.coef[c];
        t.rhs(r) = row.rhs;
        rhs_scale = std::max(rhs_scale, row.rhs);
        if (row.rel == Relation::LessEqual) {
            t.at(r, next_slack) = 1.0;
            basis[r] = next_slack++;
        } else {
            if (row.rel == Relation::GreaterEqual) t.at(r, next_slack++) = -1.0;
            t.at(r, next_art) = 1.0;
            basis[r] = next_art++;
        }
    }

    std::vector<bool> allowed(cols, true);
    if (num_art > 0) {
        Vector phase1(cols, 0.0);
        for (std::size_t c = art0; c < cols; ++c) phase1[c] = 1.0;
        run_phase(t, basis, phase1, allowed, tol, result.pivots, max_pivots);
        double infeasibility = 0.0;
        for (std::size_t r = 0; r < t.rows(); ++r)
            if (basis[r] >= art0) infeasibility += t.rhs(r);
        if (infeasibility > tol * rhs_scale) {
            result.status = LpStatus::Infeasible;
            return result;
        }
        // Pivot remaining zero-level artificials out; drop rows that are redundant.
        for (std::size_t r = 0; r < t.rows();) {
            if (basis[r] < art0) {
                ++r;
                continue;
            }
            std::size_t col = art0;
            for (std::size_t c = 0; c < art0; ++c) {
                if (std::fabs(t.at(r, c)) > 1e-9) {
                    col = c;
                    break;
                }
            }
            if (col == art0) {
                t.drop_row(r);
                basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(r));
                continue;
            }
            Vector dummy(cols, 0.0);
            double obj = 0.0;
            t.pivot(r, col, dummy, obj);
            basis[r] = col;
            ++result.pivots;
            ++r;
        }
        for (std::size_t c = art0; c < cols; ++c) allowed[c] = false;
    }

    Vector cost(cols, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t c = sf.column[j];
        switch (sf.map[j]) {
        case VarMap::Shift: cost[c] = lp.objective[j]; break;
        case VarMap::Reflect: cost[c] = -lp.objective[j]; break;
        case VarMap::Split:
            cost[c] = lp.objective[j];
            cost[c + 1] = -lp.objective[j];
            break;
        }
    }
    if (run_phase(t, basis, cost, allowed, tol, result.pivots, max_pivots) == PhaseResult::Unbounded) {
        result.status = LpStatus::Unbounded;
        return result;
    }

    Vector z(cols, 0.0);
    for (std::size_t r = 0; r < t.rows(); ++r) z[basis[r]] = std::max(t.rhs(r), 0.0);
    result.x.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t c = sf.column[j];
        switch (sf.map[j]) {
        case VarMap::Shift: result.x[j] = lp.lower[j] + z[c]; break;
        case VarMap::Reflect: result.x[j] = lp.upper[j] - z[c]; break;
        case VarMap::Split: result.x[j] = z[c] - z[c + 1]; break;
        }
    }
    result.value = 0.0;
    for (std::size_t j = 0; j < n; ++j) result.value += lp.objective[j] * result.x[j];
    result.status = LpStatus::Optimal;
    return result;
}

} // namespace qfal
