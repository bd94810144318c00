#include "qfal/matrix.hpp"

#include "qfal/errors.hpp"
#include "qfal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace qfal {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeMismatch("ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    Matrix m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols)
            throw ShapeMismatch("row " + std::to_string(r) + " has " +
                                std::to_string(rows[r].size()) + " entries, expected " +
                                std::to_string(cols));
        std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
    }
    return m;
}

Vector Matrix::column(std::size_t c) const {
    Vector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix& Matrix::operator+=(const Matrix& other) {
    if (!same_shape(other)) throw ShapeMismatch("matrix addition shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
    if (!same_shape(other)) throw ShapeMismatch("matrix subtraction shape mismatch");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
}

Matrix& Matrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw ShapeMismatch("matmul inner dimensions differ");
    const Matrix bt = b.transposed();
    Matrix out(a.rows(), b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < b.cols(); ++c) out(r, c) = kernels::dot(a.row(r), bt.row(c));
    return out;
}

Vector matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw ShapeMismatch("matvec dimension mismatch");
    Vector out(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) out[r] = kernels::dot(a.row(r), x);
    return out;
}

double max_norm(const Matrix& m) { return kernels::max_abs(m.flat()); }

double max_norm(std::span<const double> v) { return kernels::max_abs(v); }

double max_norm_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("max_norm_diff shape mismatch");
    return kernels::max_abs_diff(a.flat(), b.flat());
}

double max_norm_diff(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeMismatch("max_norm_diff length mismatch");
    return kernels::max_abs_diff(a, b);
}

double row_sum_norm(const Matrix& m) {
    double best = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        for (double x : m.row(r)) s += std::fabs(x);
        best = std::max(best, s);
    }
    return best;
}

Vector linear_solve(const Matrix& a, std::span<const double> b) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw ShapeMismatch("linear_solve needs a square matrix");
    if (b.size() != n) throw ShapeMismatch("linear_solve right-hand side length mismatch");

    Matrix lu = a;
    Vector x(b.begin(), b.end());
    const double threshold = 1e-12 * row_sum_norm(a);

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::fabs(lu(r, k)) > std::fabs(lu(piv, k))) piv = r;
        if (!(std::fabs(lu(piv, k)) > threshold))
            throw SingularMatrix("pivot " + std::to_string(k) + " below threshold");
        if (piv != k) {
            std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(piv).begin());
            std::swap(x[k], x[piv]);
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = lu(r, k) / lu(k, k);
            if (f == 0.0) continue;
            for (std::size_t c = k; c < n; ++c) lu(r, c) -= f * lu(k, c);
            x[r] -= f * x[k];
        }
    }
    for (std::size_t k = n; k-- > 0;) {
        double s = x[k];
        for (std::size_t c = k + 1; c < n; ++c) s -= lu(k, c) * x[c];
        x[k] = s / lu(k, k);
    }
    return x;
}

Matrix inverse(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix inv(n, n);
    Vector e(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        e[c] = 1.0;
        const Vector col = linear_solve(a, e);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
        e[c] = 0.0;
    }
    return inv;
}

} // namespace qfal
