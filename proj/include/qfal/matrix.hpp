#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace qfal {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(const std::vector<Vector>& rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    Vector column(std::size_t c) const;

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    Matrix transposed() const;

    Matrix& operator+=(const Matrix& other);
    Matrix& operator-=(const Matrix& other);
    Matrix& operator*=(double s) noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vector data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> x);

/// Max-norm (largest absolute entry).
double max_norm(const Matrix& m);
double max_norm(std::span<const double> v);
/// Max-norm of a - b; shapes must agree.
double max_norm_diff(const Matrix& a, const Matrix& b);
double max_norm_diff(std::span<const double> a, std::span<const double> b);

/// Induced infinity norm (max absolute row sum).
double row_sum_norm(const Matrix& m);

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Throws SingularMatrix when a pivot falls below 1e-12 * row_sum_norm(A).
Vector linear_solve(const Matrix& a, std::span<const double> b);

/// Inverse via column-wise linear_solve.
Matrix inverse(const Matrix& a);

} // namespace qfal
