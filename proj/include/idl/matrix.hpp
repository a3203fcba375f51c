#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace idl {

/// Dense row-major matrix of doubles. All public operations reject NaN/Inf
/// escapes and dimension mismatches by throwing std::invalid_argument /
/// std::runtime_error.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    bool operator==(const Matrix& other) const = default;

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using Vector = std::vector<double>;

// Linear algebra. matmul/matvec use OpenMP for large operands; element
// values are identical to the serial reference (same inner-loop order).
Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, std::span<const double> v);
// w = A^T v without forming the transpose.
Vector matvec_transposed(const Matrix& a, std::span<const double> v);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
// rank-1 update: out += s * u v^T
void add_outer(Matrix& out, std::span<const double> u, std::span<const double> v,
               double s = 1.0);
Matrix outer(std::span<const double> u, std::span<const double> v);

Vector vec_add(std::span<const double> a, std::span<const double> b);
Vector vec_sub(std::span<const double> a, std::span<const double> b);
void axpy(Vector& y, double alpha, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double inf_norm(std::span<const double> v);

/// max over rows of the sum of absolute entries (operator infinity norm)
double inf_operator_norm(const Matrix& m);

/// Rescales every row whose absolute sum exceeds `bound` uniformly onto the
/// ball boundary; rows already inside are untouched, zero entries stay
/// exactly zero. bound must be > 0.
Matrix project_inf_ball(const Matrix& m, double bound);

namespace ref {
/// Serial reference matmul, kept for testing and benchmarking the OpenMP path.
Matrix matmul(const Matrix& a, const Matrix& b);
}  // namespace ref

}  // namespace idl
