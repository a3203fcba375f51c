#include "idl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace idl {

namespace {
// below this many fused multiply-adds the parallel ramp-up costs more than it saves
constexpr std::size_t kParallelFlopThreshold = 1u << 16;

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}
}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw std::invalid_argument("Matrix: data length != rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double x) { return std::isfinite(x); });
}

Matrix ref::matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix out(a.rows(), b.cols());
    const std::size_t flops = a.rows() * a.cols() * b.cols();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (flops > kParallelFlopThreshold)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(a.rows()); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            // identical accumulation order to ref::matmul, so results match bitwise
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += a(static_cast<std::size_t>(i), k) * b(k, j);
            out(static_cast<std::size_t>(i), j) = acc;
        }
    (void)flops;
    return out;
}

Vector matvec(const Matrix& a, std::span<const double> v) {
    if (a.cols() != v.size())
        throw std::invalid_argument("matvec: dimension mismatch");
    Vector out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        const double* r = a.data() + i * a.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) acc += r[k] * v[k];
        out[i] = acc;
    }
    return out;
}

Vector matvec_transposed(const Matrix& a, std::span<const double> v) {
    if (a.rows() != v.size())
        throw std::invalid_argument("matvec_transposed: dimension mismatch");
    Vector out(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.data() + i * a.cols();
        const double vi = v[i];
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += r[j] * vi;
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "add");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "sub");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= s;
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "hadamard");
    Matrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
    return out;
}

void add_outer(Matrix& out, std::span<const double> u, std::span<const double> v,
               double s) {
    if (out.rows() != u.size() || out.cols() != v.size())
        throw std::invalid_argument("add_outer: dimension mismatch");
    for (std::size_t i = 0; i < u.size(); ++i) {
        double* r = out.data() + i * out.cols();
        const double su = s * u[i];
        for (std::size_t j = 0; j < v.size(); ++j) r[j] += su * v[j];
    }
}

Matrix outer(std::span<const double> u, std::span<const double> v) {
    Matrix out(u.size(), v.size());
    add_outer(out, u, v, 1.0);
    return out;
}

Vector vec_add(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("vec_add: size mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Vector vec_sub(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("vec_sub: size mismatch");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

void axpy(Vector& y, double alpha, std::span<const double> x) {
    if (y.size() != x.size()) throw std::invalid_argument("axpy: size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double inf_operator_norm(const Matrix& m) {
    double best = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (double x : m.row(i)) s += std::abs(x);
        best = std::max(best, s);
    }
    return best;
}

Matrix project_inf_ball(const Matrix& m, double bound) {
    if (bound <= 0.0) throw std::invalid_argument("project_inf_ball: bound must be > 0");
    Matrix out = m;
    // tolerance keeps the projection exactly idempotent: a freshly rescaled
    // row sums to bound within a few ulps and must not be rescaled again
    const double threshold = bound * (1.0 + 1e-12);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double s = 0.0;
        for (double x : out.row(i)) s += std::abs(x);
        if (s > threshold) {
            const double f = bound / s;
            for (double& x : out.row(i)) x *= f;
        }
    }
    return out;
}

}  // namespace idl
