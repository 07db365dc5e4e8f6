#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "pbcs/error.hpp"

namespace pbcs {

/**
 * Dense square matrix stored row-major.
 *
 * Every matrix in the toolchain (system data, transition matrices,
 * conjugated arc generators, brackets, inverses) is square, so the type
 * carries a single dimension.
 */
template <class T>
class basic_matrix {
public:
    using value_type = T;

    basic_matrix() = default;

    explicit basic_matrix(std::size_t n, T fill = T{0}) : n_(n), data_(n * n, fill) {}

    basic_matrix(std::initializer_list<std::initializer_list<T>> rows) : n_(rows.size()) {
        data_.reserve(n_ * n_);
        for (const auto& row : rows) {
            if (row.size() != n_) {
                throw dimension_error("matrix rows must all have length " + std::to_string(n_));
            }
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static basic_matrix identity(std::size_t n) {
        basic_matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    static basic_matrix diagonal(std::span<const T> d) {
        basic_matrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    /// Rank-one matrix x y'.
    static basic_matrix outer(std::span<const T> x, std::span<const T> y) {
        if (x.size() != y.size()) throw dimension_error("outer: length mismatch");
        basic_matrix m(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * y[j];
        return m;
    }

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] bool empty() const noexcept { return n_ == 0; }

    T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }

    [[nodiscard]] std::span<T> row(std::size_t i) noexcept { return {data_.data() + i * n_, n_}; }
    [[nodiscard]] std::span<const T> row(std::size_t i) const noexcept {
        return {data_.data() + i * n_, n_};
    }

    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
    [[nodiscard]] std::span<T> data() noexcept { return data_; }

    [[nodiscard]] basic_matrix transpose() const {
        basic_matrix t(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    basic_matrix& operator+=(const basic_matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }

    basic_matrix& operator-=(const basic_matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }

    basic_matrix& operator*=(T s) noexcept {
        for (auto& x : data_) x *= s;
        return *this;
    }

    friend basic_matrix operator+(basic_matrix a, const basic_matrix& b) { return a += b; }
    friend basic_matrix operator-(basic_matrix a, const basic_matrix& b) { return a -= b; }
    friend basic_matrix operator*(basic_matrix a, T s) { return a *= s; }
    friend basic_matrix operator*(T s, basic_matrix a) { return a *= s; }
    friend basic_matrix operator-(basic_matrix a) { return a *= T{-1}; }

    friend basic_matrix operator*(const basic_matrix& a, const basic_matrix& b) {
        a.check_same(b);
        const std::size_t n = a.n_;
        basic_matrix c(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) {
                const T aik = a(i, k);
                if (aik == T{0}) continue;
                for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
            }
        }
        return c;
    }

    friend std::vector<T> operator*(const basic_matrix& a, std::span<const T> x) {
        if (x.size() != a.n_) throw dimension_error("matrix-vector: length mismatch");
        std::vector<T> y(a.n_, T{0});
        for (std::size_t i = 0; i < a.n_; ++i) {
            T acc{0};
            for (std::size_t j = 0; j < a.n_; ++j) acc += a(i, j) * x[j];
            y[i] = acc;
        }
        return y;
    }

    friend std::vector<T> operator*(const basic_matrix& a, const std::vector<T>& x) {
        return a * std::span<const T>(x);
    }

    friend bool operator==(const basic_matrix&, const basic_matrix&) = default;

private:
    void check_same(const basic_matrix& o) const {
        if (o.n_ != n_) {
            throw dimension_error("dimension mismatch: " + std::to_string(n_) + " vs " +
                                  std::to_string(o.n_));
        }
    }

    std::size_t n_ = 0;
    std::vector<T> data_;
};

using Matrix = basic_matrix<double>;
using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Vector helpers

template <class T>
[[nodiscard]] T dot(std::span<const T> x, std::span<const T> y) {
    if (x.size() != y.size()) throw dimension_error("dot: length mismatch");
    T acc{0};
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

[[nodiscard]] inline double dot(const Vector& x, const Vector& y) {
    return dot<double>(std::span<const double>(x), std::span<const double>(y));
}

[[nodiscard]] inline double norm2(std::span<const double> x) {
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::abs(v));
    if (scale == 0.0) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += (v / scale) * (v / scale);
    return scale * std::sqrt(acc);
}

[[nodiscard]] inline double norm_inf(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
}

[[nodiscard]] inline Vector axpy(double a, const Vector& x, Vector y) {
    if (x.size() != y.size()) throw dimension_error("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
    return y;
}

[[nodiscard]] inline Vector scaled(Vector x, double s) {
    for (auto& v : x) v *= s;
    return x;
}

/// Sine of the angle between two nonzero vectors, computed from the
/// orthogonal residual so that nearly-collinear inputs stay accurate.
[[nodiscard]] inline double angle_sine(const Vector& x, const Vector& y) {
    const double nx = norm2(x);
    const double ny = norm2(y);
    if (nx == 0.0 || ny == 0.0) return 0.0;
    const Vector yh = scaled(y, 1.0 / ny);
    const Vector r = axpy(-dot(x, yh), yh, x);
    return std::min(1.0, norm2(r) / nx);
}

/// y' M, returned as a column vector.
[[nodiscard]] inline Vector left_multiply(std::span<const double> y, const Matrix& m) {
    if (y.size() != m.size()) throw dimension_error("left_multiply: length mismatch");
    Vector r(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (y[i] == 0.0) continue;
        for (std::size_t j = 0; j < m.size(); ++j) r[j] += y[i] * m(i, j);
    }
    return r;
}

/// Bilinear form x' M y.
[[nodiscard]] inline double bilinear(const Vector& x, const Matrix& m, const Vector& y) {
    return dot(x, m * y);
}

// ---------------------------------------------------------------------------
// Matrix norms and predicates

template <class T>
[[nodiscard]] T norm_frobenius(const basic_matrix<T>& m) {
    T scale{0};
    for (T v : m.data()) scale = std::max(scale, std::abs(v));
    if (scale == T{0}) return T{0};
    T acc{0};
    for (T v : m.data()) acc += (v / scale) * (v / scale);
    return scale * std::sqrt(acc);
}

/// Induced 1-norm (maximum absolute column sum).
template <class T>
[[nodiscard]] T norm_1(const basic_matrix<T>& m) {
    T best{0};
    for (std::size_t j = 0; j < m.size(); ++j) {
        T col{0};
        for (std::size_t i = 0; i < m.size(); ++i) col += std::abs(m(i, j));
        best = std::max(best, col);
    }
    return best;
}

template <class T>
[[nodiscard]] T max_abs(const basic_matrix<T>& m) {
    T best{0};
    for (T v : m.data()) best = std::max(best, std::abs(v));
    return best;
}

template <class T>
[[nodiscard]] bool all_finite(const basic_matrix<T>& m) {
    return std::all_of(m.data().begin(), m.data().end(), [](T v) { return std::isfinite(v); });
}

template <class T>
[[nodiscard]] T min_entry(const basic_matrix<T>& m) {
    T best = m.empty() ? T{0} : m.data()[0];
    for (T v : m.data()) best = std::min(best, v);
    return best;
}

/// True iff every off-diagonal entry is at least -tol.
template <class T>
[[nodiscard]] bool is_metzler(const basic_matrix<T>& m, T tol = T{0}) {
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if (i != j && m(i, j) < -tol) return false;
    return true;
}

template <class T>
[[nodiscard]] bool is_symmetric(const basic_matrix<T>& m, T tol = T{0}) {
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol) return false;
    return true;
}

/**
 * Lie bracket in the ordering used throughout this library:
 * lie_bracket(P, Q) = Q P - P Q.
 *
 * Note this is the negative of the usual commutator PQ - QP. Every formula
 * built on brackets (the singular test value, the second-order form) is
 * written against this ordering.
 */
template <class T>
[[nodiscard]] basic_matrix<T> lie_bracket(const basic_matrix<T>& p, const basic_matrix<T>& q) {
    if (p.size() != q.size()) throw dimension_error("lie_bracket: dimension mismatch");
    return q * p - p * q;
}

}  // namespace pbcs
