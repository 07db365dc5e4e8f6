#pragma once

#include <cmath>
#include <complex>
#include <string>

#include "pbcs/error.hpp"
#include "pbcs/linalg.hpp"
#include "pbcs/matrix.hpp"

namespace pbcs {

/// The dominant eigenvalue counts as simple when gap > simplicity_ratio * rho.
inline constexpr double simplicity_ratio = 1e-8;

/**
 * Perron root of a nonnegative matrix with its right and left eigenvectors.
 *
 * Normalization: v has unit 2-norm and its largest-magnitude entry is
 * positive; w is scaled so that w'v = 1. `gap` is rho minus the largest
 * modulus among the remaining eigenvalues.
 */
struct PerronPair {
    double rho = 0.0;
    Vector v;
    Vector w;
    double gap = 0.0;

    [[nodiscard]] bool simple() const noexcept { return gap > simplicity_ratio * rho; }
};

struct PerronResiduals {
    double right = 0.0;      ///< |Cv - rho v| / (|C| |v|)
    double left = 0.0;       ///< |C'w - rho w| / (|C| |w|)
    double normalization = 0.0;  ///< |w'v - 1|
};

[[nodiscard]] inline PerronResiduals perron_residuals(const Matrix& c, const PerronPair& pp) {
    const double nc = norm_frobenius(c);
    const Vector cv = c * pp.v;
    const Vector ctw = left_multiply(pp.w, c);
    PerronResiduals r;
    const double nv = norm2(pp.v), nw = norm2(pp.w);
    r.right = nc * nv > 0.0 ? norm2(axpy(-pp.rho, pp.v, cv)) / (nc * nv) : 0.0;
    r.left = nc * nw > 0.0 ? norm2(axpy(-pp.rho, pp.w, ctw)) / (nc * nw) : 0.0;
    r.normalization = std::abs(dot(pp.w, pp.v) - 1.0);
    return r;
}

/// Largest eigenvalue modulus.
[[nodiscard]] inline double spectral_radius(const Matrix& c) {
    double best = 0.0;
    for (const auto& z : eigenvalues(c)) best = std::max(best, std::abs(z));
    return best;
}

namespace detail {

// Shifted inverse iteration towards the eigenvector of m for eigenvalue
// near `shift` (m is C for right vectors, C' for left ones).
inline Vector inverse_iteration(const Matrix& m, double shift, int steps) {
    const std::size_t n = m.size();
    Matrix shifted = m;
    for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= shift;
    const auto f = lu_factor(shifted);
    Vector x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    for (int s = 0; s < steps; ++s) {
        x = lu_solve<double>(f, x);
        const double nx = norm2(x);
        if (!(nx > 0.0) || !std::isfinite(nx)) {
            throw non_convergence_error("perron_pair: inverse iteration broke down");
        }
        x = scaled(std::move(x), 1.0 / nx);
    }
    return x;
}

inline void fix_sign(Vector& x) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs(x[i]) > std::abs(x[arg])) arg = i;
    if (!x.empty() && x[arg] < 0.0)
        for (auto& e : x) e = -e;
}

}  // namespace detail

/**
 * Dominant (Perron) eigenpair of an entrywise nonnegative matrix.
 *
 * The spectrum comes from Hessenberg QR, which also yields the gap to the
 * second eigenvalue modulus; the eigenvectors come from shifted inverse
 * iteration, and rho is then polished with the two-sided Rayleigh quotient.
 * A non-simple root is reported through `gap`, not as an error.
 *
 * Throws non_convergence_error when the residuals exceed `tol`.
 */
[[nodiscard]] inline PerronPair perron_pair(const Matrix& c, double tol = 1e-10) {
    const std::size_t n = c.size();
    if (n == 0) throw dimension_error("perron_pair: empty matrix");
    if (!all_finite(c)) throw dimension_error("perron_pair: non-finite entries");
    const double scale = max_abs(c);
    if (min_entry(c) < -tol * std::max(scale, 1.0)) {
        throw error("perron_pair: matrix has negative entries beyond tolerance");
    }

    const auto spectrum = eigenvalues(c);
    double max_modulus = 0.0;
    for (const auto& z : spectrum) max_modulus = std::max(max_modulus, std::abs(z));

    std::size_t root = spectrum.size();
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (spectrum[i].imag() != 0.0) continue;
        if (root == spectrum.size() || spectrum[i].real() > spectrum[root].real()) root = i;
    }
    if (root == spectrum.size() || !(spectrum[root].real() > 0.0) ||
        spectrum[root].real() < max_modulus * (1.0 - 1e-6)) {
        throw non_convergence_error("perron_pair: no real positive dominant eigenvalue");
    }
    double rho = spectrum[root].real();
    double second = 0.0;
    for (std::size_t i = 0; i < spectrum.size(); ++i)
        if (i != root) second = std::max(second, std::abs(spectrum[i]));

    PerronPair pp;
    pp.gap = std::max(0.0, rho - second);

    const double delta = 1e-10 * std::max(rho, scale);
    const Matrix ct = c.transpose();
    Vector v = detail::inverse_iteration(c, rho + delta, 4);
    Vector w = detail::inverse_iteration(ct, rho + delta, 4);
    detail::fix_sign(v);

    const double wv = dot(w, v);
    if (std::abs(wv) <= 1e-12 * norm2(w) * norm2(v)) {
        throw not_simple_error("perron_pair: left and right eigenvectors are orthogonal");
    }
    w = scaled(std::move(w), 1.0 / wv);
    rho = dot(w, c * v);

    pp.rho = rho;
    pp.v = std::move(v);
    pp.w = std::move(w);
    pp.gap = std::max(0.0, rho - second);

    const auto res = perron_residuals(c, pp);
    if (res.right > tol || res.left > tol || res.normalization > tol) {
        throw non_convergence_error("perron_pair: residual tolerance unmet (right " +
                                    std::to_string(res.right) + ", left " +
                                    std::to_string(res.left) + ")");
    }
    return pp;
}

/**
 * Group inverse of a matrix D with simple zero eigenvalue, given right and
 * left null vectors normalized by w'v = 1:  D# = (D + v w')^{-1} - v w'.
 */
[[nodiscard]] inline Matrix group_inverse(const Matrix& d, const Vector& v, const Vector& w) {
    if (v.size() != d.size() || w.size() != d.size()) {
        throw dimension_error("group_inverse: vector length does not match matrix");
    }
    const Matrix vw = Matrix::outer(v, w);
    Matrix bordered = d + vw;
    const auto f = lu_factor(bordered);
    if (f.smallest_pivot <= 1e-13 * max_abs(bordered)) {
        throw singular_matrix_error(
            "group_inverse: D + v w' is numerically singular; v, w are not a simple null pair");
    }
    return inverse(bordered) - vw;
}

}  // namespace pbcs
