#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include "pbcs/error.hpp"
#include "pbcs/matrix.hpp"

namespace pbcs {

// ---------------------------------------------------------------------------
// LU with partial pivoting

template <class T>
struct lu_decomposition {
    basic_matrix<T> lu;
    std::vector<std::size_t> perm;
    T smallest_pivot{0};
};

/// Factor P M = L U. Throws singular_matrix_error when a pivot falls below
/// n * eps * max|M|.
template <class T>
[[nodiscard]] lu_decomposition<T> lu_factor(const basic_matrix<T>& m) {
    const std::size_t n = m.size();
    lu_decomposition<T> f{m, std::vector<std::size_t>(n), std::numeric_limits<T>::infinity()};
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;
    const T threshold = T(n) * std::numeric_limits<T>::epsilon() * max_abs(m);
    auto& a = f.lu;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
        if (std::abs(a(piv, k)) <= threshold) {
            throw singular_matrix_error("matrix is numerically singular (pivot " +
                                        std::to_string(static_cast<double>(a(piv, k))) +
                                        " at column " + std::to_string(k) + ")");
        }
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
        }
        f.smallest_pivot = std::min(f.smallest_pivot, std::abs(a(k, k)));
        for (std::size_t i = k + 1; i < n; ++i) {
            const T l = a(i, k) / a(k, k);
            a(i, k) = l;
            if (l == T{0}) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
        }
    }
    return f;
}

template <class T>
[[nodiscard]] std::vector<T> lu_solve(const lu_decomposition<T>& f, std::span<const T> b) {
    const std::size_t n = f.lu.size();
    if (b.size() != n) throw dimension_error("solve: right-hand side has wrong length");
    std::vector<T> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[f.perm[i]];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) x[i] -= f.lu(i, j) * x[j];
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= f.lu(ii, j) * x[j];
        x[ii] /= f.lu(ii, ii);
    }
    return x;
}

template <class T>
[[nodiscard]] std::vector<T> solve(const basic_matrix<T>& m, std::span<const T> b) {
    return lu_solve(lu_factor(m), b);
}

[[nodiscard]] inline Vector solve(const Matrix& m, const Vector& b) {
    return solve<double>(m, std::span<const double>(b));
}

template <class T>
[[nodiscard]] basic_matrix<T> inverse(const basic_matrix<T>& m) {
    const auto f = lu_factor(m);
    const std::size_t n = m.size();
    basic_matrix<T> inv(n);
    std::vector<T> e(n, T{0});
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = T{1};
        const auto col = lu_solve<T>(f, e);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = T{0};
    }
    return inv;
}

/// Solve M X = B column by column with one factorization.
template <class T>
[[nodiscard]] basic_matrix<T> solve_matrix(const basic_matrix<T>& m, const basic_matrix<T>& rhs) {
    const auto f = lu_factor(m);
    const std::size_t n = m.size();
    basic_matrix<T> x(n);
    std::vector<T> col(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = rhs(i, j);
        const auto s = lu_solve<T>(f, col);
        for (std::size_t i = 0; i < n; ++i) x(i, j) = s[i];
    }
    return x;
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with diagonal Pade approximants
// of degree 3, 5, 7, 9 or 13, chosen from the 1-norm.

namespace detail {

template <class T, std::size_t N>
basic_matrix<T> pade_odd_even(const basic_matrix<T>& a, const std::array<double, N>& b,
                              basic_matrix<T>& v) {
    const std::size_t n = a.size();
    const auto id = basic_matrix<T>::identity(n);
    const auto a2 = a * a;
    basic_matrix<T> pow = id;
    basic_matrix<T> u_inner(n);
    v = basic_matrix<T>(n);
    for (std::size_t k = 0; k + 1 < N; k += 2) {
        v += pow * T(b[k]);
        u_inner += pow * T(b[k + 1]);
        pow = pow * a2;
    }
    return a * u_inner;
}

}  // namespace detail

template <class T>
[[nodiscard]] basic_matrix<T> expm(const basic_matrix<T>& m) {
    if (!all_finite(m)) throw overflow_error("expm: input has non-finite entries");
    const std::size_t n = m.size();
    if (n == 0) return m;

    static constexpr std::array<double, 4> b3{120.0, 60.0, 12.0, 1.0};
    static constexpr std::array<double, 6> b5{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
    static constexpr std::array<double, 8> b7{17297280.0, 8648640.0, 1995840.0, 277200.0,
                                              25200.0,    1512.0,    56.0,      1.0};
    static constexpr std::array<double, 10> b9{17643225600.0, 8821612800.0, 2075673600.0,
                                               302702400.0,   30270240.0,   2162160.0,
                                               110880.0,      3960.0,       90.0,
                                               1.0};
    static constexpr std::array<double, 14> b13{
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};

    const T nrm = norm_1(m);
    const auto id = basic_matrix<T>::identity(n);
    basic_matrix<T> u, v;
    int squarings = 0;

    if (nrm <= T(1.495585217958292e-2)) {
        u = detail::pade_odd_even(m, b3, v);
    } else if (nrm <= T(2.539398330063230e-1)) {
        u = detail::pade_odd_even(m, b5, v);
    } else if (nrm <= T(9.504178996162932e-1)) {
        u = detail::pade_odd_even(m, b7, v);
    } else if (nrm <= T(2.097847961257068)) {
        u = detail::pade_odd_even(m, b9, v);
    } else {
        const T theta13 = T(5.371920351148152);
        basic_matrix<T> a = m;
        if (nrm > theta13) {
            squarings = static_cast<int>(std::ceil(std::log2(static_cast<double>(nrm / theta13))));
            a *= std::ldexp(T{1}, -squarings);
        }
        const auto a2 = a * a;
        const auto a4 = a2 * a2;
        const auto a6 = a4 * a2;
        auto c = [&](int k) { return T(b13[static_cast<std::size_t>(k)]); };
        u = a * (a6 * (a6 * c(13) + a4 * c(11) + a2 * c(9)) + a6 * c(7) + a4 * c(5) + a2 * c(3) +
                 id * c(1));
        v = a6 * (a6 * c(12) + a4 * c(10) + a2 * c(8)) + a6 * c(6) + a4 * c(4) + a2 * c(2) +
            id * c(0);
    }

    auto r = solve_matrix(v - u, v + u);
    for (int s = 0; s < squarings; ++s) r = r * r;
    if (!all_finite(r)) throw overflow_error("expm: result overflows the representable range");
    return r;
}

// ---------------------------------------------------------------------------
// Nonsymmetric eigenvalues: balancing, reduction to Hessenberg form by
// stabilized elementary similarity transforms, then shifted Hessenberg QR.

namespace detail {

// Works on a 1-based (n+1)x(n+1) scratch array; row/column 0 unused.
class hessenberg_qr {
public:
    explicit hessenberg_qr(const Matrix& m) : n_(static_cast<int>(m.size())), a_(m.size() + 1) {
        for (int i = 1; i <= n_; ++i)
            for (int j = 1; j <= n_; ++j) a_(i, j) = m(i - 1, j - 1);
    }

    std::vector<std::complex<double>> eigenvalues() {
        balance();
        reduce();
        return iterate();
    }

private:
    void balance() {
        constexpr double radix = 2.0;
        constexpr double sqrdx = radix * radix;
        bool done = false;
        while (!done) {
            done = true;
            for (int i = 1; i <= n_; ++i) {
                double r = 0.0, c = 0.0;
                for (int j = 1; j <= n_; ++j) {
                    if (j == i) continue;
                    c += std::abs(a_(j, i));
                    r += std::abs(a_(i, j));
                }
                if (c == 0.0 || r == 0.0) continue;
                double g = r / radix;
                double f = 1.0;
                const double s = c + r;
                while (c < g) {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while (c > g) {
                    f /= radix;
                    c /= sqrdx;
                }
                if ((c + r) / f < 0.95 * s) {
                    done = false;
                    g = 1.0 / f;
                    for (int j = 1; j <= n_; ++j) a_(i, j) *= g;
                    for (int j = 1; j <= n_; ++j) a_(j, i) *= f;
                }
            }
        }
    }

    void reduce() {
        for (int m = 2; m < n_; ++m) {
            double x = 0.0;
            int i = m;
            for (int j = m; j <= n_; ++j) {
                if (std::abs(a_(j, m - 1)) > std::abs(x)) {
                    x = a_(j, m - 1);
                    i = j;
                }
            }
            if (i != m) {
                for (int j = m - 1; j <= n_; ++j) std::swap(a_(i, j), a_(m, j));
                for (int j = 1; j <= n_; ++j) std::swap(a_(j, i), a_(j, m));
            }
            if (x != 0.0) {
                for (i = m + 1; i <= n_; ++i) {
                    double y = a_(i, m - 1);
                    if (y == 0.0) continue;
                    y /= x;
                    a_(i, m - 1) = y;
                    for (int j = m; j <= n_; ++j) a_(i, j) -= y * a_(m, j);
                    for (int j = 1; j <= n_; ++j) a_(j, m) += y * a_(j, i);
                }
            }
        }
        for (int i = 1; i <= n_; ++i)
            for (int j = 1; j < i - 1; ++j) a_(i, j) = 0.0;
    }

    std::vector<std::complex<double>> iterate() {
        std::vector<double> wr(static_cast<std::size_t>(n_) + 1, 0.0);
        std::vector<double> wi(static_cast<std::size_t>(n_) + 1, 0.0);
        double anorm = 0.0;
        for (int i = 1; i <= n_; ++i)
            for (int j = std::max(i - 1, 1); j <= n_; ++j) anorm += std::abs(a_(i, j));

        int nn = n_;
        double t = 0.0;
        double p = 0.0, q = 0.0, r = 0.0, s = 0.0, w = 0.0, x = 0.0, y = 0.0, z = 0.0;
        while (nn >= 1) {
            int its = 0;
            int l = 0;
            do {
                for (l = nn; l >= 2; --l) {
                    s = std::abs(a_(l - 1, l - 1)) + std::abs(a_(l, l));
                    if (s == 0.0) s = anorm;
                    if (std::abs(a_(l, l - 1)) + s == s) {
                        a_(l, l - 1) = 0.0;
                        break;
                    }
                }
                x = a_(nn, nn);
                if (l == nn) {
                    wr[nn] = x + t;
                    wi[nn] = 0.0;
                    --nn;
                } else {
                    y = a_(nn - 1, nn - 1);
                    w = a_(nn, nn - 1) * a_(nn - 1, nn);
                    if (l == nn - 1) {
                        p = 0.5 * (y - x);
                        q = p * p + w;
                        z = std::sqrt(std::abs(q));
                        x += t;
                        if (q >= 0.0) {
                            z = p + std::copysign(z, p);
                            wr[nn - 1] = wr[nn] = x + z;
                            if (z != 0.0) wr[nn] = x - w / z;
                            wi[nn - 1] = wi[nn] = 0.0;
                        } else {
                            wr[nn - 1] = wr[nn] = x + p;
                            wi[nn - 1] = -z;
                            wi[nn] = z;
                        }
                        nn -= 2;
                    } else {
                        if (its == max_iterations) {
                            throw non_convergence_error("Hessenberg QR did not converge");
                        }
                        if (its % 10 == 0 && its > 0) {
                            t += x;
                            for (int i = 1; i <= nn; ++i) a_(i, i) -= x;
                            s = std::abs(a_(nn, nn - 1)) + std::abs(a_(nn - 1, nn - 2));
                            y = x = 0.75 * s;
                            w = -0.4375 * s * s;
                        }
                        ++its;
                        int m = nn - 2;
                        for (; m >= l; --m) {
                            z = a_(m, m);
                            r = x - z;
                            s = y - z;
                            p = (r * s - w) / a_(m + 1, m) + a_(m, m + 1);
                            q = a_(m + 1, m + 1) - z - r - s;
                            r = a_(m + 2, m + 1);
                            s = std::abs(p) + std::abs(q) + std::abs(r);
                            p /= s;
                            q /= s;
                            r /= s;
                            if (m == l) break;
                            const double u = std::abs(a_(m, m - 1)) * (std::abs(q) + std::abs(r));
                            const double v =
                                std::abs(p) * (std::abs(a_(m - 1, m - 1)) + std::abs(z) +
                                               std::abs(a_(m + 1, m + 1)));
                            if (u + v == v) break;
                        }
                        for (int i = m + 2; i <= nn; ++i) {
                            a_(i, i - 2) = 0.0;
                            if (i != m + 2) a_(i, i - 3) = 0.0;
                        }
                        for (int k = m; k <= nn - 1; ++k) {
                            if (k != m) {
                                p = a_(k, k - 1);
                                q = a_(k + 1, k - 1);
                                r = 0.0;
                                if (k != nn - 1) r = a_(k + 2, k - 1);
                                x = std::abs(p) + std::abs(q) + std::abs(r);
                                if (x != 0.0) {
                                    p /= x;
                                    q /= x;
                                    r /= x;
                                }
                            }
                            s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
                            if (s == 0.0) continue;
                            if (k == m) {
                                if (l != m) a_(k, k - 1) = -a_(k, k - 1);
                            } else {
                                a_(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for (int j = k; j <= nn; ++j) {
                                p = a_(k, j) + q * a_(k + 1, j);
                                if (k != nn - 1) {
                                    p += r * a_(k + 2, j);
                                    a_(k + 2, j) -= p * z;
                                }
                                a_(k + 1, j) -= p * y;
                                a_(k, j) -= p * x;
                            }
                            const int mmin = nn < k + 3 ? nn : k + 3;
                            for (int i = l; i <= mmin; ++i) {
                                p = x * a_(i, k) + y * a_(i, k + 1);
                                if (k != nn - 1) {
                                    p += z * a_(i, k + 2);
                                    a_(i, k + 2) -= p * r;
                                }
                                a_(i, k + 1) -= p * q;
                                a_(i, k) -= p;
                            }
                        }
                    }
                }
            } while (l < nn - 1);
        }
        std::vector<std::complex<double>> out;
        out.reserve(static_cast<std::size_t>(n_));
        for (int i = 1; i <= n_; ++i) out.emplace_back(wr[i], wi[i]);
        return out;
    }

    static constexpr int max_iterations = 120;
    int n_;
    Matrix a_;
};

}  // namespace detail

/// All eigenvalues of a real square matrix, in no particular order.
[[nodiscard]] inline std::vector<std::complex<double>> eigenvalues(const Matrix& m) {
    if (!all_finite(m)) throw dimension_error("eigenvalues: input has non-finite entries");
    if (m.empty()) return {};
    if (m.size() == 1) return {std::complex<double>(m(0, 0), 0.0)};
    return detail::hessenberg_qr(m).eigenvalues();
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblem (cyclic Jacobi), used on the small restricted
// quadratic forms of the second-order test.

struct symmetric_eigen {
    Vector values;  ///< ascending
    Matrix vectors; ///< column j pairs with values[j]
};

[[nodiscard]] inline symmetric_eigen jacobi_eigen(Matrix a) {
    const std::size_t n = a.size();
    Matrix v = Matrix::identity(n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        double total = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = 0; q < n; ++q) {
                total += a(p, q) * a(p, q);
                if (p != q) off += a(p, q) * a(p, q);
            }
        }
        if (off <= 1e-32 * total || off == 0.0) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return a(x, x) < a(y, y); });
    symmetric_eigen out{Vector(n), Matrix(n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Singular values and right singular vectors of a rectangular matrix given
// by its columns (one-sided Jacobi). Small singular values keep high relative
// accuracy, which is what null-space thresholding needs.

struct column_svd {
    Vector singular_values;  ///< one per column, unsorted
    Matrix right_vectors;    ///< column j pairs with singular_values[j]
};

[[nodiscard]] inline column_svd one_sided_jacobi_svd(std::vector<Vector> cols) {
    const std::size_t k = cols.size();
    Matrix v = Matrix::identity(k);
    constexpr double eps = std::numeric_limits<double>::epsilon();
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < k; ++p) {
            for (std::size_t q = p + 1; q < k; ++q) {
                const double alpha = dot(cols[p], cols[p]);
                const double beta = dot(cols[q], cols[q]);
                const double gamma = dot(cols[p], cols[q]);
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < cols[p].size(); ++i) {
                    const double xp = cols[p][i], xq = cols[q][i];
                    cols[p][i] = c * xp - s * xq;
                    cols[q][i] = s * xp + c * xq;
                }
                for (std::size_t i = 0; i < k; ++i) {
                    const double vp = v(i, p), vq = v(i, q);
                    v(i, p) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }
    column_svd out{Vector(k), std::move(v)};
    for (std::size_t j = 0; j < k; ++j) out.singular_values[j] = norm2(cols[j]);
    return out;
}

}  // namespace pbcs
