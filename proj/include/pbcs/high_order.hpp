#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pbcs/control.hpp"
#include "pbcs/error.hpp"
#include "pbcs/first_order.hpp"
#include "pbcs/linalg.hpp"
#include "pbcs/matrix.hpp"
#include "pbcs/perron.hpp"
#include "pbcs/system.hpp"
#include "pbcs/transition.hpp"

namespace pbcs {

enum class HighOrderVerdict { passes, rules_out, degenerate_qk };

[[nodiscard]] inline const char* to_string(HighOrderVerdict v) noexcept {
    switch (v) {
        case HighOrderVerdict::passes: return "passes";
        case HighOrderVerdict::rules_out: return "rules_out";
        case HighOrderVerdict::degenerate_qk: return "degenerate_Qk";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Singular control u = 0

struct SingularTestResult {
    double value = 0.0;      ///< w' [B,[B,A]] v
    double scale = 0.0;      ///< |w| |[B,[B,A]]|_F |v|
    double tolerance = 0.0;
    Matrix bracket;          ///< [B,[B,A]]
    PerronPair perron;       ///< of exp(A T)
    HighOrderVerdict verdict = HighOrderVerdict::passes;
};

/**
 * High-order test for the singular candidate u = 0: if it is optimal then
 * w'[B,[B,A]]v <= 0, with (v, w) the Perron vectors of exp(A T).
 * The candidate is ruled out when the value exceeds tol * scale.
 */
[[nodiscard]] inline SingularTestResult singular_test(const PBCSystem& sys, double tol = 1e-9) {
    require_valid(sys);
    SingularTestResult r;
    r.tolerance = tol;
    r.perron = detail::simple_perron(expm(sys.A * sys.horizon));
    r.bracket = lie_bracket(sys.B, lie_bracket(sys.B, sys.A));
    r.value = bilinear(r.perron.w, r.bracket, r.perron.v);
    r.scale = norm2(r.perron.w) * norm_frobenius(r.bracket) * norm2(r.perron.v);
    r.verdict = r.value > tol * r.scale ? HighOrderVerdict::rules_out : HighOrderVerdict::passes;
    return r;
}

struct NeedleRow {
    double epsilon = 0.0;
    double width = 0.0;            ///< epsilon^(1/3)
    double rho_difference = 0.0;   ///< rho(C(T, u_eps)) - rho(exp(A T))
};

struct NeedleVariationTable {
    std::vector<NeedleRow> rows;
    double rho = 0.0;
    double bracket_value = 0.0;    ///< w'[B,[B,A]]v
    double predicted_slope = 0.0;  ///< (2/3) rho w'[B,[B,A]]v
    double fitted_slope = 0.0;

    [[nodiscard]] double relative_deviation() const noexcept {
        return predicted_slope != 0.0 ? std::abs(fitted_slope - predicted_slope) / std::abs(predicted_slope)
                                      : std::abs(fitted_slope);
    }
};

/// `count` logarithmically spaced values from lo to hi.
[[nodiscard]] inline std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0 && hi >= lo) || count == 0) throw invalid_interval_error("log_spaced: need 0 < lo <= hi");
    if (count == 1) return {lo};
    std::vector<double> out;
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(i + 1 == count ? hi : std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1)));
    return out;
}

/// The three-pulse perturbation of u = 0 ending at T: -1 on a pulse of width
/// d, +1 on 2d, -1 on d, where d = epsilon^(1/3).
[[nodiscard]] inline PiecewiseConstantControl needle_control(double horizon, double epsilon) {
    const double d = std::cbrt(epsilon);
    if (4.0 * d > horizon) {
        throw horizon_too_short_error("needle variation needs 4 eps^(1/3) <= T (eps = " +
                                      std::to_string(epsilon) + ")");
    }
    std::vector<double> breaks{0.0};
    std::vector<double> values;
    if (horizon - 4.0 * d >= min_arc_duration) {
        breaks.push_back(horizon - 4.0 * d);
        values.push_back(0.0);
    }
    breaks.insert(breaks.end(), {horizon - 3.0 * d, horizon - d, horizon});
    values.insert(values.end(), {-1.0, 1.0, -1.0});
    return {std::move(breaks), std::move(values)};
}

/**
 * Evaluates the true spectral-radius change produced by the needle
 * perturbation for each epsilon and fits the coefficient of epsilon.
 * The differences behave like c eps + O(eps^(4/3)), so the fit regresses
 * difference / eps on a polynomial in eps^(1/3) and reports its constant term.
 */
[[nodiscard]] inline NeedleVariationTable needle_variation_check(const PBCSystem& sys,
                                                                 const std::vector<double>& epsilons) {
    require_valid(sys);
    if (epsilons.empty()) throw invalid_interval_error("needle_variation_check: no epsilon values");
    const auto st = singular_test(sys);
    NeedleVariationTable tab;
    tab.rho = st.perron.rho;
    tab.bracket_value = st.value;
    tab.predicted_slope = 2.0 / 3.0 * tab.rho * st.value;
    for (double eps : epsilons) {
        if (!(eps > 0.0)) throw invalid_interval_error("epsilon must be positive");
        const Control u = needle_control(sys.horizon, eps);
        const double rho = perron_pair(transition_matrix(sys, u)).rho;
        tab.rows.push_back({eps, std::cbrt(eps), rho - tab.rho});
    }
    const std::size_t degree = std::min<std::size_t>(2, tab.rows.size() - 1);
    const std::size_t m = degree + 1;
    Matrix normal(m);
    Vector rhs(m, 0.0);
    for (const auto& row : tab.rows) {
        const double y = row.rho_difference / row.epsilon;
        Vector basis(m);
        for (std::size_t j = 0; j < m; ++j) basis[j] = std::pow(row.width, static_cast<double>(j));
        for (std::size_t i = 0; i < m; ++i) {
            rhs[i] += basis[i] * y;
            for (std::size_t j = 0; j < m; ++j) normal(i, j) += basis[i] * basis[j];
        }
    }
    tab.fitted_slope = solve(normal, rhs)[0];
    return tab;
}

// ---------------------------------------------------------------------------
// Bang-bang candidates

namespace detail {

struct ArcConjugates {
    int r = 1;
    Matrix P, Q;
    std::vector<double> durations;
    std::vector<Matrix> generators;  ///< X_i: P for odd i (1-based), Q for even
    std::vector<Matrix> exps;        ///< exp(tau_i X_i)
    std::vector<Matrix> H;
    Matrix transition;               ///< exp(tau_k X_k) ... exp(tau_1 X_1)
    Matrix after_first;              ///< exp(tau_k X_k) ... exp(tau_2 X_2) = C(T, t1)
};

inline ArcConjugates arc_conjugates(const PBCSystem& sys, const BangBangControl& u) {
    require_valid(sys);
    require_compatible(sys, Control{u});
    const std::size_t k = u.arc_count();
    if (k < 2) {
        throw too_few_arcs_error("bang-bang analysis needs at least two arcs, got " + std::to_string(k));
    }
    ArcConjugates ac;
    ac.r = u.first_sign();
    ac.P = sys.generator(ac.r);
    ac.Q = sys.generator(-ac.r);
    ac.durations = u.durations();
    const std::size_t n = sys.dimension();
    for (std::size_t i = 0; i < k; ++i) {
        ac.generators.push_back(i % 2 == 0 ? ac.P : ac.Q);
        ac.exps.push_back(expm(ac.generators[i] * ac.durations[i]));
    }
    // H_1 = P, H_2 = Q, H_i = W_i^{-1} X_i W_i with W_i = exp(tau_{i-1} X_{i-1}) ... exp(tau_2 X_2).
    Matrix conj = Matrix::identity(n);
    Matrix conj_inv = Matrix::identity(n);
    ac.H.push_back(ac.P);
    for (std::size_t i = 1; i < k; ++i) {
        if (i >= 2) {
            conj = ac.exps[i - 1] * conj;
            conj_inv = conj_inv * expm(ac.generators[i - 1] * (-ac.durations[i - 1]));
        }
        ac.H.push_back(conj_inv * ac.generators[i] * conj);
    }
    ac.after_first = ac.exps[k - 1] * conj;
    ac.transition = ac.after_first * ac.exps[0];
    return ac;
}

}  // namespace detail

/**
 * Arc data for a bang-bang candidate with k >= 2 arcs, t0 = 0 and tk = T:
 * P = A + rB, Q = A - rB, the conjugated generators H_i, and the adjoint
 * values p(t1) = exp(tau_1 P) v and q(t1)' = w' C(T, t1).
 */
struct BangArcDecomposition {
    int r = 1;
    Matrix P, Q;
    std::vector<double> durations;
    std::vector<Matrix> H;
    Vector p1;
    Vector q1;
    Matrix transition;
    PerronPair perron;

    [[nodiscard]] std::size_t arc_count() const noexcept { return H.size(); }
};

[[nodiscard]] inline BangArcDecomposition build_H(const PBCSystem& sys, const BangBangControl& u) {
    auto ac = detail::arc_conjugates(sys, u);
    BangArcDecomposition d;
    d.perron = detail::simple_perron(ac.transition);
    d.r = ac.r;
    d.P = std::move(ac.P);
    d.Q = std::move(ac.Q);
    d.durations = std::move(ac.durations);
    d.H = std::move(ac.H);
    d.p1 = ac.exps[0] * d.perron.v;
    d.q1 = left_multiply(d.perron.w, ac.after_first);
    d.transition = std::move(ac.transition);
    return d;
}

namespace detail {

inline double h_scale(const BangArcDecomposition& d) {
    double h = 0.0;
    for (const auto& m : d.H) h = std::max(h, norm_frobenius(m));
    return norm2(d.q1) * h * norm2(d.p1);
}

}  // namespace detail

/**
 * First-order condition for bang-bang candidates:  q(t1)' sum_i alpha_i H_i p(t1) = 0
 * for every alpha with alpha_1 + ... + alpha_k = 0. Returns the maximum over
 * the basis e_1 - e_j of |q(t1)'(H_1 - H_j)p(t1)|, normalized by
 * |q(t1)| max_i |H_i|_F |p(t1)|.
 */
[[nodiscard]] inline double first_order_bang_residual(const BangArcDecomposition& d) {
    const double scale = detail::h_scale(d);
    if (scale == 0.0) return 0.0;
    const double first = bilinear(d.q1, d.H[0], d.p1);
    double worst = 0.0;
    for (std::size_t j = 1; j < d.H.size(); ++j) {
        worst = std::max(worst, std::abs(first - bilinear(d.q1, d.H[j], d.p1)));
    }
    return worst / scale;
}

/// c_ij = q(t1)' [H_i, H_j] p(t1) for i < j (zero elsewhere).
[[nodiscard]] inline Matrix form_coefficients(const BangArcDecomposition& d) {
    const std::size_t k = d.arc_count();
    Matrix c(k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) c(i, j) = bilinear(d.q1, lie_bracket(d.H[i], d.H[j]), d.p1);
    return c;
}

/// r_k(alpha) = sum_{i<j} alpha_i alpha_j q(t1)' [H_i, H_j] p(t1).
[[nodiscard]] inline double evaluate_form(const BangArcDecomposition& d, const Vector& alpha) {
    if (alpha.size() != d.arc_count()) throw dimension_error("evaluate_form: alpha must have k entries");
    const Matrix c = form_coefficients(d);
    double r = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (std::size_t j = i + 1; j < alpha.size(); ++j) r += alpha[i] * alpha[j] * c(i, j);
    return r;
}

/// sum_i alpha_i H_i p(t1).
[[nodiscard]] inline Vector combined_direction(const BangArcDecomposition& d, const Vector& alpha) {
    if (alpha.size() != d.arc_count()) throw dimension_error("alpha must have k entries");
    Vector out(d.p1.size(), 0.0);
    for (std::size_t i = 0; i < alpha.size(); ++i) out = axpy(alpha[i], d.H[i] * d.p1, std::move(out));
    return out;
}

/**
 * How far alpha is from the cone Q^k: |sum alpha_i H_i p(t1)| relative to
 * max_i |H_i p(t1)| |alpha|, together with |sum alpha_i| / |alpha|.
 */
struct QkMembership {
    double direction_residual = 0.0;
    double sum_residual = 0.0;

    [[nodiscard]] double worst() const noexcept { return std::max(direction_residual, sum_residual); }
};

[[nodiscard]] inline QkMembership qk_membership(const BangArcDecomposition& d, const Vector& alpha) {
    QkMembership m;
    const double na = norm2(alpha);
    if (na == 0.0) return m;
    double hp = 0.0;
    for (const auto& h : d.H) hp = std::max(hp, norm2(h * d.p1));
    double sum = 0.0;
    for (double a : alpha) sum += a;
    m.direction_residual = hp > 0.0 ? norm2(combined_direction(d, alpha)) / (hp * na) : 0.0;
    m.sum_residual = std::abs(sum) / na;
    return m;
}

struct SecondOrderResult {
    double first_order_residual = 0.0;
    bool first_order_satisfied = false;
    std::vector<Vector> qk_basis;     ///< orthonormal basis of Q^k
    Matrix form_coeffs;               ///< c_ij, i < j
    double restricted_max_eig = 0.0;  ///< max of r_k over unit vectors in Q^k
    Vector maximizer;                 ///< unit alpha in Q^k attaining it
    double scale = 0.0;               ///< |q(t1)| max_{i<j} |[H_i,H_j]|_F |p(t1)|
    double tolerance = 0.0;
    HighOrderVerdict verdict = HighOrderVerdict::passes;
};

inline constexpr double null_space_ratio = 1e-10;
inline constexpr double first_order_bang_tolerance = 1e-8;

/**
 * Second-order test for bang-bang candidates: if optimal, r_k(alpha) <= 0 on
 *   Q^k = { alpha : sum alpha_i = 0,  sum alpha_i H_i p(t1) = 0 }.
 * Q^k is the numerical null space of the stacked constraints (singular
 * values below 1e-10 of the largest); the symmetric part of r_k restricted
 * to it is diagonalized and the candidate is ruled out when the largest
 * eigenvalue exceeds tol * scale.
 */
[[nodiscard]] inline SecondOrderResult second_order_test(const BangArcDecomposition& d, double tol = 1e-7) {
    const std::size_t k = d.arc_count();
    const std::size_t n = d.p1.size();
    SecondOrderResult res;
    res.tolerance = tol;
    res.first_order_residual = first_order_bang_residual(d);
    res.first_order_satisfied = res.first_order_residual <= first_order_bang_tolerance;
    res.form_coeffs = form_coefficients(d);

    double hp_scale = 0.0;
    std::vector<Vector> hp;
    for (const auto& h : d.H) {
        hp.push_back(h * d.p1);
        hp_scale = std::max(hp_scale, norm2(hp.back()));
    }
    if (hp_scale == 0.0) hp_scale = 1.0;
    std::vector<Vector> cols;
    for (std::size_t i = 0; i < k; ++i) {
        Vector col(n + 1);
        col[0] = 1.0 / std::sqrt(static_cast<double>(k));
        for (std::size_t r = 0; r < n; ++r) col[r + 1] = hp[i][r] / hp_scale;
        cols.push_back(std::move(col));
    }
    const auto svd = one_sided_jacobi_svd(std::move(cols));
    const double smax = *std::max_element(svd.singular_values.begin(), svd.singular_values.end());
    for (std::size_t j = 0; j < k; ++j) {
        if (svd.singular_values[j] <= null_space_ratio * smax) {
            Vector b(k);
            for (std::size_t i = 0; i < k; ++i) b[i] = svd.right_vectors(i, j);
            res.qk_basis.push_back(std::move(b));
        }
    }

    double bracket_norm = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            bracket_norm = std::max(bracket_norm, norm_frobenius(lie_bracket(d.H[i], d.H[j])));
    res.scale = norm2(d.q1) * bracket_norm * norm2(d.p1);

    if (res.qk_basis.empty()) {
        res.verdict = HighOrderVerdict::degenerate_qk;
        return res;
    }

    Matrix sym(k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) sym(i, j) = sym(j, i) = 0.5 * res.form_coeffs(i, j);
    const std::size_t dim = res.qk_basis.size();
    Matrix restricted(dim);
    for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) restricted(a, b) = bilinear(res.qk_basis[a], sym, res.qk_basis[b]);
    const auto eig = jacobi_eigen(restricted);
    res.restricted_max_eig = eig.values.back();
    res.maximizer.assign(k, 0.0);
    for (std::size_t a = 0; a < dim; ++a)
        res.maximizer = axpy(eig.vectors(a, dim - 1), res.qk_basis[a], std::move(res.maximizer));
    res.verdict = res.restricted_max_eig > tol * res.scale ? HighOrderVerdict::rules_out
                                                          : HighOrderVerdict::passes;
    return res;
}

// ---------------------------------------------------------------------------
// Derivatives along the switching-time perturbation tau_i -> tau_i + s alpha_i

struct TransitionDerivatives {
    Vector alpha;
    Matrix transition;  ///< C(T) at s = 0
    Matrix dC;          ///< dC/ds at s = 0
    Matrix ddC;         ///< d2C/ds2 at s = 0
};

/**
 * First and second s-derivatives of C(T; s, alpha) = exp((tau_k + s alpha_k) X_k) ...
 * exp((tau_1 + s alpha_1) X_1) at s = 0, with sum alpha_i = 0.
 *
 * With G_i = exp(-tau_1 P) H_i exp(tau_1 P) and the inverse flow
 * Hinv(s) = exp(-tau_1 P) ... exp(-tau_k X_k) = C^{-1}:
 *   Hinv dC  = sum alpha_i G_i
 *   Hinv ddC = -dHinv dC + sum_{i<j} alpha_i alpha_j [G_i, G_j]
 * where dHinv comes from the product rule, so no matrix is inverted.
 */
[[nodiscard]] inline TransitionDerivatives transition_derivatives(const PBCSystem& sys,
                                                                  const BangBangControl& u,
                                                                  const Vector& alpha) {
    const auto ac = detail::arc_conjugates(sys, u);
    const std::size_t k = ac.H.size();
    if (alpha.size() != k) {
        throw dimension_error("transition_derivatives: alpha must have one entry per arc");
    }
    double sum = 0.0, l1 = 0.0;
    for (double a : alpha) {
        sum += a;
        l1 += std::abs(a);
    }
    if (std::abs(sum) > 1e-12 * std::max(1.0, l1)) {
        throw invalid_control_error("transition_derivatives: alpha must sum to zero");
    }
    const std::size_t n = sys.dimension();

    const Matrix e1 = ac.exps[0];
    const Matrix e1_inv = expm(ac.P * (-ac.durations[0]));
    std::vector<Matrix> g;
    g.reserve(k);
    for (const auto& h : ac.H) g.push_back(e1_inv * h * e1);

    TransitionDerivatives out;
    out.alpha = alpha;
    out.transition = ac.transition;

    Matrix first_sum(n);
    for (std::size_t i = 0; i < k; ++i) first_sum += g[i] * alpha[i];
    out.dC = ac.transition * first_sum;

    // Inverse flow F_1 F_2 ... F_k with F_i = exp(-tau_i X_i); dF_i/ds = -alpha_i X_i F_i.
    std::vector<Matrix> f;
    f.reserve(k);
    for (std::size_t i = 0; i < k; ++i) f.push_back(expm(ac.generators[i] * (-ac.durations[i])));
    std::vector<Matrix> head(k + 1, Matrix::identity(n));  // head[i] = F_1 ... F_i
    for (std::size_t i = 0; i < k; ++i) head[i + 1] = head[i] * f[i];
    std::vector<Matrix> tail(k + 1, Matrix::identity(n));  // tail[i] = F_{i+1} ... F_k
    for (std::size_t i = k; i-- > 0;) tail[i] = f[i] * tail[i + 1];
    Matrix d_inverse_flow(n);
    for (std::size_t i = 0; i < k; ++i) {
        if (alpha[i] == 0.0) continue;
        d_inverse_flow -= head[i] * ac.generators[i] * tail[i] * alpha[i];
    }

    Matrix pair_sum(n);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (alpha[i] != 0.0 && alpha[j] != 0.0) pair_sum += lie_bracket(g[i], g[j]) * (alpha[i] * alpha[j]);
    out.ddC = ac.transition * (pair_sum - d_inverse_flow * out.dC);
    return out;
}

struct SpectralDerivatives {
    double drho = 0.0;
    double ddrho = 0.0;
};

/**
 * Derivatives of the simple Perron root along C(s) with C(0) = C:
 *   rho'  = w' C' v
 *   rho'' = w' C'' v + 2 w' C' D# C' v,   D = rho I - C,
 * where D# is the group inverse of D.
 */
[[nodiscard]] inline SpectralDerivatives spectral_radius_derivatives(const Matrix& c, const PerronPair& pp,
                                                                     const Matrix& dC, const Matrix& ddC) {
    if (!pp.simple()) throw not_simple_error("spectral_radius_derivatives: Perron root is not simple");
    const std::size_t n = c.size();
    Matrix d = Matrix::identity(n) * pp.rho - c;
    const Matrix dsharp = group_inverse(d, pp.v, pp.w);
    const Vector dcv = dC * pp.v;
    SpectralDerivatives sd;
    sd.drho = dot(pp.w, dcv);
    sd.ddrho = bilinear(pp.w, ddC, pp.v) + 2.0 * dot(left_multiply(pp.w, dC), dsharp * dcv);
    return sd;
}

struct VariationalDerivatives {
    TransitionDerivatives transition;
    PerronPair perron;
    SpectralDerivatives spectral;
};

[[nodiscard]] inline VariationalDerivatives variational_derivatives(const PBCSystem& sys,
                                                                    const BangBangControl& u,
                                                                    const Vector& alpha) {
    VariationalDerivatives vd;
    vd.transition = transition_derivatives(sys, u, alpha);
    vd.perron = detail::simple_perron(vd.transition.transition);
    vd.spectral = spectral_radius_derivatives(vd.transition.transition, vd.perron, vd.transition.dC,
                                              vd.transition.ddC);
    return vd;
}

/// C(T; s, alpha) rebuilt from the perturbed arc durations tau_i + s alpha_i.
[[nodiscard]] inline Matrix perturbed_transition(const PBCSystem& sys, const BangBangControl& u,
                                                 const Vector& alpha, double s) {
    const auto d = u.durations();
    if (alpha.size() != d.size()) throw dimension_error("perturbed_transition: alpha must have k entries");
    Matrix c = Matrix::identity(sys.dimension());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double tau = d[i] + s * alpha[i];
        if (tau < 0.0) throw invalid_control_error("perturbed_transition: negative arc duration");
        c = expm(sys.generator(u.sign_of_arc(i)) * tau) * c;
    }
    return c;
}

}  // namespace pbcs
