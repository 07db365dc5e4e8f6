#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pbcs/control.hpp"
#include "pbcs/error.hpp"
#include "pbcs/first_order.hpp"
#include "pbcs/high_order.hpp"
#include "pbcs/linalg.hpp"
#include "pbcs/matrix.hpp"
#include "pbcs/perron.hpp"
#include "pbcs/system.hpp"

namespace pbcs::reproduce {

struct Check {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

/// Symmetric system with a singular control candidate: A has eigenvalue 3
/// with eigenvector z = [2, 1]' and z'Bz = 0.
[[nodiscard]] inline PBCSystem singular_example(double horizon = 1.0) {
    return {Matrix{{11.0 / 5, 8.0 / 5}, {8.0 / 5, -1.0 / 5}},
            Matrix{{-11.0 / 10, 1.0 / 5}, {19.0 / 20, 21.0 / 10}}, horizon};
}

/// Two-dimensional system whose four-arc candidate satisfies the first-order
/// conditions but minimizes the spectral radius.
[[nodiscard]] inline PBCSystem four_arc_example() {
    return {Matrix{{-5.0 / 2, 3.0 / 2}, {3.0, -5.0 / 2}}, Matrix{{3.0 / 2, -1.0 / 2}, {1.0, -3.0 / 2}}, 4.0};
}

[[nodiscard]] inline BangBangControl four_arc_candidate() { return {1, {1.0, 2.0, 3.0}, 4.0}; }

/// Closed-form spectral radius of the four-arc candidate's transition matrix.
[[nodiscard]] inline double four_arc_rho() {
    const double e5 = std::exp(5.0), e10 = std::exp(10.0);
    const double s = std::sqrt(9.0 + 32.0 * e5 + 9.0 * e10);
    const double base = (9.0 + 7.0 * e5 + 9.0 * e10 + 3.0 * s * (e5 - 1.0)) / (25.0 * e10);
    return base * base;
}

/// Closed-form Perron vectors (unnormalized).
[[nodiscard]] inline Vector four_arc_right_vector() {
    const double e5 = std::exp(5.0);
    const double s = std::sqrt(9.0 + 32.0 * e5 + 9.0 * e5 * e5);
    return {e5 - 1.0 + s, 2.0 + 8.0 * e5};
}

[[nodiscard]] inline Vector four_arc_left_vector() {
    const double e5 = std::exp(5.0);
    const double s = std::sqrt(9.0 + 32.0 * e5 + 9.0 * e5 * e5);
    return {e5 - 1.0 + s, 4.0 + e5};
}

/// The second-order direction [1, 1/(sqrt(rho) e^5) - 1, -1/(sqrt(rho) e^5), 0].
[[nodiscard]] inline Vector four_arc_direction(double rho) {
    const double g = 1.0 / (std::sqrt(rho) * std::exp(5.0));
    return {1.0, g - 1.0, -g, 0.0};
}

namespace detail {

inline Check at_most(std::string name, double value, double tol) {
    return {std::move(name), value, 0.0, tol, value <= tol};
}

inline Check near(std::string name, double value, double expected, double tol) {
    const double err = std::abs(value - expected);
    return {std::move(name), value, expected, tol, err <= tol};
}

inline Check relative(std::string name, double value, double expected, double tol) {
    const double err = std::abs(value - expected) / std::abs(expected);
    return {std::move(name), value, expected, tol, err <= tol};
}

inline Check holds(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, 1.0, 0.0, ok}; }

}  // namespace detail

/// Eigen-structure of the singular example and the vanishing switching function for u = 0.
[[nodiscard]] inline std::vector<Check> ex2() {
    std::vector<Check> out;
    const auto sys = singular_example(1.0);
    const Vector z{2.0, 1.0};
    const Vector az = sys.A * z;
    out.push_back(detail::at_most("A z = 3 z (residual)", norm2(axpy(-3.0, z, az)) / norm2(z), 1e-10));
    const auto pp = perron_pair(expm(sys.A * sys.horizon));
    out.push_back(detail::relative("mu = log rho(exp(A T)) / T", std::log(pp.rho) / sys.horizon, 3.0, 1e-10));
    out.push_back(detail::at_most("Perron vector parallel to z (sine)", angle_sine(pp.v, z), 1e-10));
    out.push_back(detail::at_most("z'Bz", std::abs(bilinear(z, sys.B, z)), 1e-12));
    out.push_back(detail::holds("A+B and A-B Metzler", validate(sys).valid()));
    out.push_back(detail::relative("rho(A+B) = (3 + sqrt 19) / 2", spectral_radius(sys.A + sys.B),
                                   (3.0 + std::sqrt(19.0)) / 2.0, 1e-10));
    const Control zero = PiecewiseConstantControl::constant(0.0, sys.horizon);
    const auto rep = check_first_order(sys, zero, default_grid(zero));
    const double scale = rep.samples.reference_scale;
    out.push_back(detail::at_most("max |m| / (|B| rho) for u = 0", rep.samples.max_abs / scale, 1e-9));
    out.push_back(detail::holds("first-order verdict vacuous", rep.verdict == FirstOrderVerdict::vacuous));
    return out;
}

/// Bracket test for the singular candidate.
[[nodiscard]] inline std::vector<Check> ex4() {
    std::vector<Check> out;
    const auto sys = singular_example(1.0);
    const Matrix expected{{6.8, 18.4}, {21.4, -6.8}};
    const auto st = singular_test(sys);
    out.push_back(detail::at_most("[B,[B,A]] entrywise error", max_abs(st.bracket - expected), 1e-12));
    out.push_back(detail::near("w'[B,[B,A]]v", st.value, 20.0, 1e-9));
    out.push_back(detail::holds("singular verdict rules_out", st.verdict == HighOrderVerdict::rules_out));
    const auto nv = needle_variation_check(sys, log_spaced(1e-6, 1e-4, 9));
    out.push_back(detail::holds("needle slope positive", nv.fitted_slope > 0.0));
    out.push_back(detail::relative("needle slope vs (2/3) rho w'[B,[B,A]]v", nv.fitted_slope,
                                   nv.predicted_slope, 0.05));
    return out;
}

/// Spectral data, first-order consistency and second-order refutation of the four-arc candidate.
[[nodiscard]] inline std::vector<Check> ex5() {
    std::vector<Check> out;
    const auto sys = four_arc_example();
    const auto u = four_arc_candidate();
    const Control cu{u};
    const double rho_exact = four_arc_rho();
    const auto pp = perron_pair(transition_matrix(sys, cu));
    out.push_back(detail::relative("rho vs closed form", pp.rho, rho_exact, 1e-8));
    out.push_back(detail::at_most("v direction (sine)", angle_sine(pp.v, four_arc_right_vector()), 1e-8));
    out.push_back(detail::at_most("w direction (sine)", angle_sine(pp.w, four_arc_left_vector()), 1e-8));

    const auto rep = check_first_order(sys, cu, default_grid(cu));
    out.push_back(detail::holds("first-order verdict consistent", rep.verdict == FirstOrderVerdict::consistent));
    double worst = 0.0;
    for (const auto& s : rep.switch_residuals) worst = std::max(worst, s.relative_abs_m);
    out.push_back(detail::at_most("max |m(t_i)| / max |m|", worst, 1e-8));
    out.push_back(detail::at_most("|m(0) - m(T)| / scale", rep.samples.periodicity_residual(), 1e-9));

    const Vector lhs = sys.B * (expm(sys.A + sys.B) * pp.v);
    const Vector rhs = scaled(expm((sys.A - sys.B) * -1.0) * (sys.B * pp.v), std::exp(-5.0));
    out.push_back(detail::at_most("B exp(A+B) v = e^-5 exp(-(A-B)) B v", norm2(axpy(-1.0, rhs, lhs)) / norm2(lhs),
                                  1e-9));

    const auto d = build_H(sys, u);
    const Vector alpha = four_arc_direction(rho_exact);
    out.push_back(detail::at_most("direction in Q^4 (residual)", qk_membership(d, alpha).worst(), 1e-8));
    const double r4 = evaluate_form(d, alpha);
    out.push_back({"r_4(direction) > 0", r4, 0.0, 0.0, r4 > 0.0});
    const auto so = second_order_test(d);
    out.push_back(detail::holds("second-order verdict rules_out", so.verdict == HighOrderVerdict::rules_out));
    return out;
}

[[nodiscard]] inline std::vector<std::string> example_ids() { return {"ex2", "ex4", "ex5"}; }

[[nodiscard]] inline std::vector<Check> run(const std::string& id) {
    if (id == "ex2") return ex2();
    if (id == "ex4") return ex4();
    if (id == "ex5") return ex5();
    throw input_error("unknown example \"" + id + "\" (expected ex2, ex4 or ex5)");
}

}  // namespace pbcs::reproduce
