#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pbcs/error.hpp"
#include "pbcs/matrix.hpp"

namespace pbcs {

/**
 * Positive bilinear control system  x' = (A + u B) x,  u(t) in [-1, 1],
 * studied on the horizon [0, horizon].
 *
 * The system is positive when A + kB is Metzler for every k in [-1, 1].
 * Off-diagonal entries are affine in k, so checking the endpoints A - B and
 * A + B is enough.
 */
struct PBCSystem {
    Matrix A;
    Matrix B;
    double horizon = 1.0;

    [[nodiscard]] std::size_t dimension() const noexcept { return A.size(); }

    /// Generator of an arc with constant control value u.
    [[nodiscard]] Matrix generator(double u) const { return A + B * u; }

    [[nodiscard]] PBCSystem with_horizon(double t) const { return {A, B, t}; }
};

struct ValidationReport {
    bool dimensions_agree = false;
    bool finite = false;
    bool horizon_positive = false;
    bool a_plus_b_metzler = false;
    bool a_minus_b_metzler = false;
    std::vector<std::string> problems;

    [[nodiscard]] bool valid() const noexcept {
        return dimensions_agree && finite && horizon_positive && a_plus_b_metzler &&
               a_minus_b_metzler;
    }
};

[[nodiscard]] inline ValidationReport validate(const PBCSystem& sys, double tol = 0.0) {
    ValidationReport r;
    r.dimensions_agree = !sys.A.empty() && sys.A.size() == sys.B.size();
    if (!r.dimensions_agree) r.problems.emplace_back("A and B must be nonempty with equal dimension");
    r.finite = all_finite(sys.A) && all_finite(sys.B) && std::isfinite(sys.horizon);
    if (!r.finite) r.problems.emplace_back("A, B and T must be finite");
    r.horizon_positive = sys.horizon > 0.0;
    if (!r.horizon_positive) r.problems.emplace_back("horizon T must be positive");
    if (r.dimensions_agree && r.finite) {
        r.a_plus_b_metzler = is_metzler(sys.A + sys.B, tol);
        r.a_minus_b_metzler = is_metzler(sys.A - sys.B, tol);
        if (!r.a_plus_b_metzler) r.problems.emplace_back("A+B is not Metzler");
        if (!r.a_minus_b_metzler) r.problems.emplace_back("A-B is not Metzler");
    }
    return r;
}

/// Throws invalid_system_error unless validate(sys) passes.
inline void require_valid(const PBCSystem& sys) {
    const auto r = validate(sys);
    if (r.valid()) return;
    std::string msg = "invalid system:";
    for (const auto& p : r.problems) msg += " " + p + ";";
    throw invalid_system_error(msg);
}

}  // namespace pbcs
