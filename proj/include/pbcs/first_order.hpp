#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pbcs/control.hpp"
#include "pbcs/error.hpp"
#include "pbcs/matrix.hpp"
#include "pbcs/perron.hpp"
#include "pbcs/system.hpp"
#include "pbcs/transition.hpp"

namespace pbcs {

inline constexpr std::size_t default_grid_samples = 2048;

/// `samples` uniform points on [0, T] (both ends included) merged with the
/// control's arc boundaries.
[[nodiscard]] inline std::vector<double> default_grid(const Control& u,
                                                      std::size_t samples = default_grid_samples) {
    if (samples < 2) throw invalid_interval_error("grid needs at least two samples");
    const double T = horizon(u);
    std::vector<double> g;
    g.reserve(samples + 8);
    for (std::size_t i = 0; i < samples; ++i) {
        g.push_back(i + 1 == samples ? T : T * static_cast<double>(i) / static_cast<double>(samples - 1));
    }
    const auto b = arc_boundaries(u);
    g.insert(g.end(), b.begin(), b.end());
    std::sort(g.begin(), g.end());
    std::vector<double> out;
    for (double t : g) {
        if (!out.empty() && t - out.back() <= 1e-12 * T) {
            // keep exact arc boundaries over nearby uniform samples
            if (std::find(b.begin(), b.end(), t) != b.end()) out.back() = t;
            continue;
        }
        out.push_back(t);
    }
    return out;
}

/**
 * Adjoint curves of the first-order maximum principle for a candidate
 * control:  p(t) = C(t, 0) v  and  q(t)' = w' C(T, t),  where (rho, v, w) is
 * the Perron data of C(T). Hence p(0) = v, q(T) = w and q(t)'p(t) = rho.
 */
struct AdjointData {
    Matrix transition;  ///< C(T, 0)
    PerronPair perron;
    std::vector<double> times;
    std::vector<Vector> p;
    std::vector<Vector> q;
};

namespace detail {

inline PerronPair simple_perron(const Matrix& c) {
    auto pp = perron_pair(c);
    if (!pp.simple()) {
        throw not_simple_error(
            "the Perron root of C(T) is not a simple eigenvalue (gap " + std::to_string(pp.gap) +
            ", rho " + std::to_string(pp.rho) +
            "); the maximum principle requires a simple spectral radius");
    }
    return pp;
}

}  // namespace detail

[[nodiscard]] inline AdjointData adjoint_data(const PBCSystem& sys, const Control& u,
                                              const std::vector<double>& grid) {
    const TransitionCache cache(sys, u);
    AdjointData ad;
    ad.transition = cache.total();
    ad.perron = detail::simple_perron(ad.transition);
    ad.times = grid;
    ad.p.reserve(grid.size());
    ad.q.reserve(grid.size());
    for (double t : grid) {
        ad.p.push_back(cache.from_start(t) * ad.perron.v);
        ad.q.push_back(left_multiply(ad.perron.w, cache.to_end(t)));
    }
    return ad;
}

struct SignChange {
    double time = 0.0;
    int from = 0;  ///< sign before the crossing
    int to = 0;    ///< sign after
};

/// Samples of m(t) = q(t)' B p(t).
struct SwitchingFunctionSamples {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<SignChange> sign_changes;
    double m_start = 0.0;       ///< m(0)
    double m_end = 0.0;         ///< m(T)
    double max_abs = 0.0;       ///< max over the grid of |m|
    double reference_scale = 0.0;  ///< |B|_F * rho
    double rho = 0.0;

    /// |m(0) - m(T)| relative to max(max_abs, reference_scale).
    [[nodiscard]] double periodicity_residual() const noexcept {
        const double s = std::max(max_abs, reference_scale);
        return s > 0.0 ? std::abs(m_start - m_end) / s : 0.0;
    }
};

namespace detail {

// Crossings between consecutive samples whose |m| exceeds the band; a run of
// in-band samples between opposite signs places the crossing at its centre.
inline std::vector<SignChange> detect_sign_changes(const std::vector<double>& t,
                                                   const std::vector<double>& m, double band) {
    std::vector<SignChange> out;
    std::size_t last = t.size();
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::abs(m[i]) <= band) continue;
        if (last != t.size() && (m[i] > 0.0) != (m[last] > 0.0)) {
            double at;
            if (i == last + 1) {
                at = t[last] + (t[i] - t[last]) * m[last] / (m[last] - m[i]);
            } else {
                at = 0.5 * (t[last + 1] + t[i - 1]);
            }
            out.push_back({at, m[last] > 0.0 ? 1 : -1, m[i] > 0.0 ? 1 : -1});
        }
        last = i;
    }
    return out;
}

}  // namespace detail

[[nodiscard]] inline SwitchingFunctionSamples switching_function(const PBCSystem& sys, const AdjointData& ad) {
    SwitchingFunctionSamples s;
    s.times = ad.times;
    s.values.reserve(ad.times.size());
    for (std::size_t i = 0; i < ad.times.size(); ++i) {
        s.values.push_back(bilinear(ad.q[i], sys.B, ad.p[i]));
        s.max_abs = std::max(s.max_abs, std::abs(s.values.back()));
    }
    const auto& pp = ad.perron;
    s.rho = pp.rho;
    s.reference_scale = norm_frobenius(sys.B) * pp.rho;
    // m(0) = q(0)'B v with q(0) = rho w;  m(T) = w'B C(T) v.
    s.m_start = pp.rho * bilinear(pp.w, sys.B, pp.v);
    s.m_end = dot(pp.w, sys.B * (ad.transition * pp.v));
    s.sign_changes = detail::detect_sign_changes(s.times, s.values, 1e-9 * s.max_abs);
    return s;
}

[[nodiscard]] inline SwitchingFunctionSamples switching_function(const PBCSystem& sys, const Control& u,
                                                                 const std::vector<double>& grid) {
    return switching_function(sys, adjoint_data(sys, u, grid));
}

enum class FirstOrderVerdict { consistent, violated, vacuous };

[[nodiscard]] inline const char* to_string(FirstOrderVerdict v) noexcept {
    switch (v) {
        case FirstOrderVerdict::consistent: return "consistent";
        case FirstOrderVerdict::violated: return "violated";
        case FirstOrderVerdict::vacuous: return "vacuous";
    }
    return "?";
}

/// Per-arc agreement between sign(m) and the control value. `margin` is the
/// worst signed agreement over interior samples, in units of max|m|;
/// negative means m opposes u somewhere on the arc.
struct ArcMargin {
    double start = 0.0;
    double end = 0.0;
    double value = 0.0;
    double margin = 0.0;
    std::size_t samples = 0;
};

struct SwitchResidual {
    double time = 0.0;
    double relative_abs_m = 0.0;  ///< |m(t_i)| / max|m|
};

struct MPReport {
    FirstOrderVerdict verdict = FirstOrderVerdict::vacuous;
    double tolerance = 0.0;
    std::vector<ArcMargin> arc_margins;
    std::vector<SwitchResidual> switch_residuals;
    SwitchingFunctionSamples samples;
};

/// Relative threshold below which m counts as identically zero (scaled by |B|_F * rho).
inline constexpr double vacuous_ratio = 1e-9;

/**
 * First-order maximum-principle check: u must equal +1 where m > 0 and -1
 * where m < 0, for almost all t. On the grid this means: wherever
 * |m| > tol * max|m|, the sign of m must match u. If max|m| is below
 * vacuous_ratio * |B|_F * rho the condition holds vacuously.
 */
[[nodiscard]] inline MPReport check_first_order(const PBCSystem& sys, const Control& u,
                                                const std::vector<double>& grid, double tol = 1e-8) {
    MPReport rep;
    rep.tolerance = tol;
    rep.samples = switching_function(sys, u, grid);
    const auto& s = rep.samples;
    const double T = sys.horizon;

    const auto bounds = arc_boundaries(u);
    const auto arc_list = arcs(u);
    const double scale = s.max_abs;
    if (bounds.size() > 2) {
        const std::vector<double> interior(bounds.begin() + 1, bounds.end() - 1);
        const auto at_switches = switching_function(sys, u, interior);
        for (std::size_t a = 0; a < interior.size(); ++a) {
            const double mt = std::abs(at_switches.values[a]);
            rep.switch_residuals.push_back({interior[a], scale > 0.0 ? mt / scale : 0.0});
        }
    }

    if (s.max_abs <= vacuous_ratio * s.reference_scale) {
        rep.verdict = FirstOrderVerdict::vacuous;
        for (std::size_t a = 0; a < arc_list.size(); ++a) {
            rep.arc_margins.push_back({bounds[a], bounds[a + 1], arc_list[a].value, 0.0, 0});
        }
        return rep;
    }

    bool violated = false;
    const double edge = 1e-12 * T;
    for (std::size_t a = 0; a < arc_list.size(); ++a) {
        ArcMargin am{bounds[a], bounds[a + 1], arc_list[a].value,
                     std::numeric_limits<double>::infinity(), 0};
        const double val = arc_list[a].value;
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            const double t = s.times[i];
            if (t <= am.start + edge || t >= am.end - edge) continue;
            const double rel = s.values[i] / scale;
            double agreement;
            if (val == 1.0) {
                agreement = rel;
            } else if (val == -1.0) {
                agreement = -rel;
            } else {
                agreement = -std::abs(rel);
            }
            am.margin = std::min(am.margin, agreement);
            ++am.samples;
        }
        if (am.samples == 0) am.margin = 0.0;
        if (am.margin < -tol) violated = true;
        rep.arc_margins.push_back(am);
    }
    rep.verdict = violated ? FirstOrderVerdict::violated : FirstOrderVerdict::consistent;
    return rep;
}

struct CollinearityResult {
    double sine = 0.0;  ///< sine of the angle between exp(Q tau2) w and v
    bool collinear = false;
};

/**
 * For symmetric A, B and a two-arc bang-bang control, exp(Q tau2) w is a
 * positive multiple of v (Q is the generator of the second arc). Returns the
 * sine of the angle between the two vectors.
 */
[[nodiscard]] inline CollinearityResult symmetric_collinearity_check(const PBCSystem& sys,
                                                                     const BangBangControl& u,
                                                                     double tol = 1e-9) {
    const double sym_tol = 1e-12 * std::max({1.0, max_abs(sys.A), max_abs(sys.B)});
    if (!is_symmetric(sys.A, sym_tol) || !is_symmetric(sys.B, sym_tol)) {
        throw not_symmetric_error("symmetric_collinearity_check: A and B must be symmetric");
    }
    if (u.arc_count() != 2) {
        throw invalid_control_error("symmetric_collinearity_check: control must have exactly two arcs");
    }
    require_valid(sys);
    require_compatible(sys, Control{u});
    const auto d = u.durations();
    const Matrix p = sys.generator(u.first_sign());
    const Matrix q = sys.generator(-u.first_sign());
    const Matrix eq = expm(q * d[1]);
    const Matrix c = eq * expm(p * d[0]);
    const auto pp = perron_pair(c);
    CollinearityResult r;
    r.sine = angle_sine(eq * pp.w, pp.v);
    r.collinear = r.sine <= tol;
    return r;
}

}  // namespace pbcs
