#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "pbcs/control.hpp"
#include "pbcs/error.hpp"
#include "pbcs/perron.hpp"
#include "pbcs/system.hpp"
#include "pbcs/transition.hpp"

namespace pbcs {

inline constexpr std::uint64_t default_eval_budget = 1'000'000;

struct SearchOptions {
    std::uint64_t budget = default_eval_budget;  ///< cap on transition-matrix evaluations
    unsigned threads = 0;                        ///< 0: hardware concurrency
};

struct SearchResult {
    BangBangControl best_control = BangBangControl::constant(1, 1.0);
    double best_rho = 0.0;
    std::uint64_t evaluations = 0;
    std::vector<double> trace;  ///< rho after each accepted refinement step (first entry: seed)
};

namespace detail {

inline double rho_of(const PBCSystem& sys, const BangBangControl& u) {
    return spectral_radius(transition_matrix(sys, Control{u}));
}

// The reported rho uses the polished Perron root when available.
inline double reported_rho(const PBCSystem& sys, const BangBangControl& u) {
    const Matrix c = transition_matrix(sys, Control{u});
    try {
        return perron_pair(c).rho;
    } catch (const error&) {
        return spectral_radius(c);
    }
}

// Rebuild with the exact system horizon after durations were edited.
inline BangBangControl canonical_control(int first_sign, const std::vector<double>& durations, double horizon) {
    const auto c = BangBangControl::from_durations(first_sign, durations);
    auto sw = c.switch_times();
    while (!sw.empty() && horizon - sw.back() < min_arc_duration) sw.pop_back();
    return {c.first_sign(), std::move(sw), horizon};
}

inline double composition_count(std::size_t parts, std::size_t total) {
    // C(total + parts - 1, parts - 1)
    double c = 1.0;
    for (std::size_t i = 1; i < parts; ++i) c = c * static_cast<double>(total + i) / static_cast<double>(i);
    return std::round(c);
}

// All weak compositions of `total` into `parts` parts, lexicographic order.
inline std::vector<std::vector<int>> weak_compositions(std::size_t parts, int total) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(parts, 0);
    auto rec = [&](auto&& self, std::size_t pos, int remaining) -> void {
        if (pos + 1 == parts) {
            cur[pos] = remaining;
            out.push_back(cur);
            return;
        }
        for (int x = 0; x <= remaining; ++x) {
            cur[pos] = x;
            self(self, pos + 1, remaining - x);
        }
    };
    rec(rec, 0, total);
    return out;
}

template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
    unsigned t = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
    t = static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(count, 1)));
    if (t <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(t);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < t; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += t) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Number of controls grid_search evaluates for k arcs and density d.
[[nodiscard]] inline double grid_size(std::size_t arcs, std::size_t density) {
    return 2.0 * detail::composition_count(arcs, density);
}

/**
 * Exhaustive search over bang-bang controls with at most k arcs whose
 * durations are multiples of T / d. Every weak composition of d into k parts
 * is tried with both initial signs; zero-length arcs are dropped, so
 * controls with fewer switches are included. Ties go to the first candidate
 * in the order (sign -1 before +1, then lexicographic duration tuple).
 * Evaluations run in parallel and are reduced in index order.
 */
[[nodiscard]] inline SearchResult grid_search(const PBCSystem& sys, std::size_t k, std::size_t grid_density,
                                              const SearchOptions& opt = {}) {
    require_valid(sys);
    if (k < 1) throw invalid_control_error("grid_search: need at least one arc");
    if (grid_density < 2) throw invalid_control_error("grid_search: grid density must be at least 2");
    const double count = grid_size(k, grid_density);
    if (count > static_cast<double>(opt.budget)) {
        throw budget_exceeded_error("grid_search: " + std::to_string(static_cast<std::uint64_t>(count)) +
                                    " evaluations exceed the budget of " + std::to_string(opt.budget));
    }
    const auto comps = detail::weak_compositions(k, static_cast<int>(grid_density));
    const double T = sys.horizon;
    const double unit = T / static_cast<double>(grid_density);
    const std::size_t per_sign = comps.size();

    auto control_at = [&](std::size_t idx) {
        const int sign = idx < per_sign ? -1 : 1;
        const auto& c = comps[idx % per_sign];
        std::vector<double> d(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) d[i] = unit * c[i];
        return detail::canonical_control(sign, d, T);
    };

    std::vector<double> rho(2 * per_sign);
    detail::parallel_for(rho.size(), opt.threads,
                         [&](std::size_t i) { rho[i] = detail::rho_of(sys, control_at(i)); });

    std::size_t best = 0;
    for (std::size_t i = 1; i < rho.size(); ++i)
        if (rho[i] > rho[best]) best = i;

    SearchResult res;
    res.best_control = control_at(best);
    res.best_rho = detail::reported_rho(sys, res.best_control);
    res.evaluations = rho.size();
    res.trace.push_back(res.best_rho);
    return res;
}

struct RefineOptions {
    double initial_step_ratio = 0.05;  ///< first step as a fraction of T
    double min_step_ratio = 1e-9;      ///< stop once the step drops below this fraction of T
    std::uint64_t max_evaluations = 100'000;
};

/**
 * Coordinate-wise hill climbing on the switch times of `seed`. Each switch
 * time is moved by +-step (clamped to its neighbours); a move is kept only if
 * it strictly increases rho. Arcs that shrink to zero are removed. The step
 * halves after a sweep without improvement.
 */
[[nodiscard]] inline SearchResult refine(const PBCSystem& sys, const BangBangControl& seed,
                                         const RefineOptions& opt = {}) {
    require_valid(sys);
    require_compatible(sys, Control{seed});
    const double T = sys.horizon;
    SearchResult res;
    res.best_control = seed;
    res.best_rho = detail::rho_of(sys, seed);
    res.evaluations = 1;
    res.trace.push_back(res.best_rho);

    double step = opt.initial_step_ratio * T;
    while (step >= opt.min_step_ratio * T && res.evaluations < opt.max_evaluations) {
        bool improved = false;
        const auto times = res.best_control.switch_times();
        for (std::size_t i = 0; i < times.size() && !improved; ++i) {
            const double lo = i == 0 ? 0.0 : times[i - 1];
            const double hi = i + 1 == times.size() ? T : times[i + 1];
            for (double dir : {1.0, -1.0}) {
                if (res.evaluations >= opt.max_evaluations) break;
                auto moved = times;
                moved[i] = std::clamp(times[i] + dir * step, lo, hi);
                if (moved[i] == times[i]) continue;
                std::vector<double> d;
                double prev = 0.0;
                for (double t : moved) {
                    d.push_back(t - prev);
                    prev = t;
                }
                d.push_back(T - prev);
                const auto cand = detail::canonical_control(res.best_control.first_sign(), d, T);
                const double r = detail::rho_of(sys, cand);
                ++res.evaluations;
                if (r > res.best_rho) {
                    res.best_control = cand;
                    res.best_rho = r;
                    res.trace.push_back(r);
                    improved = true;
                    break;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    res.best_rho = detail::reported_rho(sys, res.best_control);
    return res;
}

enum class GASStatus { not_gas_certified, undetermined };

[[nodiscard]] inline const char* to_string(GASStatus s) noexcept {
    return s == GASStatus::not_gas_certified ? "not_GAS_certified" : "undetermined";
}

struct RhoTSample {
    double horizon = 0.0;
    double rho = 0.0;
    double rate = 0.0;  ///< rho^(1/t)
    BangBangControl control = BangBangControl::constant(1, 1.0);
};

struct GASVerdict {
    GASStatus status = GASStatus::undetermined;
    std::optional<RhoTSample> witness;
    std::vector<RhoTSample> curve;
};

inline constexpr double not_gas_margin = 1e-9;

/**
 * Lower-bound estimate of t -> rho_t^(1/t) by grid search at each horizon.
 * Any control with rho >= 1 + 1e-9 certifies that the system is not GAS;
 * without one the status stays undetermined (a lower bound cannot certify GAS).
 */
[[nodiscard]] inline GASVerdict rho_t_curve(const PBCSystem& sys, const std::vector<double>& horizons,
                                            std::size_t k, std::size_t grid_density,
                                            const SearchOptions& opt = {}) {
    if (horizons.empty()) throw invalid_interval_error("rho_t_curve: no horizons given");
    const double total = grid_size(k, grid_density) * static_cast<double>(horizons.size());
    if (total > static_cast<double>(opt.budget)) {
        throw budget_exceeded_error("rho_t_curve: " + std::to_string(static_cast<std::uint64_t>(total)) +
                                    " evaluations exceed the budget of " + std::to_string(opt.budget));
    }
    GASVerdict out;
    for (double t : horizons) {
        if (!(t > 0.0)) throw invalid_interval_error("rho_t_curve: horizons must be positive");
        const auto r = grid_search(sys.with_horizon(t), k, grid_density, opt);
        RhoTSample s{t, r.best_rho, std::pow(r.best_rho, 1.0 / t), r.best_control};
        out.curve.push_back(s);
        if (r.best_rho >= 1.0 + not_gas_margin && (!out.witness || s.rate > out.witness->rate)) out.witness = s;
    }
    if (out.witness) out.status = GASStatus::not_gas_certified;
    return out;
}

struct PeriodicExtensionCheck {
    double rho = 0.0;           ///< rho(C(t))
    double rho_extended = 0.0;  ///< rho(C(repeats * t)) for the repeated control
    double relative_residual = 0.0;
};

/// Compares rho(C(m t)) for the m-fold repetition of u with rho(C(t))^m.
[[nodiscard]] inline PeriodicExtensionCheck periodic_extension_check(const PBCSystem& sys,
                                                                     const BangBangControl& u,
                                                                     std::size_t repeats) {
    const auto ext = periodic_extension(u, repeats);
    PeriodicExtensionCheck chk;
    chk.rho = detail::rho_of(sys, u);
    chk.rho_extended = detail::rho_of(sys.with_horizon(ext.horizon()), ext);
    const double expected = std::pow(chk.rho, static_cast<double>(repeats));
    chk.relative_residual = std::abs(chk.rho_extended - expected) / expected;
    return chk;
}

}  // namespace pbcs
