#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pbcs/control.hpp"
#include "pbcs/error.hpp"
#include "pbcs/linalg.hpp"
#include "pbcs/matrix.hpp"
#include "pbcs/system.hpp"

namespace pbcs {

/// Throws unless the control's horizon matches the system's (to 1e-12 relative).
inline void require_compatible(const PBCSystem& sys, const Control& u) {
    const double t = horizon(u);
    if (std::abs(t - sys.horizon) > 1e-12 * std::max(1.0, sys.horizon)) {
        throw invalid_control_error("control horizon " + std::to_string(t) +
                                    " does not match system horizon " + std::to_string(sys.horizon));
    }
}

/**
 * Transition matrix C(b, a, u): the ordered product of exp((A + u_i B) d_i)
 * over the pieces of the arcs that meet [a, b], the earliest on the right.
 */
[[nodiscard]] inline Matrix transition_matrix(const PBCSystem& sys, const Control& u, double a, double b) {
    require_valid(sys);
    require_compatible(sys, u);
    const double T = sys.horizon;
    if (!(a >= 0.0 && a <= b && b <= T * (1.0 + 1e-14))) {
        throw invalid_interval_error("transition_matrix: need 0 <= a <= b <= T, got [" +
                                     std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    Matrix c = Matrix::identity(sys.dimension());
    double start = 0.0;
    for (const auto& arc : arcs(u)) {
        const double end = start + arc.duration;
        const double lo = std::max(a, start);
        const double hi = std::min(b, end);
        if (hi > lo) c = expm(sys.generator(arc.value) * (hi - lo)) * c;
        start = end;
        if (start >= b) break;
    }
    return c;
}

/// C(T, 0, u).
[[nodiscard]] inline Matrix transition_matrix(const PBCSystem& sys, const Control& u) {
    return transition_matrix(sys, u, 0.0, sys.horizon);
}

/**
 * Precomputed arc exponentials with prefix and suffix products, so that
 * C(t, 0) and C(T, t) cost one small exponential per query.
 */
class TransitionCache {
public:
    TransitionCache(const PBCSystem& sys, const Control& u) : sys_(sys), arcs_(arcs(u)) {
        require_valid(sys);
        require_compatible(sys, u);
        const std::size_t n = sys.dimension();
        const std::size_t k = arcs_.size();
        starts_.resize(k + 1, 0.0);
        for (std::size_t i = 0; i < k; ++i) starts_[i + 1] = starts_[i] + arcs_[i].duration;
        starts_.back() = sys.horizon;
        generators_.reserve(k);
        exps_.reserve(k);
        for (const auto& arc : arcs_) {
            generators_.push_back(sys.generator(arc.value));
            exps_.push_back(expm(generators_.back() * arc.duration));
        }
        prefix_.assign(k + 1, Matrix::identity(n));
        for (std::size_t i = 0; i < k; ++i) prefix_[i + 1] = exps_[i] * prefix_[i];
        suffix_.assign(k + 1, Matrix::identity(n));
        for (std::size_t i = k; i-- > 0;) suffix_[i] = suffix_[i + 1] * exps_[i];
    }

    [[nodiscard]] const Matrix& total() const noexcept { return prefix_.back(); }
    [[nodiscard]] std::size_t arc_count() const noexcept { return arcs_.size(); }
    [[nodiscard]] const std::vector<Arc>& arc_list() const noexcept { return arcs_; }
    [[nodiscard]] const std::vector<double>& arc_starts() const noexcept { return starts_; }
    [[nodiscard]] const Matrix& arc_generator(std::size_t i) const { return generators_.at(i); }
    [[nodiscard]] const Matrix& arc_exponential(std::size_t i) const { return exps_.at(i); }
    /// C(s_i, 0) where s_i is the start of arc i (i = arc_count() gives T).
    [[nodiscard]] const Matrix& prefix(std::size_t i) const { return prefix_.at(i); }
    /// C(T, s_i).
    [[nodiscard]] const Matrix& suffix(std::size_t i) const { return suffix_.at(i); }

    /// Index of the arc containing t (the later arc at a boundary).
    [[nodiscard]] std::size_t arc_index(double t) const {
        check_time(t);
        const auto it = std::upper_bound(starts_.begin() + 1, starts_.end() - 1, t);
        return static_cast<std::size_t>(it - (starts_.begin() + 1));
    }

    /// C(t, 0).
    [[nodiscard]] Matrix from_start(double t) const {
        const std::size_t i = arc_index(t);
        const double dt = t - starts_[i];
        if (dt <= 0.0) return prefix_[i];
        return expm(generators_[i] * dt) * prefix_[i];
    }

    /// C(T, t).
    [[nodiscard]] Matrix to_end(double t) const {
        const std::size_t i = arc_index(t);
        const double dt = starts_[i + 1] - t;
        if (dt <= 0.0) return suffix_[i + 1];
        return suffix_[i + 1] * expm(generators_[i] * dt);
    }

private:
    void check_time(double t) const {
        if (!(t >= 0.0 && t <= sys_.horizon * (1.0 + 1e-14))) {
            throw invalid_interval_error("time " + std::to_string(t) + " outside [0, T]");
        }
    }

    PBCSystem sys_;
    std::vector<Arc> arcs_;
    std::vector<double> starts_;
    std::vector<Matrix> generators_;
    std::vector<Matrix> exps_;
    std::vector<Matrix> prefix_;
    std::vector<Matrix> suffix_;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
};

/// x(t) = C(t, 0, u) x0 on the given sample times.
[[nodiscard]] inline Trajectory simulate(const PBCSystem& sys, const Control& u, const Vector& x0,
                                         const std::vector<double>& grid) {
    if (x0.size() != sys.dimension()) throw dimension_error("simulate: x0 has wrong length");
    const TransitionCache cache(sys, u);
    Trajectory traj;
    traj.times = grid;
    traj.states.reserve(grid.size());
    for (double t : grid) traj.states.push_back(cache.from_start(t) * x0);
    return traj;
}

}  // namespace pbcs
